import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commsuccess.errors import ConfigurationError
from commsuccess.ingest import MonthlyActivity
from commsuccess.success import (
    activity_average,
    binarize,
    growth,
    retention,
    success_measures,
    survival,
)


def month(i, posters=(), commenters=(), posts=None, comments=None):
    return MonthlyActivity(
        i,
        len(posters) if posts is None else posts,
        len(commenters) if comments is None else comments,
        frozenset(posters),
        frozenset(commenters),
    )


def months(n, **kw):
    return [month(i + 1, **kw) for i in range(n)]


class TestGrowth:
    def test_union(self):
        ms = [month(1, commenters="ab"), month(2, commenters="bc")] + months(10)
        assert growth(ms, "commenters") == 3

    def test_empty(self):
        assert growth(months(12), "posters") == 0

    def test_idempotent(self):
        assert growth(months(12, commenters="abcde"), "commenters") == 5

    def test_bad_which(self):
        with pytest.raises(ConfigurationError):
            growth(months(12), "lurkers")


class TestRetention:
    def test_half(self):
        # ten users per month, five stay into the next month
        ms = []
        for i in range(13):
            ms.append(month(i + 1, posters=[f"u{5 * i + j}" for j in range(10)]))
        assert retention(ms) == 0.5

    def test_identical(self):
        assert retention(months(13, posters="abc")) == 1.0

    def test_disjoint(self):
        assert retention([month(i + 1, posters=[f"u{i}"]) for i in range(13)]) == 0.0

    def test_dead_month_counts_zero(self):
        ms = months(13, posters="ab")
        ms[3] = month(4)
        ms[2] = month(3, posters="ab")
        assert retention(ms) == pytest.approx(10 / 12)


class TestSurvival:
    def test_uniform(self):
        assert survival(months(24, posts=1)) == (0.125, False)

    def test_early_only(self):
        ms = [month(i + 1, posts=5 if i < 3 else 0) for i in range(24)]
        assert survival(ms) == (0.0, False)

    def test_late_only(self):
        ms = [month(i + 1, comments=2 if i >= 21 else 0) for i in range(24)]
        assert survival(ms) == (1.0, False)

    def test_zero_total_flagged(self):
        assert survival(months(24)) == (0.0, True)


class TestActivityAverage:
    def test_examples(self):
        assert activity_average([month(1, posts=12)] + months(11), "posts") == 1.0
        assert activity_average(months(12, comments=7), "comments") == 7.0
        assert activity_average([month(i + 1, posts=i + 1) for i in range(12)], "posts") == 6.5


def test_success_measures_needs_horizon():
    with pytest.raises(ConfigurationError):
        success_measures(months(20))
    s = success_measures(months(24, posters="a", commenters="b"))
    assert (s.growth_posters, s.growth_commenters, s.retention, s.survival) == (1, 1, 1.0, 0.125)


class TestBinarize:
    def test_even(self):
        ls = binarize({"a": 1, "b": 2, "c": 3, "d": 4}, 10)
        assert ls.threshold == 2.5 and [ls.labels[c] for c in "abcd"] == [0, 0, 1, 1]

    def test_ties_negative(self):
        ls = binarize({"a": 1, "b": 2, "c": 2, "d": 3}, 10)
        assert ls.threshold == 2 and [ls.labels[c] for c in "abcd"] == [0, 0, 0, 1]
        assert ls.diagnostics

    def test_all_equal(self):
        ls = binarize({c: 5.0 for c in "abcdef"}, 10, "retention")
        assert ls.n_positive == 0 and ls.diagnostics

    def test_too_few(self):
        with pytest.raises(ConfigurationError):
            binarize({"a": 1.0}, 10)


@given(
    st.lists(st.integers(0, 10**6), min_size=2, max_size=60),
    st.floats(1e-3, 1e3),
)
@settings(max_examples=200, deadline=None)
def test_scale_covariance(values, c):
    vals = {f"x{i}": v for i, v in enumerate(values)}
    scaled = {k: v * c for k, v in vals.items()}
    a, b = binarize(vals, 10), binarize(scaled, 10)
    # integer-valued measures stay well separated after scaling
    assert a.labels == b.labels


@given(st.lists(st.integers(-10**6, 10**6), min_size=2, max_size=80, unique=True))
@settings(max_examples=200, deadline=None)
def test_tie_free_balance(values):
    ls = binarize({f"x{i}": v for i, v in enumerate(values)}, 10)
    assert ls.n_positive == len(values) // 2 and not ls.diagnostics


@given(st.lists(st.lists(st.sampled_from("abcdefgh"), max_size=5), min_size=24, max_size=24))
@settings(max_examples=100, deadline=None)
def test_measure_bounds(sets):
    ms = [month(i + 1, posters=s[:2], commenters=s[2:]) for i, s in enumerate(sets)]
    s = success_measures(ms)
    assert 0 <= s.retention <= 1 and 0 <= s.survival <= 1
    seen = set().union(*map(set, sets[:12]))
    assert s.growth_posters <= len(seen) and s.growth_commenters <= len(seen)
    assert not math.isnan(s.avg_posts)
