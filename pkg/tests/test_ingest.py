import gzip
import io
import json
from collections import Counter

import jsonschema
import pytest
from conftest import T0, at, comment, post, timeline
from hypothesis import given, settings
from hypothesis import strategies as st

from commsuccess.errors import ConfigurationError, DataError
from commsuccess.ingest import (
    DAY,
    EARLY_WINDOW_SCHEMA,
    MONTHLY_ACTIVITY_SCHEMA,
    SENTINEL_AUTHOR,
    Corpus,
    Event,
    build_user_history,
    dedupe,
    extract_early_window,
    monthly_from_dict,
    monthly_partition,
    monthly_to_dict,
    read_dump,
    stream_events,
    window_from_dict,
    window_to_dict,
    write_dump,
)


def _lines(*recs):
    return io.BytesIO(("\n".join(json.dumps(r) for r in recs) + "\n").encode())


COMMENT_REC = {
    "id": "c1", "author": "alice", "subreddit": "s", "created_utc": 1400000000,
    "parent_id": "t3_x", "link_id": "t3_x", "body": "hi", "score": 2,
}
POST_REC = {
    "id": "x", "author": "bob", "subreddit": "s", "created_utc": "1399999999",
    "title": "T", "selftext": "body", "score": 5, "extra": "ignored",
}


class TestStreamEvents:
    def test_comment_field_mapping(self):
        (ev,) = stream_events(_lines(COMMENT_REC), "comments")
        assert (ev.kind, ev.author, ev.parent_id, ev.event_id) == ("comment", "alice", "t3_x", "t1_c1")
        assert ev.created_at == 1400000000 and ev.score == 2 and ev.body == "hi"

    def test_post_numeric_string_timestamp(self):
        (ev,) = stream_events(_lines(POST_REC), "posts")
        assert ev.created_at == 1399999999 and ev.title == "T" and ev.event_id == "t3_x"

    def test_sentinel_author_retained(self):
        recs = [dict(COMMENT_REC, id=f"c{i}", author=a) for i, a in enumerate(["a", SENTINEL_AUTHOR, "b"])]
        evs = list(stream_events(_lines(*recs), "comments"))
        assert len(evs) == 3 and evs[1].is_sentinel and not evs[0].is_sentinel

    def test_truncated_final_line_skipped(self):
        raw = _lines(COMMENT_REC, dict(COMMENT_REC, id="c2")).getvalue() + b'{"id": "c3", "auth'
        diag = Counter()
        evs = list(stream_events(io.BytesIO(raw), "comments", diag))
        assert len(evs) == 2 and diag["skipped"] == 1 and diag["read"] == 2

    def test_missing_field_and_bad_utf8_skipped(self):
        bad = {k: v for k, v in COMMENT_REC.items() if k != "body"}
        raw = _lines(bad).getvalue() + b"\xff\xfe\n"
        diag = Counter()
        assert list(stream_events(io.BytesIO(raw), "comments", diag)) == []
        assert diag["skipped"] == 2

    def test_unknown_format(self):
        with pytest.raises(ConfigurationError):
            list(stream_events(_lines(), "votes"))

    def test_unreadable_source(self, tmp_path):
        with pytest.raises(DataError):
            read_dump(tmp_path / "missing.ndjson", "posts")

    @pytest.mark.parametrize("suffix", [".ndjson", ".ndjson.gz", ".ndjson.zst"])
    def test_round_trip_compressions(self, tmp_path, suffix):
        events = [post("p1", "a", 0, body="x y"), comment("c1", "b", 1, "p1", body="z")]
        if suffix.endswith(".zst"):
            zstd = pytest.importorskip("zstandard")
            plain = tmp_path / "posts.ndjson"
            write_dump(events, plain, "post")
            (tmp_path / f"posts{suffix}").write_bytes(zstd.ZstdCompressor().compress(plain.read_bytes()))
        else:
            write_dump(events, tmp_path / f"posts{suffix}", "post")
        (ev,) = read_dump(tmp_path / f"posts{suffix}", "posts")
        assert ev == events[0]

    def test_gzip_is_detected_by_extension(self, tmp_path):
        path = tmp_path / "c.ndjson.gz"
        with gzip.open(path, "wt") as fh:
            fh.write(json.dumps(COMMENT_REC) + "\n")
        assert len(read_dump(path, "comments")) == 1


class TestEvent:
    def test_invariants(self):
        with pytest.raises(ValueError):
            Event("t3_a", "post", "a", "c", 1, parent_id="t3_b", title="x")
        with pytest.raises(ValueError):
            Event("t1_a", "comment", "a", "c", 1)
        with pytest.raises(ValueError):
            Event("t3_a", "post", "a", "c", 0, title="x")

    def test_dedupe_keeps_first(self):
        a = post("p", "a", 0, body="first")
        b = post("p", "a", 1, body="second")
        diag = Counter()
        assert dedupe([a, b], diag) == [a] and diag["duplicates"] == 1


class TestTimeline:
    def test_sorted_with_id_tiebreak(self):
        tl = timeline([post("b", "x", 1), post("a", "y", 1), post("c", "z", 0)])
        assert [e.event_id for e in tl.events] == ["t3_c", "t3_a", "t3_b"]
        assert tl.created_at == at(0)


class TestEarlyWindow:
    def test_k2_forced(self):
        tl = timeline([post("1", "a", 0), comment("2", "a", 1, "1"), comment("3", "b", 2, "1")])
        w = extract_early_window(tl, 2)
        assert w.members == ("a", "b") and w.t_k == at(2) and len(w.events) == 3 and w.days_to_k == 2

    def test_rejection_below_k(self):
        tl = timeline([post(str(i), f"u{i}", i) for i in range(9)])
        assert extract_early_window(tl, 10) is None

    def test_rejection_after_90_days(self):
        evs = [post("0", "a", 0), post("1", "b", 90.5)]
        assert extract_early_window(timeline(evs), 2) is None
        assert extract_early_window(timeline([post("0", "a", 0), post("1", "b", 90)]), 2) is not None

    def test_sentinel_not_member(self):
        tl = timeline([post("0", "a", 0), post("1", SENTINEL_AUTHOR, 1), post("2", "b", 2)])
        w = extract_early_window(tl, 2)
        assert SENTINEL_AUTHOR not in w.members and len(w.events) == 3

    def test_bad_k(self):
        with pytest.raises(ConfigurationError):
            extract_early_window(timeline([post("0", "a", 0)]), 0)

    def test_schema_round_trip(self):
        tl = timeline([post("1", "a", 0), comment("2", "b", 1, "1", body="hey")])
        w = extract_early_window(tl, 2)
        d = json.loads(json.dumps(window_to_dict(w)))
        jsonschema.validate(d, EARLY_WINDOW_SCHEMA)
        assert window_from_dict(d) == w


@st.composite
def _timelines(draw):
    n = draw(st.integers(1, 40))
    authors = draw(st.lists(st.sampled_from(["a", "b", "c", "d", "e", "f", SENTINEL_AUTHOR]), min_size=n, max_size=n))
    days = sorted(draw(st.lists(st.floats(0, 150, allow_nan=False), min_size=n, max_size=n)))
    return timeline([post(str(i), a, d) for i, (a, d) in enumerate(zip(authors, days))])


@given(_timelines())
@settings(max_examples=150, deadline=None)
def test_window_monotone_prefix(tl):
    prev = None
    for k in range(1, 7):
        w = extract_early_window(tl, k)
        if w is None:
            prev = "rejected"
            continue
        assert prev != "rejected"
        assert len(w.members) == k and SENTINEL_AUTHOR not in w.members
        assert w.days_to_k <= 90
        assert {e.author for e in w.events if not e.is_sentinel} <= set(w.members)
        if prev is not None:
            assert w.events[: len(prev.events)] == prev.events
        prev = w


class TestMonthlyPartition:
    def test_single_post(self):
        tl = timeline([post("1", "a", 5)])
        months = monthly_partition(tl, at(0), 4)
        assert months[0].posts_count == 1 and all(m.total == 0 for m in months[1:])

    def test_half_open_boundary(self):
        tl = timeline([post("1", "a", 0), post("2", "b", 30)])
        m = monthly_partition(tl, at(0), 2)
        assert (m[0].posts_count, m[1].posts_count) == (1, 1)

    def test_uniform_24(self):
        tl = timeline([post(str(i), "a", 30 * i + 3) for i in range(24)])
        assert [m.total for m in monthly_partition(tl, at(0), 24)] == [1] * 24

    def test_sentinel_counts_not_sets(self):
        tl = timeline([comment("1", SENTINEL_AUTHOR, 1, "x"), post("2", "a", 2)])
        (m,) = monthly_partition(tl, at(0), 1)
        assert m.comments_count == 1 and m.active_users == {"a"}

    def test_schema_round_trip(self):
        tl = timeline([post("1", "a", 0), comment("2", "b", 1, "1")])
        (m,) = monthly_partition(tl, at(0), 1)
        d = monthly_to_dict(m)
        jsonschema.validate(d, MONTHLY_ACTIVITY_SCHEMA)
        assert monthly_from_dict(d) == m

    def test_bad_months(self):
        with pytest.raises(ConfigurationError):
            monthly_partition(timeline([post("1", "a", 0)]), at(0), 0)


@given(st.lists(st.floats(-10, 200, allow_nan=False), min_size=1, max_size=60), st.integers(1, 6))
@settings(max_examples=100, deadline=None)
def test_partition_completeness(days, months):
    tl = timeline([post(str(i), f"u{i % 4}", d) for i, d in enumerate(days)])
    parts = monthly_partition(tl, at(0), months)
    inside = sum(1 for e in tl.events if at(0) <= e.created_at < at(0) + months * 30 * DAY)
    assert sum(m.total for m in parts) == inside


class TestUserHistory:
    def test_queries(self):
        evs = [
            post("1", "u", 0, community="x"),
            post("2", "u", 1, community="y"),
            comment("3", "u", 2, "1", community="z"),
            post("4", SENTINEL_AUTHOR, 3, community="x"),
        ]
        h = build_user_history(evs)
        assert h.first_seen("nobody") is None and h.activities("nobody", 0, 1e12) == []
        assert len(h.activities("u", at(0), at(3))) == 3
        assert h.activities("u", at(0), at(2))[-1].community == "y"
        assert h.activities("u", T0 - 10 * DAY, at(0)) == []
        assert h.first_seen("u") == at(0)
        assert SENTINEL_AUTHOR not in h

    def test_corpus_from_events(self):
        c = Corpus.from_events([post("1", "a", 0, community="x"), post("1", "a", 0, community="x"),
                                post("2", "b", 0, community="y")])
        assert sorted(c.timelines) == ["x", "y"] and c.diagnostics["duplicates"] == 1
        assert len(list(c.events())) == 2
