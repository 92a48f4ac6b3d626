import pytest
from conftest import comment, post, timeline
from hypothesis import given, settings
from hypothesis import strategies as st

from commsuccess.features import user_composition_features
from commsuccess.ingest import DAY, Event, build_user_history, extract_early_window


def _setup(prior):
    """Focal community 'f' joined by a, b, c on days 100, 101, 102; ``prior`` adds history."""
    focal = [post("f1", "a", 100, community="f"), comment("f2", "b", 101, "f1", community="f"),
             comment("f3", "c", 102, "f1", community="f")]
    evs = focal + prior
    w = extract_early_window(timeline(focal, "f"), 3)
    return w, build_user_history(evs)


def test_all_new():
    w, h = _setup([])
    fv = user_composition_features(w, h)
    assert fv["fraction_new_users"] == 1.0 and fv["median_days_on_site"] == 0.0
    assert fv["median_prior_post_score"] == 0.0 and "median_prior_post_score" in fv.flagged


def test_activity_counts_0_0_4():
    prior = [post(f"x{i}", "c", 90 + i, community="x", score=2 * i) for i in range(4)]
    w, h = _setup(prior)
    fv = user_composition_features(w, h)
    assert fv["fraction_new_users"] == pytest.approx(2 / 3)
    assert fv["median_prior_activity_count"] == 0
    # c alone has prior posts, mean score 3
    assert fv["median_prior_post_score"] == 3.0 and fv["std_prior_post_score"] == 0.0
    assert "median_prior_comment_score" in fv.flagged


def test_days_on_site_not_windowed():
    w, h = _setup([post("old", "a", 0, community="x")])
    fv = user_composition_features(w, h)
    # a was first seen 100 days before joining but not in the prior 30 days
    assert fv["fraction_new_users"] == 1.0
    assert fv["median_days_on_site"] == 0.0
    w, h = _setup([post("o1", "a", 0, community="x"), post("o2", "b", 1, community="x")])
    assert user_composition_features(w, h)["median_days_on_site"] == 100.0


def test_focal_community_excluded():
    # b's activity in the focal community before b's join is not prior history
    focal = [post("f1", "a", 100, community="f"), post("f0", "b", 100.5, community="f"),
             comment("f3", "c", 102, "f1", community="f")]
    w = extract_early_window(timeline(focal, "f"), 3)
    h = build_user_history(focal)
    assert user_composition_features(w, h)["fraction_new_users"] == 1.0


def _brute(w, h):
    """Per-member recomputation straight from the event list."""
    out = []
    for m in w.members:
        join = w.join_times[m]
        acts = [a for a in h.log(m) if join - 30 * DAY <= a.created_at < join and a.community != w.community]
        out.append(len(acts))
    return out


@given(st.lists(st.tuples(st.sampled_from("abcde"), st.floats(0, 120), st.sampled_from("xyz")), max_size=30),
       st.integers(-10**6, 10**6))
@settings(max_examples=100, deadline=None)
def test_brute_force_and_translation(history, shift):
    focal_days = {m: 100 + i for i, m in enumerate("abcde")}
    focal = [post(f"f{m}", m, d, community="f") for m, d in focal_days.items()]
    prior = [post(f"h{i}", m, d, community=c, score=i) for i, (m, d, c) in enumerate(history)]
    w = extract_early_window(timeline(focal, "f"), 5)
    h = build_user_history(focal + prior)
    fv = user_composition_features(w, h)
    counts = _brute(w, h)
    assert fv["fraction_new_users"] == sum(c == 0 for c in counts) / 5
    assert 0 <= fv["fraction_new_users"] <= 1

    def moved(e):
        return Event(e.event_id, e.kind, e.author, e.community, e.created_at + shift * 60, e.body, e.score, e.title)

    focal2 = [moved(e) for e in focal]
    w2 = extract_early_window(timeline(focal2, "f"), 5)
    h2 = build_user_history(focal2 + [moved(e) for e in prior])
    assert user_composition_features(w2, h2).values == fv.values
