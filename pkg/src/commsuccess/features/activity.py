"""Volume/speed features and Gini-based distribution-of-activity features."""

from __future__ import annotations

from collections import Counter

import numpy as np

from commsuccess.features.vector import FeatureVector
from commsuccess.ingest import COMMENT, DAY, POST, EarlyWindow, Event


def gini(x) -> float:
    """Gini coefficient via the sorted-rank identity, O(n log n).

    Equal to ``sum_ij |x_i - x_j| / (2 n sum_i x_i)``; bounded above by
    (n-1)/n. An all-zero vector returns 0.
    """
    x = np.sort(np.asarray(x, dtype=np.float64).ravel())
    n = x.size
    if n == 0:
        raise ValueError("gini of an empty vector")
    if np.any(x < 0):
        raise ValueError("gini requires non-negative values")
    total = x.sum()
    if total == 0:
        return 0.0
    ranks = 2.0 * np.arange(1, n + 1) - n - 1
    return float(np.dot(ranks, x) / (n * total))


def gini_pairwise(x) -> float:
    """Literal double-sum Gini, O(n^2). Reference for :func:`gini`."""
    x = np.asarray(x, dtype=np.float64).ravel()
    total = x.sum()
    if total == 0:
        return 0.0
    return float(np.abs(x[:, None] - x[None, :]).sum() / (2 * x.size * total))


def _gaps_days(events: list[Event]) -> np.ndarray:
    times = np.array(sorted(ev.created_at for ev in events), dtype=np.float64)
    return np.diff(times) / DAY


def _reply_counts(w: EarlyWindow) -> Counter:
    return Counter(ev.parent_id for ev in w.events if ev.kind == COMMENT and ev.parent_id)


def _per_member_counts(w: EarlyWindow, kind: str) -> np.ndarray:
    counts = Counter(ev.author for ev in w.events if ev.kind == kind)
    return np.array([counts.get(m, 0) for m in w.members], dtype=np.float64)


def volume_speed_features(w: EarlyWindow) -> FeatureVector:
    fv = FeatureVector(w.community, w.k)
    fam = "volume_speed"
    posts, comments = w.posts, w.comments
    replies = _reply_counts(w)

    fv.add("n_posters", len({p.author for p in posts if not p.is_sentinel}), fam)
    fv.add("n_commenters", len({c.author for c in comments if not c.is_sentinel}), fam)
    fv.add("creation_date", w.created_at / DAY, fam)
    fv.add("n_posts", len(posts), fam)
    if posts:
        fv.add("median_replies_per_post", np.median([replies.get(p.event_id, 0) for p in posts]), fam)
    else:
        fv.add("median_replies_per_post", 0.0, fam, flagged=True)
    fv.add("median_posts_per_user", np.median(_per_member_counts(w, POST)), fam)
    fv.add("median_comments_per_user", np.median(_per_member_counts(w, COMMENT)), fam)
    fv.add("days_to_k", w.days_to_k, fam)
    for name, evs in (("mean_gap_posts_days", posts), ("mean_gap_comments_days", comments)):
        gaps = _gaps_days(evs)
        fv.add(name, gaps.mean() if gaps.size else w.days_to_k, fam)
    return fv


def distribution_features(w: EarlyWindow) -> FeatureVector:
    fv = FeatureVector(w.community, w.k)
    fam = "distribution"
    for name, kind in (("gini_posts_per_user", POST), ("gini_comments_per_user", COMMENT)):
        counts = _per_member_counts(w, kind)
        fv.add(name, gini(counts), fam, flagged=counts.sum() == 0)
    for name, evs in (("gini_post_gaps", w.posts), ("gini_comment_gaps", w.comments)):
        gaps = _gaps_days(evs)
        if gaps.size == 0 or gaps.sum() == 0:
            fv.add(name, 0.0, fam, flagged=True)
        else:
            fv.add(name, gini(gaps), fam)
    return fv
