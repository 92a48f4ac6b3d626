"""User-composition features from members' activity before they joined."""

from __future__ import annotations

import numpy as np

from commsuccess.features.vector import FeatureVector
from commsuccess.ingest import COMMENT, DAY, POST, EarlyWindow, UserHistoryIndex

PRIOR_DAYS = 30


def member_prior_profile(w: EarlyWindow, h: UserHistoryIndex, member: str) -> dict:
    """Pre-join summary for one member.

    The prior window is the 30 days before the member's own first event in the
    focal community; the focal community's events are ignored. ``days_on_site``
    is not windowed.
    """
    join = w.join_times[member]
    prior = [a for a in h.activities(member, join - PRIOR_DAYS * DAY, join) if a.community != w.community]
    post_scores = [a.score for a in prior if a.kind == POST]
    comment_scores = [a.score for a in prior if a.kind == COMMENT]
    first = h.first_seen(member)
    return {
        "post_score": float(np.mean(post_scores)) if post_scores else None,
        "comment_score": float(np.mean(comment_scores)) if comment_scores else None,
        "activity_count": len(prior),
        "days_on_site": (join - first) / DAY if first is not None and first < join else 0.0,
    }


def _median_std(vals: list[float]) -> tuple[float, float, bool]:
    if not vals:
        return 0.0, 0.0, True
    arr = np.asarray(vals, dtype=np.float64)
    return float(np.median(arr)), float(arr.std()), False


def user_composition_features(w: EarlyWindow, h: UserHistoryIndex) -> FeatureVector:
    fv = FeatureVector(w.community, w.k)
    fam = "user_composition"
    profiles = [member_prior_profile(w, h, m) for m in w.members]

    for key in ("post_score", "comment_score"):
        med, std, missing = _median_std([p[key] for p in profiles if p[key] is not None])
        fv.add(f"median_prior_{key}", med, fam, flagged=missing)
        fv.add(f"std_prior_{key}", std, fam, flagged=missing)

    counts = np.array([p["activity_count"] for p in profiles], dtype=np.float64)
    fv.add("median_prior_activity_count", np.median(counts), fam)
    fv.add("std_prior_activity_count", counts.std(), fam)
    fv.add("median_days_on_site", np.median([p["days_on_site"] for p in profiles]), fam)
    fv.add("fraction_new_users", float(np.mean(counts == 0)), fam)
    return fv
