"""Success measures computed from monthly activity after a community reaches k members."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from commsuccess.errors import ConfigurationError
from commsuccess.ingest import MonthlyActivity

log = logging.getLogger(__name__)

MEASURES = (
    "growth_commenters",
    "growth_posters",
    "retention",
    "survival",
    "avg_posts",
    "avg_comments",
)

ACTIVITY_MONTHS = 12
SURVIVAL_MONTHS = 24
SURVIVAL_TAIL_MONTHS = 3


def growth(monthly: Sequence[MonthlyActivity], which: str) -> int:
    """Number of distinct commenters (or posters) across all supplied months."""
    if which == "commenters":
        sets = [m.commenters for m in monthly]
    elif which == "posters":
        sets = [m.posters for m in monthly]
    else:
        raise ConfigurationError(f"unknown growth kind {which!r}")
    return len(frozenset().union(*sets))


def retention(monthly: Sequence[MonthlyActivity]) -> float:
    """Mean month-over-month retention over the first ``len(monthly) - 1`` months.

    Month i contributes |U_i ∩ U_{i+1}| / |U_i|; months with no active users
    contribute 0 rather than being dropped from the average.
    """
    if len(monthly) < 2:
        raise ConfigurationError("retention needs at least two months")
    terms = len(monthly) - 1
    total = 0.0
    for cur, nxt in zip(monthly[:-1], monthly[1:]):
        active = cur.active_users
        if active:
            total += len(active & nxt.active_users) / len(active)
    return total / terms


def survival(monthly: Sequence[MonthlyActivity], tail: int = SURVIVAL_TAIL_MONTHS) -> tuple[float, bool]:
    """Share of all activity that happens in the last ``tail`` months.

    Returns ``(value, degenerate)``; with no activity at all the value is 0 and
    ``degenerate`` is True.
    """
    total = sum(m.total for m in monthly)
    if total == 0:
        return 0.0, True
    return sum(m.total for m in monthly[-tail:]) / total, False


def activity_average(monthly: Sequence[MonthlyActivity], which: str) -> float:
    if which == "posts":
        counts = [m.posts_count for m in monthly]
    elif which == "comments":
        counts = [m.comments_count for m in monthly]
    else:
        raise ConfigurationError(f"unknown activity kind {which!r}")
    return sum(counts) / len(counts)


@dataclass
class SuccessMeasures:
    growth_commenters: int
    growth_posters: int
    retention: float
    survival: float
    avg_posts: float
    avg_comments: float
    survival_flagged: bool = False

    def as_dict(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in MEASURES}


def success_measures(
    monthly: Sequence[MonthlyActivity],
    activity_months: int = ACTIVITY_MONTHS,
    survival_months: int = SURVIVAL_MONTHS,
    tail_months: int = SURVIVAL_TAIL_MONTHS,
) -> SuccessMeasures:
    """All six measures from one partition starting at t_k.

    ``monthly`` must hold at least ``max(activity_months + 1, survival_months)``
    months; retention uses one month beyond the activity year.
    """
    need = max(activity_months + 1, survival_months)
    if len(monthly) < need:
        raise ConfigurationError(f"need {need} months of activity, got {len(monthly)}")
    year = monthly[:activity_months]
    surv, flagged = survival(monthly[:survival_months], tail_months)
    return SuccessMeasures(
        growth_commenters=growth(year, "commenters"),
        growth_posters=growth(year, "posters"),
        retention=retention(monthly[: activity_months + 1]),
        survival=surv,
        avg_posts=activity_average(year, "posts"),
        avg_comments=activity_average(year, "comments"),
        survival_flagged=flagged,
    )


@dataclass
class LabelSet:
    """Binary labels per community for one measure at one k."""

    measure: str
    k: int
    threshold: float
    labels: dict[str, int]
    diagnostics: list[str] = field(default_factory=list)

    @property
    def n_positive(self) -> int:
        return sum(self.labels.values())


def binarize(values: Mapping[str, float], k: int, measure: str = "") -> LabelSet:
    """Label a community 1 iff its value strictly exceeds the sample median.

    Ties with the median are negative. A class split other than ⌊n/2⌋
    positives is reported in ``diagnostics`` (and logged).
    """
    if len(values) < 2:
        raise ConfigurationError("binarize needs at least two communities")
    ids = sorted(values)
    arr = np.array([values[c] for c in ids], dtype=float)
    med = float(np.median(arr))
    labels = {c: int(v > med) for c, v in zip(ids, arr)}
    out = LabelSet(measure, k, med, labels)
    n_pos = out.n_positive
    if n_pos == 0:
        out.diagnostics.append(f"{measure} k={k}: all values <= median {med}; no positives")
    elif n_pos != len(ids) // 2:
        out.diagnostics.append(
            f"{measure} k={k}: {n_pos}/{len(ids)} positives due to ties at median {med}"
        )
    for msg in out.diagnostics:
        log.warning("label imbalance: %s", msg)
    return out
