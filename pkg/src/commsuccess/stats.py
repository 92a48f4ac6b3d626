"""Rank correlations between success measures and mean-reciprocal-rank feature ranking."""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as sps

from commsuccess.errors import ConfigurationError

log = logging.getLogger(__name__)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average ranks. NaN when either side has no rank variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("spearman needs two equal-length samples of size >= 2")
    rx = sps.rankdata(x) - (x.size + 1) / 2.0
    ry = sps.rankdata(y) - (y.size + 1) / 2.0
    sxx = float(np.dot(rx, rx))
    syy = float(np.dot(ry, ry))
    if sxx == 0.0 or syy == 0.0:
        return math.nan
    return float(np.clip(np.dot(rx, ry) / math.sqrt(sxx * syy), -1.0, 1.0))


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> float:
    """Kendall tau-b (tie-corrected). NaN when either side is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("kendall_tau needs two equal-length samples of size >= 2")
    if np.all(x == x[0]) or np.all(y == y[0]):
        return math.nan
    return float(sps.kendalltau(x, y, variant="b").statistic)


METHODS = {"spearman": spearman, "kendall": kendall_tau}


@dataclass
class CorrelationMatrix:
    measures: list[str]
    matrix: np.ndarray
    method: str
    k: int | None = None
    diagnostics: list[str] = field(default_factory=list)

    def pairs(self) -> list[tuple[str, str, float]]:
        """Upper-triangle entries, NaN (degenerate) entries excluded."""
        out = []
        for i, j in itertools.combinations(range(len(self.measures)), 2):
            v = self.matrix[i, j]
            if not math.isnan(v):
                out.append((self.measures[i], self.measures[j], float(v)))
        return out

    def __getitem__(self, key: tuple[str, str]) -> float:
        a, b = key
        return float(self.matrix[self.measures.index(a), self.measures.index(b)])


def correlation_matrix(
    columns: Mapping[str, Sequence[float]], method: str = "spearman", k: int | None = None
) -> CorrelationMatrix:
    """Pairwise rank correlation of measure columns (all columns aligned on the same communities)."""
    if method not in METHODS:
        raise ConfigurationError(f"unknown correlation method {method!r}")
    names = list(columns)
    n = len(names)
    if any(len(columns[c]) < 2 for c in names):
        raise ConfigurationError("correlation needs at least two communities")
    fn = METHODS[method]
    mat = np.eye(n)
    out = CorrelationMatrix(names, mat, method, k)
    for i, j in itertools.combinations(range(n), 2):
        v = fn(columns[names[i]], columns[names[j]])
        mat[i, j] = mat[j, i] = v
        if math.isnan(v):
            msg = f"{method} undefined for {names[i]} vs {names[j]} (constant column)"
            out.diagnostics.append(msg)
            log.warning(msg)
    return out


def average_matrices(mats: Sequence[CorrelationMatrix]) -> CorrelationMatrix:
    """Entry-wise mean over k of per-k coefficients, ignoring undefined entries."""
    if not mats:
        raise ConfigurationError("nothing to average")
    names = mats[0].measures
    stack = np.stack([m.matrix for m in mats])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(stack, axis=0)
    return CorrelationMatrix(list(names), mean, mats[0].method, None)


@dataclass(frozen=True)
class RankedFeature:
    name: str
    mrr: float
    mean_coefficient: float


def magnitude_ranking(coefs: Mapping[str, float]) -> list[str]:
    """Features by descending |coefficient|; ties by name."""
    return sorted(coefs, key=lambda f: (-abs(coefs[f]), f))


def mrr_ranking(per_k_coefs: Sequence[Mapping[str, float]]) -> list[RankedFeature]:
    """Aggregate per-k coefficient rankings by mean reciprocal rank.

    Args:
        per_k_coefs: one ``{feature: standardized coefficient}`` mapping per k.

    Returns:
        Features sorted by descending MRR (ties alphabetical), with the mean
        signed coefficient across k.
    """
    if not per_k_coefs:
        raise ConfigurationError("mrr_ranking needs at least one ranking")
    names = set(per_k_coefs[0])
    for coefs in per_k_coefs[1:]:
        if set(coefs) != names:
            raise ConfigurationError("feature sets differ between k values")
    recip: dict[str, float] = {f: 0.0 for f in names}
    for coefs in per_k_coefs:
        for rank, f in enumerate(magnitude_ranking(coefs), start=1):
            recip[f] += 1.0 / rank
    m = len(per_k_coefs)
    ranked = [
        RankedFeature(f, recip[f] / m, float(np.mean([c[f] for c in per_k_coefs])))
        for f in names
    ]
    ranked.sort(key=lambda r: (-r.mrr, r.name))
    return ranked
