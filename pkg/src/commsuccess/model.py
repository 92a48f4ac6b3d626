"""Standardization, L2 logistic regression, AUC, stratified CV and per-task experiments."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from commsuccess.config import Config
from commsuccess.errors import ConfigurationError, DegenerateStatisticsError
from commsuccess.features.vector import FAMILIES, FeatureVector

log = logging.getLogger(__name__)

GRAD_TOL = 1e-8
MAX_ITER = 10_000
MIN_ROWS = 10


class Standardizer:
    """Per-column centring and scaling fitted on training rows only.

    Zero-variance columns keep scale 1, so they are only centred.
    """

    def fit(self, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        self.scale_ = scale
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z) * self.scale_ + self.mean_

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)


def _signed(y) -> np.ndarray:
    y = np.asarray(y)
    vals = set(np.unique(y).tolist())
    if vals <= {-1, 1}:
        return y.astype(np.float64)
    if vals <= {0, 1}:
        return 2.0 * y.astype(np.float64) - 1.0
    raise ValueError(f"labels must be in {{0, 1}} or {{-1, 1}}, got {sorted(vals)}")


def objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Mean logistic loss plus ``lam * ||w||^2`` (bias unpenalized); ``y`` in {-1, +1}."""
    z = y * (X @ w + b)
    return float(np.mean(np.logaddexp(0.0, -z)) + lam * np.dot(w, w))


def gradient(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    z = y * (X @ w + b)
    r = -y * expit(-z) / y.size
    return X.T @ r + 2.0 * lam * w, float(r.sum())


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    lam: float
    iterations: int
    grad_norm: float
    converged: bool
    loss_history: list[float] = field(default_factory=list, repr=False)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return expit(self.decision_function(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.decision_function(X) > 0, 1, -1)


def train_logistic(
    X: np.ndarray,
    y,
    lam: float,
    tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
    init: tuple[np.ndarray, float] | None = None,
) -> LogisticModel:
    """Fit L2-regularized logistic regression by damped Newton steps.

    Every accepted step passes an Armijo backtracking test, so the objective
    never increases. Stops when the gradient's max-norm is at most ``tol``
    (``converged=True``), after ``max_iter`` iterations, or when the line
    search can no longer make progress.
    """
    X = np.asarray(X, dtype=np.float64)
    y = _signed(y)
    if lam < 0:
        raise ConfigurationError("lambda must be non-negative")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    if np.unique(y).size < 2:
        raise DegenerateStatisticsError("training labels contain a single class")
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    reg = np.full(d + 1, 2.0 * lam)
    reg[-1] = 0.0

    theta = np.zeros(d + 1)
    if init is not None:
        theta[:d], theta[-1] = init[0], init[1]

    def f(t):
        return objective(t[:d], t[-1], X, y, lam)

    def grad(t):
        gw, gb = gradient(t[:d], t[-1], X, y, lam)
        return np.append(gw, gb)

    loss = f(theta)
    history = [loss]
    g = grad(theta)
    converged = False
    it = 0
    while it < max_iter:
        if np.max(np.abs(g)) <= tol:
            converged = True
            break
        z = y * (Xa @ theta)
        s = expit(z) * expit(-z)
        H = (Xa.T * s) @ Xa / n + np.diag(reg)
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(H, g, rcond=None)[0]
        slope = float(g @ step)
        if slope >= 0:
            step, slope = -g, -float(g @ g)
        t = 1.0
        while True:
            cand = theta + t * step
            cand_loss = f(cand)
            if cand_loss <= loss + 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-12:
                cand = None
                break
        it += 1
        if cand is None:
            break
        theta, loss = cand, cand_loss
        history.append(loss)
        g = grad(theta)
    else:
        converged = bool(np.max(np.abs(g)) <= tol)

    return LogisticModel(
        weights=theta[:d].copy(),
        bias=float(theta[-1]),
        lam=float(lam),
        iterations=it,
        grad_norm=float(np.max(np.abs(g))),
        converged=converged,
        loss_history=history,
    )


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg), ties counted one half."""
    s = np.asarray(scores, dtype=np.float64)
    pos = _signed(labels) > 0
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateStatisticsError("AUC undefined: labels contain a single class")
    ranks = rankdata(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def split(n: int, fraction: float = 0.8, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle into ``floor(fraction * n)`` training and the rest test indices."""
    if n < MIN_ROWS:
        raise ConfigurationError(f"need at least {MIN_ROWS} rows to split, got {n}")
    n_train = int(math.floor(fraction * n + 1e-9))
    if not 0 < n_train < n:
        raise ConfigurationError(f"split fraction {fraction} leaves an empty side for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def stratified_folds(y, folds: int, seed: int = 0) -> np.ndarray:
    """Fold id per row, dealing each class round-robin over one seeded permutation.

    The assignment is symmetric in the two classes: swapping labels leaves
    every row's fold unchanged.
    """
    y = _signed(y)
    counts = {c: int((y == c).sum()) for c in (-1.0, 1.0)}
    smallest = min(counts.values())
    if smallest < 2:
        raise DegenerateStatisticsError(f"a class has {smallest} rows; cannot cross-validate")
    if smallest < folds:
        msg = f"reducing folds from {folds} to {smallest}: smallest class has {smallest} rows"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        log.warning(msg)
        folds = smallest
    order = np.random.default_rng(seed).permutation(y.size)
    fold = np.empty(y.size, dtype=int)
    seen = {-1.0: 0, 1.0: 0}
    for i in order:
        c = y[i]
        fold[i] = seen[c] % folds
        seen[c] += 1
    return fold


def cv_scores(X: np.ndarray, y, lambdas: Sequence[float], folds: int = 10, seed: int = 0) -> dict[float, float]:
    """Mean validation AUC per lambda over stratified folds."""
    X = np.asarray(X, dtype=np.float64)
    y = _signed(y)
    fold = stratified_folds(y, folds, seed)
    grid = sorted(set(float(lam) for lam in lambdas), reverse=True)
    totals = {lam: 0.0 for lam in grid}
    n_folds = int(fold.max()) + 1
    for f in range(n_folds):
        tr, va = fold != f, fold == f
        init = None
        for lam in grid:
            m = train_logistic(X[tr], y[tr], lam, init=init)
            init = (m.weights, m.bias)
            totals[lam] += auc(m.decision_function(X[va]), y[va])
    return {lam: totals[lam] / n_folds for lam in grid}


def cv_grid_search(X: np.ndarray, y, lambdas: Sequence[float], folds: int = 10, seed: int = 0) -> float:
    """Lambda with the best mean CV AUC; ties go to the larger lambda."""
    if len(lambdas) == 1:
        return float(lambdas[0])
    scores = cv_scores(X, y, lambdas, folds, seed)
    best = max(scores.values())
    return max(lam for lam, s in scores.items() if s >= best - 1e-12)


@dataclass
class FeatureTable:
    """Rows of feature vectors for one k, with a mask of flagged (degenerate) entries."""

    ids: list[str]
    names: list[str]
    families: list[str]
    X: np.ndarray
    flagged: np.ndarray

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector]) -> "FeatureTable":
        if not vectors:
            raise ConfigurationError("no feature vectors")
        vectors = sorted(vectors, key=lambda v: v.community)
        names = list(vectors[0].values)
        for v in vectors:
            if list(v.values) != names:
                raise ConfigurationError(f"feature set of {v.community} differs from the first row")
        X = np.array([[v.values[n] for n in names] for v in vectors], dtype=np.float64)
        flagged = np.array([[n in v.flagged for n in names] for v in vectors], dtype=bool)
        return cls([v.community for v in vectors], names, [vectors[0].families[n] for n in names], X, flagged)

    def columns(self, family: str) -> np.ndarray:
        if family == "all":
            return np.arange(len(self.names))
        if family not in FAMILIES:
            raise ConfigurationError(f"unknown feature family {family!r}")
        return np.array([i for i, f in enumerate(self.families) if f == family], dtype=int)

    def subset(self, ids: Sequence[str]) -> "FeatureTable":
        pos = {c: i for i, c in enumerate(self.ids)}
        rows = [pos[c] for c in ids]
        return FeatureTable(list(ids), self.names, self.families, self.X[rows], self.flagged[rows])


def impute_flagged(X_train, F_train, X_other, F_other) -> tuple[np.ndarray, np.ndarray]:
    """Replace flagged entries by the column median of the unflagged training entries."""
    X_train = X_train.copy()
    X_other = X_other.copy()
    for j in range(X_train.shape[1]):
        ok = ~F_train[:, j]
        fill = float(np.median(X_train[ok, j])) if ok.any() else 0.0
        X_train[F_train[:, j], j] = fill
        X_other[F_other[:, j], j] = fill
    return X_train, X_other


@dataclass
class ExperimentResult:
    measure: str
    k: int
    family: str
    auc: float
    lam: float
    seed: int
    n_train: int
    n_test: int
    weights: dict[str, float]
    bias: float
    converged: bool
    cv_auc: float = math.nan

    def row(self) -> dict:
        return {
            "measure": self.measure, "k": self.k, "family": self.family, "auc": self.auc,
            "lambda": self.lam, "cv_auc": self.cv_auc, "seed": self.seed,
            "n_train": self.n_train, "n_test": self.n_test, "converged": int(self.converged),
        }


def run_experiment(
    table: FeatureTable,
    labels: Mapping[str, int],
    measure: str,
    k: int,
    family: str = "all",
    config: Config | None = None,
    seed: int | None = None,
) -> ExperimentResult:
    """split -> impute -> standardize -> CV lambda -> refit -> test AUC."""
    config = config or Config()
    seed = config.seed if seed is None else seed
    ids = [c for c in table.ids if c in labels]
    if len(ids) != len(table.ids):
        raise ConfigurationError(f"{len(table.ids) - len(ids)} feature rows have no label")
    cols = table.columns(family)
    if cols.size == 0:
        raise ConfigurationError(f"family {family!r} has no features")
    X = table.X[:, cols]
    F = table.flagged[:, cols]
    y = np.array([labels[c] for c in table.ids])

    tr, te = split(len(ids), config.split_fraction, seed)
    X_tr, X_te = impute_flagged(X[tr], F[tr], X[te], F[te])
    scaler = Standardizer().fit(X_tr)
    Z_tr, Z_te = scaler.transform(X_tr), scaler.transform(X_te)

    scores = cv_scores(Z_tr, y[tr], config.lambdas, config.folds, seed)
    best = max(scores.values())
    lam = max(lam for lam, s in scores.items() if s >= best - 1e-12)
    model = train_logistic(Z_tr, y[tr], lam)
    names = [table.names[i] for i in cols]
    return ExperimentResult(
        measure=measure,
        k=k,
        family=family,
        auc=auc(model.decision_function(Z_te), y[te]),
        lam=lam,
        seed=seed,
        n_train=int(tr.size),
        n_test=int(te.size),
        weights=dict(zip(names, model.weights.tolist())),
        bias=model.bias,
        converged=model.converged,
        cv_auc=scores[lam],
    )
