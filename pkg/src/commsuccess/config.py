"""Study configuration: k sweep, month horizons, model-selection grid, seed."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from commsuccess.errors import ConfigurationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_LAMBDAS = tuple(float(v) for v in np.logspace(-4, 4, 9))


@dataclass(frozen=True)
class Config:
    k_min: int = 10
    k_max: int = 100
    k_step: int = 10
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    folds: int = 10
    seed: int = 0
    split_fraction: float = 0.8
    qualification_days: float = 90.0
    activity_months: int = 12
    survival_months: int = 24
    survival_tail_months: int = 3
    year: int | None = 2014
    correlation_methods: tuple[str, ...] = field(default=("spearman", "kendall"))

    def __post_init__(self):
        if not (1 <= self.k_min <= self.k_max) or self.k_step < 1:
            raise ConfigurationError("need 1 <= k_min <= k_max and k_step >= 1")
        if not self.lambdas or any(lam < 0 for lam in self.lambdas):
            raise ConfigurationError("lambda grid must be non-empty and non-negative")
        if self.folds < 2:
            raise ConfigurationError("folds must be >= 2")
        if not 0 < self.split_fraction < 1:
            raise ConfigurationError("split_fraction must lie in (0, 1)")
        if self.survival_tail_months > self.survival_months:
            raise ConfigurationError("survival tail longer than the survival horizon")

    @property
    def ks(self) -> list[int]:
        return list(range(self.k_min, self.k_max + 1, self.k_step))

    @property
    def months_needed(self) -> int:
        return max(self.activity_months + 1, self.survival_months)

    def replace(self, **changes) -> "Config":
        return Config(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambdas"] = list(self.lambdas)
        d["correlation_methods"] = list(self.correlation_methods)
        return d


def load_config(path: str | Path | None, **overrides) -> Config:
    """Read a flat TOML key/value file; unknown keys are a configuration error."""
    values: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                values = tomllib.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"invalid config {path}: {exc}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(Config)}
    unknown = set(values) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for key in ("lambdas", "correlation_methods"):
        if key in values:
            values[key] = tuple(values[key])
    if "lambdas" in values:
        values["lambdas"] = tuple(float(v) for v in values["lambdas"])
    try:
        return Config(**values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
