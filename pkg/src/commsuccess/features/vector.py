"""Named, family-tagged feature values for one community at one k."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

FAMILIES = (
    "volume_speed",
    "distribution",
    "user_composition",
    "linguistic",
    "social",
    "parents",
)


@dataclass
class FeatureVector:
    community: str
    k: int
    values: dict[str, float] = field(default_factory=dict)
    families: dict[str, str] = field(default_factory=dict)
    flagged: set[str] = field(default_factory=set)

    def add(self, name: str, value: float, family: str, flagged: bool = False) -> None:
        if family not in FAMILIES:
            raise ValueError(f"unknown feature family {family!r}")
        value = float(value)
        if not math.isfinite(value):
            # degenerate inputs must be handled by the caller; never leak NaN/inf
            raise ValueError(f"non-finite value for feature {name!r}")
        self.values[name] = value
        self.families[name] = family
        if flagged:
            self.flagged.add(name)

    def update(self, other: "FeatureVector") -> "FeatureVector":
        for name, value in other.values.items():
            self.add(name, value, other.families[name], name in other.flagged)
        return self

    def family(self, fam: str) -> dict[str, float]:
        return {n: v for n, v in self.values.items() if self.families[n] == fam}

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values
