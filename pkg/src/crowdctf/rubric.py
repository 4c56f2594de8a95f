"""Rubric configuration, self-assessment totals, and collaboration policy.

A rubric gives every flag kind a base value plus ordered criteria, each
with strictly increasing level points. Submitters pick one level per
criterion; judges may award any total in [0, max_points(kind)].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml

from .errors import ValidationError
from .model import FlagKind


@dataclass
class Level:
    id: str
    label: str
    points: int


@dataclass
class Criterion:
    id: str
    label: str
    levels: list[Level]

    def validate(self) -> None:
        if len(self.levels) < 2:
            raise ValidationError(f"criterion {self.id} needs at least 2 levels")
        pts = [lv.points for lv in self.levels]
        if any(p < 0 for p in pts):
            raise ValidationError(f"criterion {self.id} has negative level points")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValidationError(f"criterion {self.id} level points must strictly increase")
        if len({lv.id for lv in self.levels}) != len(self.levels):
            raise ValidationError(f"criterion {self.id} has duplicate level ids")

    @property
    def max_level_points(self) -> int:
        return self.levels[-1].points


@dataclass
class KindRubric:
    base_points: int
    criteria: list[Criterion] = field(default_factory=list)


@dataclass
class RubricConfig:
    id: str
    kinds: dict[FlagKind, KindRubric]

    def validate(self) -> None:
        for kind in FlagKind:
            if kind not in self.kinds:
                raise ValidationError(f"rubric missing flag kind {kind.value}")
        for kind, kr in self.kinds.items():
            if kr.base_points < 0:
                raise ValidationError(f"{kind.value} base_points must be non-negative")
            ids = [c.id for c in kr.criteria]
            if len(set(ids)) != len(ids):
                raise ValidationError(f"{kind.value} has duplicate criterion ids")
            for c in kr.criteria:
                c.validate()
            if self.max_points(kind) <= 0:
                raise ValidationError(f"{kind.value} maximum points must be positive")

    def max_points(self, kind: FlagKind) -> int:
        kr = self.kinds[kind]
        return kr.base_points + sum(c.max_level_points for c in kr.criteria)

    def claimed_points(self, kind: FlagKind, selections: dict[str, str]) -> int:
        """Total a self-assessment claims; every criterion must be selected."""
        kr = self.kinds[kind]
        total = kr.base_points
        seen = set()
        for c in kr.criteria:
            if c.id not in selections:
                raise ValidationError(f"missing selection for criterion {c.id}")
            level_id = selections[c.id]
            match = next((lv for lv in c.levels if lv.id == level_id), None)
            if match is None:
                raise ValidationError(f"unknown level {level_id} for criterion {c.id}")
            total += match.points
            seen.add(c.id)
        extra = set(selections) - seen
        if extra:
            raise ValidationError(f"unknown criteria selected: {sorted(extra)}")
        return total

    def scaled(self, k: int) -> "RubricConfig":
        """Uniformly scale every point value by a positive integer."""
        if k <= 0:
            raise ValidationError("scale factor must be positive")
        return RubricConfig(
            id=f"{self.id}-x{k}",
            kinds={
                kind: KindRubric(
                    base_points=kr.base_points * k,
                    criteria=[
                        Criterion(
                            id=c.id,
                            label=c.label,
                            levels=[Level(lv.id, lv.label, lv.points * k) for lv in c.levels],
                        )
                        for c in kr.criteria
                    ],
                )
                for kind, kr in self.kinds.items()
            },
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            kind.value: {
                "base_points": kr.base_points,
                "criteria": [
                    {
                        "id": c.id,
                        "label": c.label,
                        "levels": [
                            {"id": lv.id, "label": lv.label, "points": lv.points}
                            for lv in c.levels
                        ],
                    }
                    for c in kr.criteria
                ],
            }
            for kind, kr in self.kinds.items()
        }

    @staticmethod
    def from_dict(doc: dict[str, Any], rubric_id: str = "rubric") -> "RubricConfig":
        if not isinstance(doc, dict):
            raise ValidationError("rubric document must be a key/value tree")
        kinds: dict[FlagKind, KindRubric] = {}
        for key, val in doc.items():
            try:
                kind = FlagKind(key)
            except ValueError:
                raise ValidationError(f"unknown flag kind in rubric: {key}")
            criteria = []
            for cdoc in val.get("criteria", []):
                criteria.append(
                    Criterion(
                        id=str(cdoc["id"]),
                        label=str(cdoc.get("label", cdoc["id"])),
                        levels=[
                            Level(str(l["id"]), str(l.get("label", l["id"])), int(l["points"]))
                            for l in cdoc.get("levels", [])
                        ],
                    )
                )
            kinds[kind] = KindRubric(base_points=int(val.get("base_points", 0)), criteria=criteria)
        rubric = RubricConfig(id=rubric_id, kinds=kinds)
        rubric.validate()
        return rubric


def load_rubric_file(path: str | Path, rubric_id: str = "rubric") -> RubricConfig:
    """Read a rubric from a YAML (or JSON, a YAML subset) file."""
    text = Path(path).read_text()
    doc = yaml.safe_load(text)
    return RubricConfig.from_dict(doc, rubric_id=rubric_id)


@dataclass
class CollabPolicy:
    """Cross-team contribution bonus: a fixed amount or a fraction of the award."""

    id: str
    mode: str  # "fixed" | "multiplier"
    amount: int = 0
    fraction: Fraction = Fraction(0)
    enabled: bool = True

    def validate(self) -> None:
        if self.mode not in ("fixed", "multiplier"):
            raise ValidationError("collab policy mode must be fixed or multiplier")
        if self.mode == "fixed" and self.amount < 0:
            raise ValidationError("fixed bonus amount must be non-negative")
        if self.mode == "multiplier" and not (0 <= self.fraction <= 1):
            raise ValidationError("multiplier fraction must be in [0, 1]")

    def bonus_for(self, awarded_points: int) -> int:
        if not self.enabled:
            return 0
        if self.mode == "fixed":
            return self.amount
        # round half-up to whole points
        return int((self.fraction * awarded_points + Fraction(1, 2)).__floor__())

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "amount": self.amount,
            "fraction": str(self.fraction),
            "enabled": self.enabled,
        }

    @staticmethod
    def from_dict(doc: dict[str, Any], policy_id: str = "policy") -> "CollabPolicy":
        policy = CollabPolicy(
            id=policy_id,
            mode=doc.get("mode", "multiplier"),
            amount=int(doc.get("amount", 0)),
            fraction=Fraction(str(doc.get("fraction", "1/4"))),
            enabled=bool(doc.get("enabled", True)),
        )
        policy.validate()
        return policy


def default_collab_policy(policy_id: str = "policy-default") -> CollabPolicy:
    # quarter of the awarded points, rounded half-up
    return CollabPolicy(id=policy_id, mode="multiplier", fraction=Fraction(1, 4), enabled=True)


def flat_rubric(points_per_kind: int = 20, rubric_id: str = "rubric-flat") -> RubricConfig:
    """Every kind worth the same fixed value, no criteria."""
    return RubricConfig(
        id=rubric_id,
        kinds={kind: KindRubric(base_points=points_per_kind) for kind in FlagKind},
    )


def _three_levels(prefix: str, low: int, mid: int, high: int) -> list[Level]:
    return [
        Level(f"{prefix}-low", "low", low),
        Level(f"{prefix}-mid", "medium", mid),
        Level(f"{prefix}-high", "high", high),
    ]


def default_rubric(rubric_id: str = "rubric-default") -> RubricConfig:
    """Rubric shipped with the repo.

    Discovery is graded on originality, influence, and recency; archival is a
    flat 50; verification maxes out near five discoveries' worth; reporting
    sits between. Level numbers are repo configuration, tunable per event.
    """
    discovery = KindRubric(
        base_points=20,
        criteria=[
            Criterion("originality", "originality", _three_levels("orig", 0, 15, 30)),
            Criterion("influence", "influence", _three_levels("infl", 0, 15, 30)),
            Criterion("recency", "recency", _three_levels("rec", 0, 10, 20)),
        ],
    )
    verification = KindRubric(
        base_points=100,
        criteria=[
            Criterion("rigor", "rigor of the verification process", _three_levels("rig", 0, 100, 200)),
            Criterion("sources", "independence of sources", _three_levels("src", 0, 50, 100)),
            Criterion("difficulty", "difficulty", _three_levels("dif", 0, 50, 100)),
        ],
    )
    reporting = KindRubric(
        base_points=50,
        criteria=[
            Criterion("completeness", "completeness", _three_levels("comp", 0, 50, 100)),
            Criterion("clarity", "clarity", _three_levels("clar", 0, 25, 50)),
        ],
    )
    rubric = RubricConfig(
        id=rubric_id,
        kinds={
            FlagKind.DISCOVERY: discovery,
            FlagKind.ARCHIVAL: KindRubric(base_points=50),
            FlagKind.VERIFICATION: verification,
            FlagKind.REPORTING: reporting,
        },
    )
    rubric.validate()
    return rubric
