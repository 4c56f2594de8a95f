"""Event- and team-level metrics derived from flags, judgments, and the ledger.

All tallies are exact integers; percentages are only rounded at the
formatting edge (half-up, 1 decimal for event rates, 2 decimals for team
percentages). Exports are byte-stable on identical input.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Any

from .errors import ValidationError
from .ledger import SOURCE_COLLAB, SOURCE_FLAG, SOURCE_TASK
from .model import FlagKind, FlagStatus, Verdict
from .engine import Engine


def percent(numerator: int, denominator: int) -> float | None:
    if denominator == 0:
        return None
    return numerator / denominator * 100.0


def fmt_percent(numerator: int, denominator: int, decimals: int) -> str:
    if denominator == 0:
        return "n/a"
    value = Decimal(numerator) * 100 / Decimal(denominator)
    quantum = Decimal(1).scaleb(-decimals)
    return str(value.quantize(quantum, rounding=ROUND_HALF_UP))


def fmt_ratio(numerator: int, denominator: int, decimals: int = 2) -> str:
    if denominator == 0:
        return "n/a"
    value = Decimal(numerator) / Decimal(denominator)
    quantum = Decimal(1).scaleb(-decimals)
    return str(value.quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass
class EventMetrics:
    event_id: str
    total_flags: int
    approved: int
    rejected: int
    pending: int
    verification_flags: int
    approved_verification_flags: int
    misinfo_flags: int
    total_evidence: int

    @property
    def approval_rate(self) -> float | None:
        return percent(self.approved, self.total_flags)

    @property
    def pct_misinfo(self) -> float | None:
        # refuting verdicts among approved verification flags
        return percent(self.misinfo_flags, self.approved_verification_flags)

    @property
    def flags_per_evidence(self) -> float | None:
        if self.total_evidence == 0:
            return None
        return self.total_flags / self.total_evidence

    def to_dict(self) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "total_flags": self.total_flags,
            "approved": self.approved,
            "rejected": self.rejected,
            "pending": self.pending,
            "approval_rate": fmt_percent(self.approved, self.total_flags, 1),
            "verification_flags": self.verification_flags,
            "approved_verification_flags": self.approved_verification_flags,
            "misinfo_flags": self.misinfo_flags,
            "pct_misinfo": fmt_percent(self.misinfo_flags, self.approved_verification_flags, 2),
            "total_evidence": self.total_evidence,
            "flags_per_evidence": fmt_ratio(self.total_flags, self.total_evidence, 2),
        }


@dataclass
class TeamMetrics:
    team_id: str
    team_name: str
    rank: int
    total_points: int
    collab_points: int  # base + bonus of cross-team flags
    collab_bonus_points: int  # bonus portion only, exposed alongside
    task_points: int
    points_by_kind: dict[str, int] = field(default_factory=dict)

    @property
    def pct_collab(self) -> float | None:
        return percent(self.collab_points, self.total_points)

    @property
    def pct_tasks(self) -> float | None:
        return percent(self.task_points, self.total_points)

    def to_dict(self) -> dict[str, Any]:
        return {
            "team_id": self.team_id,
            "team_name": self.team_name,
            "rank": self.rank,
            "total_points": self.total_points,
            "collab_points": self.collab_points,
            "collab_bonus_points": self.collab_bonus_points,
            "task_points": self.task_points,
            "pct_collab": fmt_percent(self.collab_points, self.total_points, 2),
            "pct_collab_bonus_only": fmt_percent(self.collab_bonus_points, self.total_points, 2),
            "pct_tasks": fmt_percent(self.task_points, self.total_points, 2),
            "pct_by_kind": {
                kind: fmt_percent(points, self.total_points, 2)
                for kind, points in sorted(self.points_by_kind.items())
            },
        }


@dataclass
class LatencyStats:
    event_id: str
    judged_count: int
    mean_minutes: float | None
    median_minutes: float | None
    p90_minutes: float | None
    per_judge_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        def fmt(v: float | None) -> str:
            return "n/a" if v is None else str(
                Decimal(str(v)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
            )

        return {
            "event_id": self.event_id,
            "judged_count": self.judged_count,
            "mean_minutes": fmt(self.mean_minutes),
            "median_minutes": fmt(self.median_minutes),
            "p90_minutes": fmt(self.p90_minutes),
            "per_judge_counts": dict(sorted(self.per_judge_counts.items())),
        }


def event_metrics(engine: Engine, event_id: str) -> EventMetrics:
    flags = engine.list_flags(event_id)
    verifications = [f for f in flags if f.kind == FlagKind.VERIFICATION]
    approved_verifications = [f for f in verifications if f.status == FlagStatus.APPROVED]
    misinfo = [
        f for f in approved_verifications if f.body.get("verdict") == Verdict.REFUTES.value
    ]
    return EventMetrics(
        event_id=event_id,
        total_flags=len(flags),
        approved=sum(1 for f in flags if f.status == FlagStatus.APPROVED),
        rejected=sum(1 for f in flags if f.status == FlagStatus.REJECTED),
        pending=sum(1 for f in flags if f.status == FlagStatus.PENDING),
        verification_flags=len(verifications),
        approved_verification_flags=len(approved_verifications),
        misinfo_flags=len(misinfo),
        total_evidence=len(engine.list_evidence(event_id)),
    )


def team_metrics(engine: Engine, event_id: str) -> list[TeamMetrics]:
    rows = engine.leaderboard(event_id)
    ledger = engine.ledgers[event_id]
    out = []
    for row in rows:
        collab = bonus_only = tasks = 0
        by_kind: dict[str, int] = {}
        for entry in ledger.entries:
            if entry.team_id != row.team_id:
                continue
            if entry.source == SOURCE_TASK:
                tasks += entry.amount
                continue
            flag = engine.flags[entry.source_id]
            piece = engine.evidence[flag.evidence_id]
            cross_team = flag.author_team_id != piece.owner_team_id
            if cross_team:
                collab += entry.amount
                if entry.source == SOURCE_COLLAB:
                    bonus_only += entry.amount
            by_kind[flag.kind.value] = by_kind.get(flag.kind.value, 0) + entry.amount
        out.append(
            TeamMetrics(
                team_id=row.team_id, team_name=row.team_name, rank=row.rank,
                total_points=row.total_points, collab_points=collab,
                collab_bonus_points=bonus_only, task_points=tasks,
                points_by_kind=by_kind,
            )
        )
    return out


def latency_stats(engine: Engine, event_id: str) -> LatencyStats:
    judged = [
        f for f in engine.list_flags(event_id)
        if f.status != FlagStatus.PENDING and f.judged_at is not None
    ]
    if not judged:
        return LatencyStats(event_id=event_id, judged_count=0, mean_minutes=None,
                            median_minutes=None, p90_minutes=None)
    delays = sorted((f.judged_at - f.submitted_at) / 60.0 for f in judged)
    n = len(delays)
    mean = sum(delays) / n
    median = delays[n // 2] if n % 2 else (delays[n // 2 - 1] + delays[n // 2]) / 2
    # nearest-rank 90th percentile
    p90 = delays[max(0, -(-9 * n // 10) - 1)]
    per_judge: dict[str, int] = {}
    for f in judged:
        judge_id = engine.judgments[f.id].judge_id
        per_judge[judge_id] = per_judge.get(judge_id, 0) + 1
    return LatencyStats(
        event_id=event_id, judged_count=n, mean_minutes=mean,
        median_minutes=median, p90_minutes=p90, per_judge_counts=per_judge,
    )


EXPORT_FORMATS = ("csv", "json")


def export_tables(engine: Engine, event_id: str, format: str = "csv") -> dict[str, bytes]:
    """Render metrics as named documents (filename -> bytes), deterministically."""
    if format not in EXPORT_FORMATS:
        raise ValidationError(f"unknown export format {format!r}", {"formats": EXPORT_FORMATS})
    ev = event_metrics(engine, event_id).to_dict()
    teams = [t.to_dict() for t in team_metrics(engine, event_id)]
    latency = latency_stats(engine, event_id).to_dict()

    if format == "json":
        doc = {"event_metrics": ev, "team_metrics": teams, "latency_stats": latency}
        return {"analytics.json": (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()}

    def rows_to_csv(fieldnames: list[str], rows: list[dict[str, Any]]) -> bytes:
        buf = io.StringIO(newline="")
        writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fieldnames})
        return buf.getvalue().encode()

    event_fields = [
        "event_id", "total_flags", "approved", "rejected", "pending", "approval_rate",
        "verification_flags", "approved_verification_flags", "misinfo_flags",
        "pct_misinfo", "total_evidence", "flags_per_evidence",
    ]
    team_fields = [
        "rank", "team_id", "team_name", "total_points", "collab_points",
        "collab_bonus_points", "task_points", "pct_collab",
        "pct_collab_bonus_only", "pct_tasks",
    ]
    latency_fields = ["event_id", "judged_count", "mean_minutes", "median_minutes", "p90_minutes"]
    team_rows = [{k: t[k] for k in team_fields} for t in teams]  # ordered by rank already
    return {
        "event_metrics.csv": rows_to_csv(event_fields, [ev]),
        "team_metrics.csv": rows_to_csv(team_fields, team_rows),
        "latency.csv": rows_to_csv(latency_fields, [latency]),
    }
