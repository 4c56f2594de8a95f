"""Append-only point ledger and the leaderboard derived from it.

Every point a user earns lands here exactly once, tagged with its source
(flag award, collaboration bonus, task reward). Leaderboards and the
per-team analytics are pure folds over this list; nothing else holds
authoritative score state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError

SOURCE_FLAG = "flag_award"
SOURCE_COLLAB = "collab_bonus"
SOURCE_TASK = "task_reward"


@dataclass(frozen=True)
class LedgerEntry:
    id: str
    event_id: str
    user_id: str
    team_id: str
    source: str  # flag_award | collab_bonus | task_reward
    source_id: str  # flag id or response id
    amount: int
    created_at: int
    seq: int  # position in the event ledger, drives tie-breaks


@dataclass
class LeaderboardRow:
    team_id: str
    team_name: str
    rank: int
    total_points: int
    by_source: dict[str, int]
    by_kind: dict[str, int]


class Ledger:
    """Per-event append-only list; entries are immutable once appended."""

    def __init__(self, event_id: str):
        self.event_id = event_id
        self.entries: list[LedgerEntry] = []
        # flag id -> entry, enforcing at most one award / bonus per flag
        self._flag_awards: dict[str, LedgerEntry] = {}
        self._collab_bonuses: dict[str, LedgerEntry] = {}
        self._task_rewards: dict[str, LedgerEntry] = {}

    def append(self, entry: LedgerEntry) -> None:
        if entry.amount < 0:
            raise ValidationError("ledger amounts must be non-negative")
        index = {
            SOURCE_FLAG: self._flag_awards,
            SOURCE_COLLAB: self._collab_bonuses,
            SOURCE_TASK: self._task_rewards,
        }.get(entry.source)
        if index is None:
            raise ValidationError(f"unknown ledger source {entry.source}")
        if entry.source_id in index:
            raise ValidationError(
                f"duplicate {entry.source} for {entry.source_id}", {"source_id": entry.source_id}
            )
        index[entry.source_id] = entry
        self.entries.append(entry)

    def flag_award(self, flag_id: str) -> LedgerEntry | None:
        return self._flag_awards.get(flag_id)

    def collab_bonus(self, flag_id: str) -> LedgerEntry | None:
        return self._collab_bonuses.get(flag_id)

    def task_reward(self, response_id: str) -> LedgerEntry | None:
        return self._task_rewards.get(response_id)

    def team_total(self, team_id: str) -> int:
        return sum(e.amount for e in self.entries if e.team_id == team_id)

    def total(self) -> int:
        return sum(e.amount for e in self.entries)


def build_leaderboard(
    ledger: Ledger,
    teams: dict[str, str],
    flag_kind_of: dict[str, str],
) -> list[LeaderboardRow]:
    """Fold the ledger into ranked rows.

    ``teams`` maps team id -> name (all registered teams appear, even at 0).
    ``flag_kind_of`` maps flag id -> kind for the per-kind breakdown.
    Tie-break: the team that reached the tied total earlier (smaller ledger
    seq) wins; residual ties go to the lexicographically smaller name.
    """
    totals = {tid: 0 for tid in teams}
    reached_seq = {tid: 0 for tid in teams}
    by_source: dict[str, dict[str, int]] = {tid: {} for tid in teams}
    by_kind: dict[str, dict[str, int]] = {tid: {} for tid in teams}
    for e in ledger.entries:
        if e.team_id not in totals:
            # entries for unregistered teams would be an engine bug
            raise ValidationError(f"ledger entry for unknown team {e.team_id}")
        totals[e.team_id] += e.amount
        if e.amount > 0:
            reached_seq[e.team_id] = e.seq
        by_source[e.team_id][e.source] = by_source[e.team_id].get(e.source, 0) + e.amount
        if e.source in (SOURCE_FLAG, SOURCE_COLLAB):
            kind = flag_kind_of.get(e.source_id, "unknown")
            by_kind[e.team_id][kind] = by_kind[e.team_id].get(kind, 0) + e.amount

    order = sorted(totals, key=lambda tid: (-totals[tid], reached_seq[tid], teams[tid]))
    return [
        LeaderboardRow(
            team_id=tid,
            team_name=teams[tid],
            rank=i + 1,
            total_points=totals[tid],
            by_source=dict(sorted(by_source[tid].items())),
            by_kind=dict(sorted(by_kind[tid].items())),
        )
        for i, tid in enumerate(order)
    ]
