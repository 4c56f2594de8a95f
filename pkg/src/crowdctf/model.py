"""Domain entities: events, threads, teams, evidence, flags.

These are plain records plus structural validation. All mutation goes
through the engine; values handed out of the engine should be treated as
snapshots. Scoring and transport live elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any
from urllib.parse import urlparse

from .errors import ValidationError


class Role(str, Enum):
    EXPERT = "expert"
    JUDGE = "judge"
    PARTICIPANT = "participant"
    TOOL = "tool"


class EventState(str, Enum):
    DRAFT = "draft"
    OPEN = "open"
    CLOSED = "closed"
    FINALIZED = "finalized"


# Legal lifecycle edges; anything else is rejected.
EVENT_TRANSITIONS = {
    EventState.DRAFT: {EventState.OPEN},
    EventState.OPEN: {EventState.CLOSED},
    EventState.CLOSED: {EventState.FINALIZED},
    EventState.FINALIZED: set(),
}


class FlagKind(str, Enum):
    DISCOVERY = "discovery"
    ARCHIVAL = "archival"
    VERIFICATION = "verification"
    REPORTING = "reporting"


class FlagStatus(str, Enum):
    PENDING = "pending"
    APPROVED = "approved"
    REJECTED = "rejected"


class DiscoverySubtype(str, Enum):
    VIDEO = "video"
    IMAGE = "image"
    TEXT = "text"
    ACCOUNT = "account"
    OTHER = "other"


class Verdict(str, Enum):
    SUPPORTS = "supports"
    REFUTES = "refutes"
    INCONCLUSIVE = "inconclusive"


def validate_url(url: str, field_name: str = "url") -> str:
    """Syntactic check only: URLs are opaque, never fetched."""
    parsed = urlparse(url)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise ValidationError(f"{field_name} must be an absolute http(s) URL", {field_name: url})
    return url


def require_text(value: Any, field_name: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise ValidationError(f"{field_name} must be non-empty text", {"field": field_name})
    return value


@dataclass
class UserAccount:
    id: str
    display_name: str
    roles: set[Role]
    team_id: str | None = None
    password_hash: str | None = None

    def has_role(self, role: Role) -> bool:
        return role in self.roles


@dataclass
class Team:
    id: str
    event_id: str
    name: str
    member_ids: list[str]
    leader_id: str


@dataclass
class Event:
    id: str
    title: str
    state: EventState
    rubric_id: str
    collab_policy_id: str
    duration_hint: int | None = None
    opened_at: int | None = None
    closed_at: int | None = None


@dataclass
class NarrativeThread:
    id: str
    event_id: str
    title: str
    description: str = ""


@dataclass
class EvidencePiece:
    id: str
    thread_id: str
    event_id: str
    name: str
    source_url: str
    owner_team_id: str
    creator_id: str
    created_at: int


def validate_flag_body(kind: FlagKind, body: dict[str, Any]) -> dict[str, Any]:
    """Check that a body document matches its flag kind; returns a normalized copy."""
    if not isinstance(body, dict):
        raise ValidationError("flag body must be a document", {"kind": kind.value})
    if kind == FlagKind.DISCOVERY:
        subtype = body.get("subtype")
        try:
            subtype = DiscoverySubtype(subtype)
        except ValueError:
            raise ValidationError(
                "discovery subtype must be one of video/image/text/account/other",
                {"subtype": body.get("subtype")},
            )
        method = require_text(body.get("method_description"), "method_description")
        out: dict[str, Any] = {"subtype": subtype.value, "method_description": method}
        if subtype == DiscoverySubtype.OTHER and body.get("subtype_note"):
            out["subtype_note"] = str(body["subtype_note"])
        return out
    if kind == FlagKind.ARCHIVAL:
        return {
            "archive_url": validate_url(body.get("archive_url", ""), "archive_url"),
            "method": str(body.get("method", "")),
        }
    if kind == FlagKind.VERIFICATION:
        try:
            verdict = Verdict(body.get("verdict"))
        except ValueError:
            raise ValidationError(
                "verdict must be supports/refutes/inconclusive", {"verdict": body.get("verdict")}
            )
        links = body.get("evidence_links", [])
        if not isinstance(links, list):
            raise ValidationError("evidence_links must be a list of URLs")
        return {
            "claim": require_text(body.get("claim"), "claim"),
            "verdict": verdict.value,
            "evidence_links": [validate_url(u, "evidence_links") for u in links],
            "process": str(body.get("process", "")),
        }
    # reporting: needs text and/or a URL
    text = body.get("report_text")
    url = body.get("report_url")
    if not text and not url:
        raise ValidationError("reporting flag needs report_text and/or report_url")
    out = {}
    if text:
        out["report_text"] = str(text)
    if url:
        out["report_url"] = validate_url(url, "report_url")
    return out


@dataclass
class SelfAssessment:
    # criterion id -> level id; claimed_points is recomputed server-side
    selections: dict[str, str]
    claimed_points: int = 0


@dataclass
class Flag:
    id: str
    evidence_id: str
    kind: FlagKind
    author_id: str
    author_team_id: str
    status: FlagStatus
    body: dict[str, Any]
    self_assessment: SelfAssessment
    submitted_at: int
    supersedes: str | None = None
    judged_at: int | None = None


@dataclass
class Judgment:
    id: str
    flag_id: str
    judge_id: str
    decision: str  # "approve" | "reject"
    awarded_points: int
    comment: str
    judged_at: int


@dataclass
class CompletionSummary:
    evidence_id: str
    counts: dict[str, dict[str, int]]  # kind -> {pending, approved, rejected}
    complete: bool

    @staticmethod
    def from_flags(evidence_id: str, flags: list[Flag]) -> "CompletionSummary":
        counts = {
            k.value: {"pending": 0, "approved": 0, "rejected": 0} for k in FlagKind
        }
        for f in flags:
            counts[f.kind.value][f.status.value] += 1
        complete = all(counts[k.value]["approved"] >= 1 for k in FlagKind)
        return CompletionSummary(evidence_id=evidence_id, counts=counts, complete=complete)


@dataclass
class FeedEntry:
    cursor: int
    event_id: str
    kind: str
    subject_ids: dict[str, str]
    at: int


FEED_KINDS = {
    "evidence_created",
    "flag_submitted",
    "flag_judged",
    "task_created",
    "response_adjudicated",
    "leaderboard_changed",
    "event_state_changed",
    "thread_added",
    "team_created",
}


@dataclass
class ToolRegistration:
    id: str
    name: str
    owner_user_id: str
    api_token: str
    created_at: int
    revoked: bool = False


class TaskStatus(str, Enum):
    OPEN = "open"
    EXHAUSTED = "exhausted"
    WITHDRAWN = "withdrawn"


class ResponseStatus(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


@dataclass
class Task:
    id: str
    event_id: str
    creator_id: str  # user or tool id
    creator_user_id: str  # owning user (tool owner for tool-created tasks)
    title: str
    instructions: str
    payload: dict[str, Any]
    reward_points: int
    max_accepted: int
    status: TaskStatus
    created_at: int
    accepted_count: int = 0


@dataclass
class TaskResponse:
    id: str
    task_id: str
    responder_id: str
    payload: dict[str, Any]
    status: ResponseStatus
    submitted_at: int
    adjudicated_at: int | None = None
    adjudicator_id: str | None = None
