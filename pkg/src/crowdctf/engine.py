"""Transactional core: all platform state and every mutating operation.

The engine is the single writer. Each public mutating method is one
transaction: it validates under the engine lock, applies every effect
(entities, ledger, feed) or none, and returns snapshots. Given the same
call sequence it produces byte-identical state, which is what the trace
replay and the persistence layer build on.
"""

from __future__ import annotations

import secrets
import threading
from typing import Any, Callable, Iterable

from .errors import (
    AuthorizationError,
    ConflictError,
    DuplicateEvidenceError,
    GateError,
    NotFoundError,
    OwnTeamError,
    StateError,
    ValidationError,
)
from .ledger import (
    SOURCE_COLLAB,
    SOURCE_FLAG,
    SOURCE_TASK,
    LeaderboardRow,
    Ledger,
    LedgerEntry,
    build_leaderboard,
)
from .model import (
    EVENT_TRANSITIONS,
    CompletionSummary,
    Event,
    EventState,
    EvidencePiece,
    FeedEntry,
    Flag,
    FlagKind,
    FlagStatus,
    Judgment,
    NarrativeThread,
    ResponseStatus,
    Role,
    SelfAssessment,
    Task,
    TaskResponse,
    TaskStatus,
    Team,
    ToolRegistration,
    UserAccount,
    require_text,
    validate_flag_body,
    validate_url,
)
from .rubric import CollabPolicy, RubricConfig

DEFAULT_MAX_TEAM_SIZE = 5


class Engine:
    def __init__(self, max_team_size: int = DEFAULT_MAX_TEAM_SIZE):
        self._lock = threading.RLock()
        self.max_team_size = max_team_size
        self.users: dict[str, UserAccount] = {}
        self.events: dict[str, Event] = {}
        self.rubrics: dict[str, RubricConfig] = {}
        self.policies: dict[str, CollabPolicy] = {}
        self.threads: dict[str, NarrativeThread] = {}
        self.teams: dict[str, Team] = {}
        self.evidence: dict[str, EvidencePiece] = {}
        self.flags: dict[str, Flag] = {}
        self.judgments: dict[str, Judgment] = {}  # keyed by flag id
        self.tools: dict[str, ToolRegistration] = {}
        self.tasks: dict[str, Task] = {}
        self.responses: dict[str, TaskResponse] = {}
        self.ledgers: dict[str, Ledger] = {}
        self.feeds: dict[str, list[FeedEntry]] = {}

        self._threads_by_event: dict[str, list[str]] = {}
        self._teams_by_event: dict[str, list[str]] = {}
        self._evidence_by_event: dict[str, list[str]] = {}
        self._flags_by_evidence: dict[str, list[str]] = {}
        self._flags_by_event: dict[str, list[str]] = {}
        self._tasks_by_event: dict[str, list[str]] = {}
        self._responses_by_task: dict[str, list[str]] = {}
        self._membership: dict[tuple[str, str], str] = {}  # (event, user) -> team
        self._url_index: dict[tuple[str, str], str] = {}  # (event, source_url) -> evidence
        self._token_index: dict[str, str] = {}  # api token -> tool id
        self._counters: dict[str, int] = {}

    # ------------------------------------------------------------------
    # plumbing

    def _next_id(self, prefix: str) -> str:
        n = self._counters.get(prefix, 0) + 1
        self._counters[prefix] = n
        return f"{prefix}{n}"

    def _user(self, user_id: str) -> UserAccount:
        try:
            return self.users[user_id]
        except KeyError:
            raise NotFoundError(f"unknown user {user_id}")

    def _event(self, event_id: str) -> Event:
        try:
            return self.events[event_id]
        except KeyError:
            raise NotFoundError(f"unknown event {event_id}")

    def _evidence(self, evidence_id: str) -> EvidencePiece:
        try:
            return self.evidence[evidence_id]
        except KeyError:
            raise NotFoundError(f"unknown evidence {evidence_id}")

    def _flag(self, flag_id: str) -> Flag:
        try:
            return self.flags[flag_id]
        except KeyError:
            raise NotFoundError(f"unknown flag {flag_id}")

    def _require_role(self, user: UserAccount, role: Role) -> None:
        if not user.has_role(role):
            raise AuthorizationError(
                f"{user.id} lacks the {role.value} role", {"required_role": role.value}
            )

    def _require_not_finalized(self, event: Event) -> None:
        if event.state == EventState.FINALIZED:
            raise StateError(f"event {event.id} is finalized and immutable")

    def team_of(self, event_id: str, user_id: str) -> str | None:
        return self._membership.get((event_id, user_id))

    def _emit(self, event_id: str, kind: str, subject_ids: dict[str, str], at: int) -> None:
        feed = self.feeds.setdefault(event_id, [])
        feed.append(
            FeedEntry(cursor=len(feed) + 1, event_id=event_id, kind=kind,
                      subject_ids=subject_ids, at=at)
        )

    # ------------------------------------------------------------------
    # accounts

    def create_user(
        self,
        display_name: str,
        roles: Iterable[str],
        password_hash: str | None = None,
        actor: str | None = None,
        at: int = 0,
    ) -> UserAccount:
        with self._lock:
            if actor is not None:
                self._require_role(self._user(actor), Role.EXPERT)
            require_text(display_name, "display_name")
            role_set = {Role(r) for r in roles}
            if not role_set:
                raise ValidationError("user needs at least one role")
            user = UserAccount(
                id=self._next_id("u"), display_name=display_name,
                roles=role_set, password_hash=password_hash,
            )
            self.users[user.id] = user
            return user

    # ------------------------------------------------------------------
    # events, threads, teams

    def create_event(
        self,
        actor: str,
        title: str,
        rubric: RubricConfig | dict[str, Any],
        collab_policy: CollabPolicy | dict[str, Any],
        duration_hint: int | None = None,
        at: int = 0,
    ) -> Event:
        with self._lock:
            self._require_role(self._user(actor), Role.EXPERT)
            require_text(title, "title")
            event_id = self._next_id("ev")
            if isinstance(rubric, dict):
                rubric = RubricConfig.from_dict(rubric, rubric_id=f"rubric-{event_id}")
            rubric.validate()
            if isinstance(collab_policy, dict):
                collab_policy = CollabPolicy.from_dict(
                    collab_policy, policy_id=f"policy-{event_id}"
                )
            collab_policy.validate()
            self.rubrics[rubric.id] = rubric
            self.policies[collab_policy.id] = collab_policy
            event = Event(
                id=event_id, title=title, state=EventState.DRAFT,
                rubric_id=rubric.id, collab_policy_id=collab_policy.id,
                duration_hint=duration_hint,
            )
            self.events[event.id] = event
            self.ledgers[event.id] = Ledger(event.id)
            self.feeds[event.id] = []
            for index in (self._threads_by_event, self._teams_by_event,
                          self._evidence_by_event, self._flags_by_event,
                          self._tasks_by_event):
                index[event.id] = []
            self._emit(event.id, "event_state_changed", {"event_id": event.id}, at)
            return event

    def add_thread(
        self, actor: str, event_id: str, title: str, description: str = "", at: int = 0
    ) -> NarrativeThread:
        with self._lock:
            self._require_role(self._user(actor), Role.EXPERT)
            event = self._event(event_id)
            if event.state not in (EventState.DRAFT, EventState.OPEN):
                raise StateError(
                    f"threads can only be added while the event is draft or open, not {event.state.value}"
                )
            require_text(title, "title")
            thread = NarrativeThread(
                id=self._next_id("th"), event_id=event_id, title=title, description=description
            )
            self.threads[thread.id] = thread
            self._threads_by_event[event_id].append(thread.id)
            self._emit(event_id, "thread_added", {"thread_id": thread.id}, at)
            return thread

    def create_team(
        self,
        actor: str,
        event_id: str,
        name: str,
        member_ids: list[str],
        leader_id: str,
        at: int = 0,
    ) -> Team:
        with self._lock:
            self._user(actor)
            event = self._event(event_id)
            # membership is frozen once the event opens
            if event.state != EventState.DRAFT:
                raise StateError("teams can only be formed while the event is in draft")
            require_text(name, "name")
            if len(set(member_ids)) != len(member_ids):
                raise ValidationError("duplicate members in team")
            if not (2 <= len(member_ids) <= self.max_team_size):
                raise ValidationError(
                    f"team size must be between 2 and {self.max_team_size}",
                    {"size": len(member_ids)},
                )
            if leader_id not in member_ids:
                raise ValidationError("leader must be a team member")
            for uid in member_ids:
                user = self._user(uid)
                if user.has_role(Role.TOOL):
                    raise ValidationError(f"tool account {uid} cannot join a team")
                if (event_id, uid) in self._membership:
                    raise ConflictError(f"user {uid} already belongs to a team in this event")
            team = Team(
                id=self._next_id("tm"), event_id=event_id, name=name,
                member_ids=list(member_ids), leader_id=leader_id,
            )
            self.teams[team.id] = team
            self._teams_by_event[event_id].append(team.id)
            for uid in member_ids:
                self._membership[(event_id, uid)] = team.id
            self._emit(event_id, "team_created", {"team_id": team.id}, at)
            return team

    def transition_event(self, actor: str, event_id: str, target: str, at: int = 0) -> Event:
        with self._lock:
            self._require_role(self._user(actor), Role.EXPERT)
            event = self._event(event_id)
            target_state = EventState(target)
            if target_state not in EVENT_TRANSITIONS[event.state]:
                raise StateError(
                    f"illegal transition {event.state.value} -> {target_state.value}"
                )
            if target_state == EventState.FINALIZED:
                pending_flags = [
                    fid for fid in self._flags_by_event[event_id]
                    if self.flags[fid].status == FlagStatus.PENDING
                ]
                pending_responses = [
                    r.id for r in self.responses.values()
                    if r.status == ResponseStatus.PENDING
                    and self.tasks[r.task_id].event_id == event_id
                ]
                if pending_flags or pending_responses:
                    raise StateError(
                        "cannot finalize with pending work",
                        {"pending_flags": pending_flags, "pending_responses": pending_responses},
                    )
            if target_state == EventState.OPEN:
                event.opened_at = at
            elif target_state == EventState.CLOSED:
                event.closed_at = at
            event.state = target_state
            self._emit(event_id, "event_state_changed", {"event_id": event_id}, at)
            return event

    # ------------------------------------------------------------------
    # evidence and flags

    def _build_self_assessment(
        self, rubric: RubricConfig, kind: FlagKind, selections: dict[str, str]
    ) -> SelfAssessment:
        claimed = rubric.claimed_points(kind, selections or {})
        return SelfAssessment(selections=dict(selections or {}), claimed_points=claimed)

    def new_evidence_with_discovery(
        self,
        actor: str,
        thread_id: str,
        name: str,
        source_url: str,
        discovery_body: dict[str, Any],
        self_assessment: dict[str, str],
        at: int = 0,
    ) -> tuple[EvidencePiece, Flag]:
        with self._lock:
            user = self._user(actor)
            self._require_role(user, Role.PARTICIPANT)
            try:
                thread = self.threads[thread_id]
            except KeyError:
                raise NotFoundError(f"unknown thread {thread_id}")
            event = self._event(thread.event_id)
            if event.state != EventState.OPEN:
                raise StateError("evidence can only be submitted while the event is open")
            team_id = self.team_of(event.id, actor)
            if team_id is None:
                raise AuthorizationError(f"{actor} is not on a team in event {event.id}")
            require_text(name, "name")
            validate_url(source_url, "source_url")
            existing = self._url_index.get((event.id, source_url))
            if existing is not None:
                raise DuplicateEvidenceError(
                    "this source URL is already documented in this event",
                    {"existing_evidence_id": existing},
                )
            body = validate_flag_body(FlagKind.DISCOVERY, discovery_body)
            rubric = self.rubrics[event.rubric_id]
            sa = self._build_self_assessment(rubric, FlagKind.DISCOVERY, self_assessment)

            piece = EvidencePiece(
                id=self._next_id("ei"), thread_id=thread_id, event_id=event.id,
                name=name, source_url=source_url, owner_team_id=team_id,
                creator_id=actor, created_at=at,
            )
            flag = Flag(
                id=self._next_id("fl"), evidence_id=piece.id, kind=FlagKind.DISCOVERY,
                author_id=actor, author_team_id=team_id, status=FlagStatus.PENDING,
                body=body, self_assessment=sa, submitted_at=at,
            )
            self.evidence[piece.id] = piece
            self._evidence_by_event[event.id].append(piece.id)
            self._url_index[(event.id, source_url)] = piece.id
            self.flags[flag.id] = flag
            self._flags_by_evidence[piece.id] = [flag.id]
            self._flags_by_event[event.id].append(flag.id)
            self._emit(event.id, "evidence_created",
                       {"evidence_id": piece.id, "thread_id": thread_id}, at)
            self._emit(event.id, "flag_submitted",
                       {"flag_id": flag.id, "evidence_id": piece.id}, at)
            return piece, flag

    def add_flag(
        self,
        actor: str,
        evidence_id: str,
        kind: str,
        body: dict[str, Any],
        self_assessment: dict[str, str],
        at: int = 0,
    ) -> Flag:
        with self._lock:
            flag_kind = FlagKind(kind)
            if flag_kind == FlagKind.DISCOVERY:
                raise ValidationError(
                    "discovery flags are created with their evidence piece, one per piece"
                )
            return self._submit_flag(actor, evidence_id, flag_kind, body,
                                     self_assessment, at, supersedes=None)

    def _submit_flag(
        self,
        actor: str,
        evidence_id: str,
        kind: FlagKind,
        body: dict[str, Any],
        self_assessment: dict[str, str],
        at: int,
        supersedes: str | None,
    ) -> Flag:
        user = self._user(actor)
        self._require_role(user, Role.PARTICIPANT)
        piece = self._evidence(evidence_id)
        event = self._event(piece.event_id)
        if event.state != EventState.OPEN:
            raise StateError("flags can only be submitted while the event is open")
        team_id = self.team_of(event.id, actor)
        if team_id is None:
            raise AuthorizationError(f"{actor} is not on a team in event {event.id}")
        normalized = validate_flag_body(kind, body)
        rubric = self.rubrics[event.rubric_id]
        sa = self._build_self_assessment(rubric, kind, self_assessment)
        flag = Flag(
            id=self._next_id("fl"), evidence_id=evidence_id, kind=kind,
            author_id=actor, author_team_id=team_id, status=FlagStatus.PENDING,
            body=normalized, self_assessment=sa, submitted_at=at, supersedes=supersedes,
        )
        self.flags[flag.id] = flag
        self._flags_by_evidence[evidence_id].append(flag.id)
        self._flags_by_event[event.id].append(flag.id)
        self._emit(event.id, "flag_submitted",
                   {"flag_id": flag.id, "evidence_id": evidence_id}, at)
        return flag

    def resubmit_flag(
        self,
        actor: str,
        rejected_flag_id: str,
        body: dict[str, Any],
        self_assessment: dict[str, str],
        at: int = 0,
    ) -> Flag:
        with self._lock:
            old = self._flag(rejected_flag_id)
            if old.status != FlagStatus.REJECTED:
                raise StateError("only rejected flags can be superseded")
            return self._submit_flag(actor, old.evidence_id, old.kind, body,
                                     self_assessment, at, supersedes=old.id)

    def evidence_status(self, evidence_id: str) -> CompletionSummary:
        piece = self._evidence(evidence_id)
        flags = [self.flags[fid] for fid in self._flags_by_evidence[piece.id]]
        return CompletionSummary.from_flags(piece.id, flags)

    # ------------------------------------------------------------------
    # judging

    def reporting_gate(self, evidence_id: str) -> dict[str, Any]:
        """Reporting approval requires an approved flag of each other kind."""
        piece = self._evidence(evidence_id)
        approved = {
            self.flags[fid].kind
            for fid in self._flags_by_evidence[piece.id]
            if self.flags[fid].status == FlagStatus.APPROVED
        }
        needed = {FlagKind.DISCOVERY, FlagKind.ARCHIVAL, FlagKind.VERIFICATION}
        missing = sorted(k.value for k in needed - approved)
        return {"satisfied": not missing, "missing": missing}

    def judge_flag(
        self,
        actor: str,
        flag_id: str,
        decision: str,
        awarded_points: int = 0,
        comment: str = "",
        at: int = 0,
    ) -> Judgment:
        with self._lock:
            judge = self._user(actor)
            self._require_role(judge, Role.JUDGE)
            flag = self._flag(flag_id)
            piece = self._evidence(flag.evidence_id)
            event = self._event(piece.event_id)
            self._require_not_finalized(event)
            if flag.status != FlagStatus.PENDING:
                raise ConflictError(f"flag {flag_id} is already judged")
            judge_team = self.team_of(event.id, actor)
            if judge_team is not None and judge_team in (flag.author_team_id, piece.owner_team_id):
                raise OwnTeamError(
                    "judges may not evaluate their own team's flags or evidence",
                    {"team_id": judge_team},
                )
            if decision not in ("approve", "reject"):
                raise ValidationError("decision must be approve or reject")
            rubric = self.rubrics[event.rubric_id]
            if decision == "approve":
                maximum = rubric.max_points(flag.kind)
                if not (0 <= awarded_points <= maximum):
                    raise ValidationError(
                        f"awarded points must be in [0, {maximum}]",
                        {"awarded_points": awarded_points, "max_points": maximum},
                    )
                if flag.kind == FlagKind.REPORTING:
                    gate = self.reporting_gate(flag.evidence_id)
                    if not gate["satisfied"]:
                        raise GateError(
                            "reporting flags can only be approved after discovery, archival, "
                            "and verification are approved",
                            {"missing": gate["missing"]},
                        )
            else:
                awarded_points = 0

            judgment = Judgment(
                id=self._next_id("jd"), flag_id=flag_id, judge_id=actor,
                decision=decision, awarded_points=awarded_points,
                comment=comment, judged_at=at,
            )
            self.judgments[flag_id] = judgment
            flag.status = FlagStatus.APPROVED if decision == "approve" else FlagStatus.REJECTED
            flag.judged_at = at
            entries = []
            if decision == "approve":
                entries = self._award_for_judgment(event, piece, flag, judgment)
            self._emit(event.id, "flag_judged", {"flag_id": flag_id}, at)
            if entries:
                self._emit(event.id, "leaderboard_changed", {"flag_id": flag_id}, at)
            return judgment

    def _append_ledger(
        self, event: Event, user_id: str, team_id: str, source: str,
        source_id: str, amount: int, at: int,
    ) -> LedgerEntry:
        ledger = self.ledgers[event.id]
        entry = LedgerEntry(
            id=self._next_id("le"), event_id=event.id, user_id=user_id,
            team_id=team_id, source=source, source_id=source_id,
            amount=amount, created_at=at, seq=len(ledger.entries) + 1,
        )
        ledger.append(entry)
        return entry

    def _award_for_judgment(
        self, event: Event, piece: EvidencePiece, flag: Flag, judgment: Judgment
    ) -> list[LedgerEntry]:
        entries = [
            self._append_ledger(
                event, flag.author_id, flag.author_team_id, SOURCE_FLAG,
                flag.id, judgment.awarded_points, judgment.judged_at,
            )
        ]
        policy = self.policies[event.collab_policy_id]
        if policy.enabled and flag.author_team_id != piece.owner_team_id:
            bonus = policy.bonus_for(judgment.awarded_points)
            entries.append(
                self._append_ledger(
                    event, flag.author_id, flag.author_team_id, SOURCE_COLLAB,
                    flag.id, bonus, judgment.judged_at,
                )
            )
        return entries

    def judge_queue(
        self,
        actor: str,
        event_id: str,
        kind: str | None = None,
        thread_id: str | None = None,
        team_id: str | None = None,
    ) -> list[dict[str, Any]]:
        judge = self._user(actor)
        self._require_role(judge, Role.JUDGE)
        event = self._event(event_id)
        judge_team = self.team_of(event_id, actor)
        items = []
        for fid in self._flags_by_event[event_id]:
            flag = self.flags[fid]
            if flag.status != FlagStatus.PENDING:
                continue
            piece = self.evidence[flag.evidence_id]
            if judge_team is not None and judge_team in (flag.author_team_id, piece.owner_team_id):
                continue
            if kind is not None and flag.kind.value != kind:
                continue
            if thread_id is not None and piece.thread_id != thread_id:
                continue
            if team_id is not None and flag.author_team_id != team_id:
                continue
            items.append((flag.submitted_at, flag.id, flag, piece))
        items.sort(key=lambda t: (t[0], t[1]))
        out = []
        for submitted_at, _, flag, piece in items:
            item: dict[str, Any] = {
                "flag_id": flag.id,
                "kind": flag.kind.value,
                "evidence": {"id": piece.id, "name": piece.name,
                             "thread_id": piece.thread_id, "owner_team_id": piece.owner_team_id},
                "self_assessment": {
                    "selections": flag.self_assessment.selections,
                    "claimed_points": flag.self_assessment.claimed_points,
                },
                "submitted_at": submitted_at,
            }
            if flag.kind == FlagKind.REPORTING:
                item["gate"] = self.reporting_gate(piece.id)
            out.append(item)
        return out

    # ------------------------------------------------------------------
    # taskboard

    def register_tool(
        self, actor: str, name: str, api_token: str | None = None, at: int = 0
    ) -> ToolRegistration:
        with self._lock:
            owner = self._user(actor)
            if not (owner.has_role(Role.PARTICIPANT) or owner.has_role(Role.EXPERT)):
                raise AuthorizationError("only participants and experts may register tools")
            require_text(name, "name")
            for tool in self.tools.values():
                if tool.owner_user_id == actor and tool.name == name and not tool.revoked:
                    raise ConflictError(f"tool name {name!r} already registered by {actor}")
            token = api_token if api_token is not None else secrets.token_urlsafe(32)
            tool = ToolRegistration(
                id=self._next_id("to"), name=name, owner_user_id=actor,
                api_token=token, created_at=at,
            )
            self.tools[tool.id] = tool
            self._token_index[token] = tool.id
            return tool

    def revoke_tool(self, actor: str, tool_id: str, at: int = 0) -> ToolRegistration:
        with self._lock:
            tool = self.tools.get(tool_id)
            if tool is None:
                raise NotFoundError(f"unknown tool {tool_id}")
            user = self._user(actor)
            if actor != tool.owner_user_id and not user.has_role(Role.EXPERT):
                raise AuthorizationError("only the owner or an expert may revoke a tool")
            tool.revoked = True
            self._token_index.pop(tool.api_token, None)
            return tool

    def tool_by_token(self, token: str) -> ToolRegistration | None:
        tool_id = self._token_index.get(token)
        return self.tools.get(tool_id) if tool_id else None

    def _resolve_creator(self, creator_id: str) -> tuple[str, str]:
        """Returns (creator id, responsible user id) for a user or tool creator."""
        if creator_id in self.tools:
            tool = self.tools[creator_id]
            if tool.revoked:
                raise AuthorizationError(f"tool {creator_id} is revoked")
            return creator_id, tool.owner_user_id
        return creator_id, self._user(creator_id).id

    def create_task(
        self,
        actor: str,
        event_id: str,
        title: str,
        instructions: str,
        payload: dict[str, Any] | None,
        reward_points: int,
        max_accepted: int = 1,
        at: int = 0,
    ) -> Task:
        with self._lock:
            creator_id, creator_user_id = self._resolve_creator(actor)
            event = self._event(event_id)
            if event.state != EventState.OPEN:
                raise StateError("tasks can only be created while the event is open")
            require_text(title, "title")
            if reward_points <= 0:
                raise ValidationError("reward_points must be positive")
            if max_accepted <= 0:
                raise ValidationError("max_accepted must be positive")
            task = Task(
                id=self._next_id("tk"), event_id=event_id, creator_id=creator_id,
                creator_user_id=creator_user_id, title=title, instructions=instructions,
                payload=dict(payload or {}), reward_points=int(reward_points),
                max_accepted=int(max_accepted), status=TaskStatus.OPEN, created_at=at,
            )
            self.tasks[task.id] = task
            self._tasks_by_event[event_id].append(task.id)
            self._responses_by_task[task.id] = []
            self._emit(event_id, "task_created", {"task_id": task.id}, at)
            return task

    def withdraw_task(self, actor: str, task_id: str, at: int = 0) -> Task:
        with self._lock:
            task = self.tasks.get(task_id)
            if task is None:
                raise NotFoundError(f"unknown task {task_id}")
            _, creator_user = self._resolve_creator(task.creator_id)
            user = self._user(actor)
            if actor != creator_user and not user.has_role(Role.JUDGE):
                raise AuthorizationError("only the creator or a judge may withdraw a task")
            if task.status != TaskStatus.OPEN:
                raise StateError(f"task {task_id} is not open")
            task.status = TaskStatus.WITHDRAWN
            return task

    def submit_response(
        self, actor: str, task_id: str, payload: dict[str, Any] | None, at: int = 0
    ) -> TaskResponse:
        with self._lock:
            user = self._user(actor)
            task = self.tasks.get(task_id)
            if task is None:
                raise NotFoundError(f"unknown task {task_id}")
            event = self._event(task.event_id)
            self._require_not_finalized(event)
            if task.status != TaskStatus.OPEN:
                raise StateError(f"task {task_id} is {task.status.value}")
            if actor == task.creator_user_id:
                raise ValidationError("task creators may not respond to their own task")
            for rid in self._responses_by_task[task_id]:
                r = self.responses[rid]
                if r.responder_id == actor and r.status == ResponseStatus.PENDING:
                    raise ConflictError("a pending response by this user already exists")
            response = TaskResponse(
                id=self._next_id("rs"), task_id=task_id, responder_id=actor,
                payload=dict(payload or {}), status=ResponseStatus.PENDING, submitted_at=at,
            )
            self.responses[response.id] = response
            self._responses_by_task[task_id].append(response.id)
            return response

    def adjudicate_response(
        self, actor: str, response_id: str, decision: str, at: int = 0
    ) -> TaskResponse:
        with self._lock:
            response = self.responses.get(response_id)
            if response is None:
                raise NotFoundError(f"unknown response {response_id}")
            task = self.tasks[response.task_id]
            event = self._event(task.event_id)
            self._require_not_finalized(event)
            user = self._user(actor)
            _, creator_user = self._resolve_creator(task.creator_id)
            if actor != creator_user and not user.has_role(Role.JUDGE):
                raise AuthorizationError(
                    "only the task creator, the tool owner, or a judge may adjudicate"
                )
            if response.status != ResponseStatus.PENDING:
                raise ConflictError(f"response {response_id} is already adjudicated")
            if decision not in ("accept", "reject"):
                raise ValidationError("decision must be accept or reject")
            if decision == "accept":
                if task.accepted_count >= task.max_accepted:
                    raise ConflictError("task acceptance cap already reached")
                response.status = ResponseStatus.ACCEPTED
                task.accepted_count += 1
                if task.accepted_count >= task.max_accepted:
                    task.status = TaskStatus.EXHAUSTED
                self._grant_task_reward(event, task, response, at)
                self._emit(event.id, "leaderboard_changed", {"response_id": response.id}, at)
            else:
                response.status = ResponseStatus.REJECTED
            response.adjudicated_at = at
            response.adjudicator_id = actor
            self._emit(event.id, "response_adjudicated", {"response_id": response.id}, at)
            return response

    def _grant_task_reward(
        self, event: Event, task: Task, response: TaskResponse, at: int
    ) -> LedgerEntry:
        if self.ledgers[event.id].task_reward(response.id) is not None:
            raise ConflictError(f"reward already granted for response {response.id}")
        team_id = self.team_of(event.id, response.responder_id)
        if team_id is None:
            raise ValidationError("responder must be on a team to receive points")
        return self._append_ledger(
            event, response.responder_id, team_id, SOURCE_TASK,
            response.id, task.reward_points, at,
        )

    # ------------------------------------------------------------------
    # reads

    def leaderboard(self, event_id: str) -> list[LeaderboardRow]:
        event = self._event(event_id)
        teams = {tid: self.teams[tid].name for tid in self._teams_by_event[event_id]}
        kind_of = {fid: self.flags[fid].kind.value for fid in self._flags_by_event[event_id]}
        return build_leaderboard(self.ledgers[event_id], teams, kind_of)

    def feed_since(self, event_id: str, cursor: int = 0) -> list[FeedEntry]:
        self._event(event_id)
        if cursor < 0:
            raise ValidationError("cursor must be non-negative")
        return [e for e in self.feeds[event_id] if e.cursor > cursor]

    def list_evidence(
        self,
        event_id: str,
        thread_id: str | None = None,
        team_id: str | None = None,
    ) -> list[EvidencePiece]:
        self._event(event_id)
        out = []
        for eid in self._evidence_by_event[event_id]:
            piece = self.evidence[eid]
            if thread_id is not None and piece.thread_id != thread_id:
                continue
            if team_id is not None and piece.owner_team_id != team_id:
                continue
            out.append(piece)
        return out

    def list_flags(
        self,
        event_id: str,
        thread_id: str | None = None,
        status: str | None = None,
        team_id: str | None = None,
        kind: str | None = None,
    ) -> list[Flag]:
        self._event(event_id)
        out = []
        for fid in self._flags_by_event[event_id]:
            flag = self.flags[fid]
            piece = self.evidence[flag.evidence_id]
            if thread_id is not None and piece.thread_id != thread_id:
                continue
            if status is not None and flag.status.value != status:
                continue
            if team_id is not None and flag.author_team_id != team_id:
                continue
            if kind is not None and flag.kind.value != kind:
                continue
            out.append(flag)
        return out

    def list_tasks(self, event_id: str, status: str | None = None) -> list[Task]:
        self._event(event_id)
        out = []
        for tid in self._tasks_by_event[event_id]:
            task = self.tasks[tid]
            if status is not None and task.status.value != status:
                continue
            out.append(task)
        return out

    def birds_eye(self, event_id: str) -> dict[str, Any]:
        """Expert overview: per-thread activity counts plus open work."""
        event = self._event(event_id)
        per_thread = {}
        for tid in self._threads_by_event[event_id]:
            evidence_ids = [e.id for e in self.list_evidence(event_id, thread_id=tid)]
            flags = self.list_flags(event_id, thread_id=tid)
            per_thread[tid] = {
                "title": self.threads[tid].title,
                "evidence": len(evidence_ids),
                "flags": len(flags),
                "pending_flags": sum(1 for f in flags if f.status == FlagStatus.PENDING),
            }
        return {
            "event_id": event_id,
            "state": event.state.value,
            "threads": per_thread,
            "open_tasks": [t.id for t in self.list_tasks(event_id, status="open")],
            "pending_flags": [
                fid for fid in self._flags_by_event[event_id]
                if self.flags[fid].status == FlagStatus.PENDING
            ],
        }

    # ------------------------------------------------------------------
    # invariant scan

    def check_invariants(self) -> list[str]:
        """Full-state scan; returns human-readable violation strings."""
        problems: list[str] = []

        def bad(msg: str) -> None:
            problems.append(msg)

        for piece in self.evidence.values():
            thread = self.threads.get(piece.thread_id)
            if thread is None or thread.event_id != piece.event_id:
                bad(f"evidence {piece.id} containment broken")
            discoveries = [
                self.flags[fid] for fid in self._flags_by_evidence.get(piece.id, [])
                if self.flags[fid].kind == FlagKind.DISCOVERY
            ]
            if not discoveries:
                bad(f"evidence {piece.id} has no discovery flag")
            active = [f for f in discoveries if f.status != FlagStatus.REJECTED]
            if len(active) > 1:
                bad(f"evidence {piece.id} has {len(active)} non-rejected discovery flags")

        for flag in self.flags.values():
            piece = self.evidence.get(flag.evidence_id)
            if piece is None:
                bad(f"flag {flag.id} references unknown evidence")
                continue
            judgment = self.judgments.get(flag.id)
            if flag.status == FlagStatus.PENDING and judgment is not None:
                bad(f"pending flag {flag.id} has a judgment")
            if flag.status != FlagStatus.PENDING and judgment is None:
                bad(f"judged flag {flag.id} lacks a judgment")
            if flag.supersedes is not None:
                old = self.flags.get(flag.supersedes)
                if old is None or old.kind != flag.kind or old.evidence_id != flag.evidence_id:
                    bad(f"flag {flag.id} supersedes an incompatible flag")
                elif old.status != FlagStatus.REJECTED:
                    bad(f"flag {flag.id} supersedes a non-rejected flag")
                elif old.submitted_at > flag.submitted_at:
                    bad(f"flag {flag.id} supersedes a later flag")

        for flag_id, judgment in self.judgments.items():
            flag = self.flags.get(flag_id)
            if flag is None:
                bad(f"judgment for unknown flag {flag_id}")
                continue
            piece = self.evidence[flag.evidence_id]
            event = self.events[piece.event_id]
            judge_team = self.team_of(event.id, judgment.judge_id)
            if judge_team is not None and judge_team in (flag.author_team_id, piece.owner_team_id):
                bad(f"judgment {judgment.id} violates the own-team bar")
            maximum = self.rubrics[event.rubric_id].max_points(flag.kind)
            if judgment.decision == "approve" and not (0 <= judgment.awarded_points <= maximum):
                bad(f"judgment {judgment.id} awarded out of range")
            if judgment.decision == "reject" and judgment.awarded_points != 0:
                bad(f"rejecting judgment {judgment.id} carries points")
            if flag.kind == FlagKind.REPORTING and judgment.decision == "approve":
                needed = {FlagKind.DISCOVERY, FlagKind.ARCHIVAL, FlagKind.VERIFICATION}
                ok = all(
                    any(
                        self.flags[fid].kind == k
                        and self.flags[fid].status == FlagStatus.APPROVED
                        and (self.flags[fid].judged_at or 0) <= judgment.judged_at
                        for fid in self._flags_by_evidence[piece.id]
                    )
                    for k in needed
                )
                if not ok:
                    bad(f"reporting flag {flag.id} approved with gate unmet")

        for event_id, ledger in self.ledgers.items():
            for entry in ledger.entries:
                if entry.amount < 0:
                    bad(f"ledger entry {entry.id} negative")
                if entry.source in (SOURCE_FLAG, SOURCE_COLLAB):
                    flag = self.flags.get(entry.source_id)
                    if flag is None or flag.status != FlagStatus.APPROVED:
                        bad(f"ledger entry {entry.id} references a non-approved flag")
                elif entry.source == SOURCE_TASK:
                    r = self.responses.get(entry.source_id)
                    if r is None or r.status != ResponseStatus.ACCEPTED:
                        bad(f"ledger entry {entry.id} references a non-accepted response")
            for fid, flag in self.flags.items():
                if flag.status != FlagStatus.APPROVED:
                    continue
                piece = self.evidence[flag.evidence_id]
                if piece.event_id != event_id:
                    continue
                policy = self.policies[self.events[event_id].collab_policy_id]
                cross = flag.author_team_id != piece.owner_team_id
                has_bonus = ledger.collab_bonus(fid) is not None
                if has_bonus and not (cross and policy.enabled):
                    bad(f"flag {fid} has a collab bonus but is not a cross-team contribution")
                if cross and policy.enabled and not has_bonus:
                    bad(f"cross-team flag {fid} is missing its collab bonus")
            feed = self.feeds.get(event_id, [])
            for i, entry in enumerate(feed):
                if entry.cursor != i + 1:
                    bad(f"feed cursor gap in event {event_id} at position {i}")

        for task_id, task in self.tasks.items():
            accepted = [
                rid for rid in self._responses_by_task.get(task_id, [])
                if self.responses[rid].status == ResponseStatus.ACCEPTED
            ]
            if len(accepted) > task.max_accepted:
                bad(f"task {task_id} exceeded its acceptance cap")
            ledger = self.ledgers[task.event_id]
            paid = sum(
                (ledger.task_reward(rid).amount if ledger.task_reward(rid) else 0)
                for rid in self._responses_by_task.get(task_id, [])
            )
            if paid > task.reward_points * task.max_accepted:
                bad(f"task {task_id} paid out beyond its budget")
            for rid in self._responses_by_task.get(task_id, []):
                if self.responses[rid].responder_id == task.creator_user_id:
                    bad(f"task {task_id} has a self-response")

        for team in self.teams.values():
            if not (2 <= len(team.member_ids) <= self.max_team_size):
                bad(f"team {team.id} size out of bounds")
            if team.leader_id not in team.member_ids:
                bad(f"team {team.id} leader is not a member")

        return problems
