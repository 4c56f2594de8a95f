"""Synthetic trace generation.

A TraceSpec fixes counts as hard quotas (flags per kind, approvals,
refuting verdicts, tasks) plus a seed; the generator emits a legal action
history that replays to exactly those tallies. Ordering respects every
workflow rule: reporting flags are only approved after their evidence has
approved discovery, archival, and verification flags, and every judgment
lands a fixed delay after its submission so latency statistics are exact.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any

from .errors import ValidationError
from .trace import TraceAction

PASSWORD_SALT = "demo-salt"


def hash_password(password: str, salt: str = PASSWORD_SALT) -> str:
    import hashlib

    digest = hashlib.sha256(f"{salt}:{password}".encode()).hexdigest()
    return f"sha256:{salt}:{digest}"


@dataclass
class TraceSpec:
    name: str = "synthetic"
    team_sizes: list[int] = field(default_factory=lambda: [4, 4, 4, 4])
    team_names: list[str] | None = None
    threads: int = 3
    evidence: int = 20  # one discovery flag each
    archival: int = 10
    verification: int = 8
    reporting: int = 2
    approved: int | None = None  # exact quota; None -> probability below
    approval_probability: float = 0.85
    refuting: int | None = None  # exact quota among approved verifications
    refute_probability: float = 0.0
    cross_team_fraction: float = 0.0
    tasks: int = 0
    task_reward: int = 25
    judges: int = 3
    judge_delay_seconds: int = 600  # constant per-flag judging delay
    points_per_kind: int = 20  # flat rubric
    seed: int = 0
    finalize: bool = True
    leave_pending: int = 0  # flags intentionally left unjudged (event stays open)
    demo_password: str | None = None

    @property
    def total_flags(self) -> int:
        return self.evidence + self.archival + self.verification + self.reporting

    def validate(self) -> None:
        if self.evidence < 0 or self.archival < 0 or self.verification < 0 or self.reporting < 0:
            raise ValidationError("flag counts must be non-negative")
        if any(not (2 <= s <= 5) for s in self.team_sizes) or len(self.team_sizes) < 1:
            raise ValidationError("team sizes must be between 2 and 5")
        if not (0 <= self.approval_probability <= 1) or not (0 <= self.refute_probability <= 1):
            raise ValidationError("probabilities must be in [0, 1]")
        if not (0 <= self.cross_team_fraction <= 1):
            raise ValidationError("cross_team_fraction must be in [0, 1]")
        if self.reporting > 0 and (self.archival < 1 or self.verification < 1 or self.evidence < 1):
            raise ValidationError(
                "infeasible spec: reporting flags need at least one archival and one "
                "verification flag to approve first"
            )
        if self.cross_team_fraction > 0 and len(self.team_sizes) < 2:
            raise ValidationError("infeasible spec: cross-team flags need at least two teams")
        if self.tasks > 0 and len(self.team_sizes) < 2:
            raise ValidationError("infeasible spec: tasks need a responder from another team")
        if self.approved is not None and not (0 <= self.approved <= self.total_flags):
            raise ValidationError("approved quota out of range")
        if self.leave_pending and self.finalize:
            raise ValidationError("cannot finalize with flags left pending")
        if self.leave_pending > self.total_flags:
            raise ValidationError("leave_pending exceeds total flags")


class _Builder:
    """Collects actions while predicting the ids the engine will assign."""

    def __init__(self):
        self.actions: list[TraceAction] = []
        self._counters: dict[str, int] = {}
        self.clock = 0

    def _next(self, prefix: str) -> str:
        n = self._counters.get(prefix, 0) + 1
        self._counters[prefix] = n
        return f"{prefix}{n}"

    def tick(self, seconds: int = 1) -> int:
        self.clock += seconds
        return self.clock

    def add(self, actor: str | None, action: str, params: dict[str, Any], at: int | None = None):
        self.actions.append(
            TraceAction(at=self.clock if at is None else at, actor=actor,
                        action=action, params=params)
        )

    def create_user(self, name: str, roles: list[str], password_hash: str | None = None) -> str:
        uid = self._next("u")
        params: dict[str, Any] = {"display_name": name, "roles": roles}
        if password_hash:
            params["password_hash"] = password_hash
        self.add(None, "create_user", params)
        return uid

    def create_event(self, actor: str, title: str, rubric: dict, policy: dict) -> str:
        eid = self._next("ev")
        self.add(actor, "create_event",
                 {"title": title, "rubric": rubric, "collab_policy": policy})
        return eid

    def add_thread(self, actor: str, event_id: str, title: str) -> str:
        tid = self._next("th")
        self.add(actor, "add_thread", {"event_id": event_id, "title": title})
        return tid

    def create_team(self, actor: str, event_id: str, name: str, members: list[str]) -> str:
        tid = self._next("tm")
        self.add(actor, "create_team",
                 {"event_id": event_id, "name": name, "member_ids": members,
                  "leader_id": members[0]})
        return tid

    def new_evidence(self, actor: str, thread_id: str, name: str, url: str,
                     body: dict, sa: dict) -> tuple[str, str]:
        eid = self._next("ei")
        fid = self._next("fl")
        self.add(actor, "new_evidence",
                 {"thread_id": thread_id, "name": name, "source_url": url,
                  "discovery_body": body, "self_assessment": sa})
        return eid, fid

    def add_flag(self, actor: str, evidence_id: str, kind: str, body: dict, sa: dict) -> str:
        fid = self._next("fl")
        self.add(actor, "add_flag",
                 {"evidence_id": evidence_id, "kind": kind, "body": body,
                  "self_assessment": sa})
        return fid

    def judge(self, actor: str, flag_id: str, decision: str, points: int, at: int) -> None:
        self.add(actor, "judge_flag",
                 {"flag_id": flag_id, "decision": decision, "awarded_points": points},
                 at=at)

    def create_task(self, actor: str, event_id: str, title: str, reward: int,
                    max_accepted: int = 1) -> str:
        tid = self._next("tk")
        self.add(actor, "create_task",
                 {"event_id": event_id, "title": title, "instructions": "",
                  "reward_points": reward, "max_accepted": max_accepted})
        return tid

    def submit_response(self, actor: str, task_id: str) -> str:
        rid = self._next("rs")
        self.add(actor, "submit_response", {"task_id": task_id, "payload": {}})
        return rid


def _flat_rubric_doc(points: int) -> dict:
    return {kind: {"base_points": points, "criteria": []}
            for kind in ("discovery", "archival", "verification", "reporting")}


def generate_trace(spec: TraceSpec) -> list[TraceAction]:
    spec.validate()
    rng = random.Random(spec.seed)
    b = _Builder()

    expert = b.create_user("expert", ["expert"],
                           hash_password(spec.demo_password) if spec.demo_password else None)
    judges = []
    for i in range(spec.judges):
        b.tick()
        judges.append(b.create_user(
            f"judge-{i + 1}", ["judge"],
            hash_password(spec.demo_password) if spec.demo_password else None))

    team_names = spec.team_names or [f"team-{i + 1}" for i in range(len(spec.team_sizes))]
    members_by_team_index: list[list[str]] = []
    for i, size in enumerate(spec.team_sizes):
        members = []
        for j in range(size):
            b.tick()
            members.append(b.create_user(
                f"{team_names[i]}-{j + 1}", ["participant"],
                hash_password(spec.demo_password) if spec.demo_password else None))
        members_by_team_index.append(members)

    b.tick()
    event_id = b.create_event(
        expert, spec.name, _flat_rubric_doc(spec.points_per_kind),
        {"mode": "multiplier", "fraction": "1/4", "enabled": True},
    )
    thread_ids = []
    for i in range(max(1, spec.threads)):
        b.tick()
        thread_ids.append(b.add_thread(expert, event_id, f"thread {i + 1}"))
    team_ids = []
    for i, members in enumerate(members_by_team_index):
        b.tick()
        team_ids.append(b.create_team(expert, event_id, team_names[i], members))
    b.tick()
    b.add(expert, "transition_event", {"event_id": event_id, "target": "open"})

    n_teams = len(team_ids)

    def other_team(idx: int) -> int:
        choices = [i for i in range(n_teams) if i != idx]
        return rng.choice(choices)

    # --- evidence + discovery flags ------------------------------------
    evidence_ids: list[str] = []
    discovery_flag: dict[str, str] = {}
    owner_index: dict[str, int] = {}
    for i in range(spec.evidence):
        b.tick()
        owner = i % n_teams
        author = rng.choice(members_by_team_index[owner])
        eid, fid = b.new_evidence(
            author, thread_ids[i % len(thread_ids)], f"evidence {i + 1}",
            f"https://example.com/post/{spec.seed}/{i + 1}",
            {"subtype": rng.choice(["video", "image", "text", "account"]),
             "method_description": "keyword search"},
            {},
        )
        evidence_ids.append(eid)
        discovery_flag[eid] = fid
        owner_index[eid] = owner

    if spec.evidence == 0 and (spec.archival or spec.verification or spec.reporting):
        raise ValidationError("infeasible spec: non-discovery flags need evidence to attach to")

    # Hosts: the evidence pieces whose discovery/archival/verification flags
    # are reserved approvals so reporting flags have somewhere legal to land.
    n_hosts = 0
    if spec.reporting > 0:
        n_hosts = min(spec.reporting, spec.archival, spec.verification, spec.evidence)
    hosts = evidence_ids[:n_hosts]

    must_approve: set[str] = set()
    flags: list[tuple[str, str, str]] = []  # (flag_id, kind, evidence_id)
    for eid in evidence_ids:
        flags.append((discovery_flag[eid], "discovery", eid))
        if eid in hosts:
            must_approve.add(discovery_flag[eid])

    def pick_author(eid: str, cross: bool) -> str:
        idx = owner_index[eid]
        if cross:
            idx = other_team(idx)
        return rng.choice(members_by_team_index[idx])

    n_extra = spec.archival + spec.verification + spec.reporting
    n_cross = round(spec.cross_team_fraction * n_extra) if n_teams > 1 else 0
    cross_slots = [True] * n_cross + [False] * (n_extra - n_cross)
    rng.shuffle(cross_slots)
    slot = 0

    # recover discovery submission times from the emitted actions
    flag_submit_time: dict[str, int] = {}
    _disc_iter = iter(evidence_ids)
    for action in b.actions:
        if action.action == "new_evidence":
            flag_submit_time[discovery_flag[next(_disc_iter)]] = action.at

    archival_ids: list[str] = []
    for i in range(spec.archival):
        b.tick()
        eid = hosts[i] if i < n_hosts else rng.choice(evidence_ids)
        fid = b.add_flag(
            pick_author(eid, cross_slots[slot]), eid, "archival",
            {"archive_url": f"https://archive.example.org/{spec.seed}/{i + 1}",
             "method": "archive service"},
            {},
        )
        slot += 1
        archival_ids.append(fid)
        flags.append((fid, "archival", eid))
        flag_submit_time[fid] = b.clock
        if i < n_hosts:
            must_approve.add(fid)

    verification_ids: list[str] = []
    for i in range(spec.verification):
        b.tick()
        eid = hosts[i] if i < n_hosts else rng.choice(evidence_ids)
        fid = b.add_flag(
            pick_author(eid, cross_slots[slot]), eid, "verification",
            {"claim": f"claim {i + 1}", "verdict": "inconclusive",
             "evidence_links": [], "process": "manual check"},
            {},
        )
        slot += 1
        verification_ids.append(fid)
        flags.append((fid, "verification", eid))
        flag_submit_time[fid] = b.clock
        if i < n_hosts:
            must_approve.add(fid)

    # --- decide judgments ----------------------------------------------
    non_reporting = list(flags)
    judged_total = spec.total_flags - spec.leave_pending
    if spec.approved is not None:
        n_approved = spec.approved
        n_rejected = judged_total - n_approved
        if n_rejected < 0:
            raise ValidationError("infeasible spec: approved quota exceeds judged flags")
    else:
        n_rejected = sum(
            1 for _ in range(judged_total) if rng.random() > spec.approval_probability
        )

    # Rejections land on non-reserved archival and discovery flags first,
    # overflowing onto reporting flags; verifications are never rejected so
    # an exact refuting quota keeps its denominator intact.
    reject_order: list[str] = []
    reject_order += [f for f in archival_ids if f not in must_approve]
    reject_order += [discovery_flag[e] for e in evidence_ids
                     if discovery_flag[e] not in must_approve]
    if n_rejected > len(reject_order) + spec.reporting:
        raise ValidationError(
            "infeasible spec: rejection quota exceeds the flags that may be rejected "
            "without breaking the reporting gate or the refuting quota"
        )
    rejected: set[str] = set(reject_order[: min(n_rejected, len(reject_order))])
    reporting_rejections = n_rejected - len(rejected)

    approved_verifications = [f for f in verification_ids if f not in rejected]
    if spec.refuting is not None:
        if spec.refuting > len(approved_verifications):
            raise ValidationError(
                "infeasible spec: refuting quota exceeds approved verification flags"
            )
        refuting = set(rng.sample(approved_verifications, spec.refuting))
    else:
        refuting = {f for f in approved_verifications if rng.random() < spec.refute_probability}

    # rewrite verification verdicts now that refuting flags are known
    verdict_of = {
        fid: ("refutes" if fid in refuting else rng.choice(["supports", "inconclusive"]))
        for fid in verification_ids
    }
    _v_iter = iter(verification_ids)
    for action in b.actions:
        if action.action == "add_flag" and action.params["kind"] == "verification":
            action.params["body"]["verdict"] = verdict_of[next(_v_iter)]

    leave_pending_set: set[str] = set()
    if spec.leave_pending:
        # prefer leaving non-reserved, non-rejected flags pending
        candidates = [fid for fid, _, _ in non_reporting
                      if fid not in must_approve and fid not in rejected]
        reporting_budget = max(0, spec.leave_pending - len(candidates))
        leave_pending_set = set(candidates[len(candidates) - (spec.leave_pending - reporting_budget):])
    if reporting_rejections > spec.reporting - max(0, spec.leave_pending - len(leave_pending_set)):
        raise ValidationError("infeasible spec: too many rejections for the reporting flags")

    # --- judge discovery / archival / verification ----------------------
    delay = spec.judge_delay_seconds
    judge_cycle = 0
    last_judgment_at = b.clock
    for fid, kind, eid in non_reporting:
        if fid in leave_pending_set:
            continue
        decision = "reject" if fid in rejected else "approve"
        points = spec.points_per_kind if decision == "approve" else 0
        judge_id = judges[judge_cycle % len(judges)]
        judge_cycle += 1
        at = flag_submit_time[fid] + delay
        b.judge(judge_id, fid, decision, points, at=at)
        last_judgment_at = max(last_judgment_at, at)

    # --- reporting flags: submitted after their hosts are fully approved
    b.clock = max(b.clock, last_judgment_at) + 1
    pending_reporting = spec.leave_pending - len(leave_pending_set)
    for i in range(spec.reporting):
        b.tick()
        eid = hosts[i % n_hosts] if n_hosts else rng.choice(evidence_ids)
        fid = b.add_flag(
            pick_author(eid, cross_slots[slot]), eid, "reporting",
            {"report_text": f"investigation report {i + 1}"},
            {},
        )
        slot += 1
        submit_time = b.clock
        if pending_reporting > 0:
            pending_reporting -= 1
            leave_pending_set.add(fid)
            continue
        if reporting_rejections > 0:
            decision, points = "reject", 0
            reporting_rejections -= 1
        else:
            decision, points = "approve", spec.points_per_kind
        judge_id = judges[judge_cycle % len(judges)]
        judge_cycle += 1
        b.judge(judge_id, fid, decision, points, at=submit_time + delay)
        b.clock = submit_time + delay

    # --- tasks ----------------------------------------------------------
    for i in range(spec.tasks):
        b.tick()
        creator_team = i % n_teams
        creator = members_by_team_index[creator_team][0]
        task_id = b.create_task(creator, event_id, f"task {i + 1}", spec.task_reward)
        b.tick()
        responder = members_by_team_index[other_team(creator_team)][0]
        rid = b.submit_response(responder, task_id)
        b.tick()
        b.add(judges[i % len(judges)], "adjudicate_response",
              {"response_id": rid, "decision": "accept"})

    if spec.finalize:
        b.tick()
        b.add(expert, "transition_event", {"event_id": event_id, "target": "closed"})
        b.tick()
        b.add(expert, "transition_event", {"event_id": event_id, "target": "finalized"})

    # judgments were appended with explicit timestamps that can interleave
    # submissions; a trace must be globally time-ordered
    b.actions.sort(key=lambda a: a.at)
    return b.actions


# ----------------------------------------------------------------------
# Specs shaped like the five deployed events

EVENT_SHAPES: dict[int, TraceSpec] = {
    1: TraceSpec(name="event-1", evidence=148, archival=48, verification=29, reporting=2,
                 approved=179, refuting=None, refute_probability=0.0,
                 team_sizes=[4, 4, 4, 4, 5], threads=4, judges=4,
                 judge_delay_seconds=600, seed=101),
    2: TraceSpec(name="event-2", evidence=97, archival=39, verification=22, reporting=0,
                 approved=144, refuting=7,
                 team_sizes=[4, 4, 4, 4, 5], threads=4, judges=4,
                 judge_delay_seconds=600, seed=102),
    3: TraceSpec(name="event-3", evidence=112, archival=78, verification=53, reporting=14,
                 approved=229, refuting=37, cross_team_fraction=0.05,
                 team_sizes=[4, 4, 4, 4, 5], threads=4, judges=5,
                 judge_delay_seconds=636, seed=103),
    4: TraceSpec(name="event-4", evidence=114, archival=75, verification=40, reporting=9,
                 approved=209, refuting=27, cross_team_fraction=0.05,
                 team_sizes=[4, 4, 4, 4, 5], threads=4, judges=5,
                 judge_delay_seconds=636, seed=104),
    5: TraceSpec(name="event-5", evidence=228, archival=210, verification=93, reporting=66,
                 approved=480, refuting=83, cross_team_fraction=0.08, tasks=6,
                 team_sizes=[4, 4, 4, 4, 4, 5], threads=5, judges=11,
                 judge_delay_seconds=1236, seed=105),
}


def event_shape_spec(event_number: int) -> TraceSpec:
    try:
        shape = EVENT_SHAPES[event_number]
    except KeyError:
        raise ValidationError(f"no bundled shape for event {event_number}")
    return TraceSpec(**{**shape.__dict__})


# ----------------------------------------------------------------------
# Hand-tuned team-accounting traces

def tuned_team_trace(own_award: int, cross_award: int, task_reward: int,
                     seed: int = 7) -> list[TraceAction]:
    """Two-team trace where the focal team's ledger decomposes exactly into
    own-flag points, cross-team points (award + quarter bonus), and one task
    reward. With a quarter multiplier the focal total is
    own_award + cross_award * 5/4 + task_reward."""
    if cross_award % 4 != 0:
        raise ValidationError("cross_award must be divisible by 4 for an exact bonus")
    b = _Builder()
    expert = b.create_user("expert", ["expert"])
    judge = b.create_user("judge", ["judge"])
    focal = [b.create_user(f"focal-{i}", ["participant"]) for i in range(1, 3)]
    other = [b.create_user(f"other-{i}", ["participant"]) for i in range(1, 3)]
    big = max(own_award, cross_award, 1)
    rubric = {kind: {"base_points": big, "criteria": []}
              for kind in ("discovery", "archival", "verification", "reporting")}
    b.tick()
    event_id = b.create_event(expert, "tuned", rubric,
                              {"mode": "multiplier", "fraction": "1/4", "enabled": True})
    b.tick()
    thread = b.add_thread(expert, event_id, "thread")
    b.tick()
    b.create_team(expert, event_id, "focal", focal)
    b.tick()
    b.create_team(expert, event_id, "other", other)
    b.tick()
    b.add(expert, "transition_event", {"event_id": event_id, "target": "open"})

    # own evidence + discovery awarded own_award
    b.tick()
    _, own_flag = b.new_evidence(
        focal[0], thread, "own evidence", "https://example.com/own",
        {"subtype": "video", "method_description": "search"}, {})
    b.tick()
    b.judge(judge, own_flag, "approve", own_award, at=b.clock)

    # other team's evidence; focal contributes a verification cross-team
    b.tick()
    other_evidence, other_disc = b.new_evidence(
        other[0], thread, "their evidence", "https://example.com/theirs",
        {"subtype": "text", "method_description": "search"}, {})
    b.tick()
    b.judge(judge, other_disc, "approve", 0, at=b.clock)
    b.tick()
    cross_flag = b.add_flag(
        focal[1], other_evidence, "verification",
        {"claim": "claim", "verdict": "refutes", "evidence_links": [],
         "process": "cross-check"}, {})
    b.tick()
    b.judge(judge, cross_flag, "approve", cross_award, at=b.clock)

    # task created by the other team, completed by a focal member
    if task_reward > 0:
        b.tick()
        task = b.create_task(other[1], event_id, "labeling task", task_reward)
        b.tick()
        rid = b.submit_response(focal[0], task)
        b.tick()
        b.add(judge, "adjudicate_response", {"response_id": rid, "decision": "accept"})

    b.actions.sort(key=lambda a: a.at)
    return b.actions


def team_sl_event5_trace() -> list[TraceAction]:
    # focal total 10000: 8637 own + 712 cross (+178 bonus) + 473 task
    # -> pct_collab 8.90, pct_tasks 4.73, sum 13.63
    return tuned_team_trace(own_award=8637, cross_award=712, task_reward=473)


def team_kp_event5_trace() -> list[TraceAction]:
    # focal total 10000: 8759 own + 980 cross (+245 bonus) + 16 task
    # -> pct_collab 12.25, pct_tasks 0.16, sum 12.41
    return tuned_team_trace(own_award=8759, cross_award=980, task_reward=16)
