"""Shared builders for engine-level tests: a small ready-to-use event."""

from __future__ import annotations

from types import SimpleNamespace

from crowdctf.engine import Engine
from crowdctf.rubric import default_collab_policy, flat_rubric


def make_event(
    engine: Engine | None = None,
    n_teams: int = 2,
    team_size: int = 2,
    n_judges: int = 1,
    points: int = 20,
    rubric=None,
    policy=None,
    threads: int = 1,
    open_event: bool = True,
) -> SimpleNamespace:
    """Build an event with teams, threads, and judges, optionally opened.

    Returns a namespace with ids: expert, judges, teams (Team objects),
    members (list per team), event, threads.
    """
    engine = engine or Engine()
    expert = engine.create_user("expert", ["expert"]).id
    judges = [
        engine.create_user(f"judge-{i + 1}", ["judge"]).id for i in range(n_judges)
    ]
    rubric = rubric if rubric is not None else flat_rubric(points)
    policy = policy if policy is not None else default_collab_policy()
    event = engine.create_event(expert, "test event", rubric, policy, at=0)
    thread_ids = [
        engine.add_thread(expert, event.id, f"thread {i + 1}", at=0).id
        for i in range(threads)
    ]
    teams = []
    members = []
    for t in range(n_teams):
        ids = [
            engine.create_user(f"t{t + 1}-m{m + 1}", ["participant"]).id
            for m in range(team_size)
        ]
        team = engine.create_team(ids[0], event.id, f"team-{t + 1}", ids, ids[0], at=0)
        teams.append(team)
        members.append(ids)
    if open_event:
        engine.transition_event(expert, event.id, "open", at=0)
    return SimpleNamespace(
        engine=engine, expert=expert, judges=judges, event=event,
        threads=thread_ids, teams=teams, members=members,
    )


def discovery_body(n: int = 0) -> dict:
    return {"subtype": "text", "method_description": f"keyword search {n}"}


def submit_evidence(fx, author: str, n: int, thread: str | None = None, at: int = 0):
    """One evidence piece with its discovery flag; unique URL per n."""
    return fx.engine.new_evidence_with_discovery(
        actor=author, thread_id=thread or fx.threads[0],
        name=f"piece {n}", source_url=f"https://example.com/item/{n}",
        discovery_body=discovery_body(n), self_assessment={}, at=at,
    )


BODY_BY_KIND = {
    "archival": {"archive_url": "https://archive.example.com/snap/1"},
    "verification": {
        "claim": "the clip is from an earlier storm",
        "verdict": "refutes",
        "evidence_links": ["https://example.com/original"],
    },
    "reporting": {"report_text": "reported to the platform"},
}


def submit_kind(fx, author: str, evidence_id: str, kind: str, at: int = 0):
    return fx.engine.add_flag(
        actor=author, evidence_id=evidence_id, kind=kind,
        body=dict(BODY_BY_KIND[kind]), self_assessment={}, at=at,
    )


def approve_dav(fx, evidence_id: str, discovery_flag_id: str, author: str,
                judge: str | None = None, at: int = 0) -> None:
    """Approve discovery, archival, and verification so the gate opens."""
    judge = judge or fx.judges[0]
    arch = submit_kind(fx, author, evidence_id, "archival", at=at)
    ver = submit_kind(fx, author, evidence_id, "verification", at=at)
    for fid in (discovery_flag_id, arch.id, ver.id):
        fx.engine.judge_flag(judge, fid, "approve", awarded_points=1, at=at)
