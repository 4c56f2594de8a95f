"""Named mutating actions: the shared vocabulary of the trace format,
the persistence log, and the HTTP layer.

Every mutation is expressible as (actor, action name, params, at). Both
replay and crash recovery re-execute these records against a fresh
engine, so the mapping here must stay total over the engine's mutators.
"""

from __future__ import annotations

from typing import Any, Callable

from .engine import Engine
from .errors import ValidationError


def _create_user(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.create_user(
        display_name=p["display_name"], roles=p["roles"],
        password_hash=p.get("password_hash"), actor=actor, at=at,
    )


def _create_event(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.create_event(
        actor=actor, title=p["title"], rubric=p["rubric"],
        collab_policy=p.get("collab_policy", {"mode": "multiplier", "fraction": "1/4"}),
        duration_hint=p.get("duration_hint"), at=at,
    )


def _add_thread(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.add_thread(
        actor=actor, event_id=p["event_id"], title=p["title"],
        description=p.get("description", ""), at=at,
    )


def _create_team(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.create_team(
        actor=actor, event_id=p["event_id"], name=p["name"],
        member_ids=p["member_ids"], leader_id=p["leader_id"], at=at,
    )


def _transition_event(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.transition_event(actor=actor, event_id=p["event_id"], target=p["target"], at=at)


def _new_evidence(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.new_evidence_with_discovery(
        actor=actor, thread_id=p["thread_id"], name=p["name"], source_url=p["source_url"],
        discovery_body=p["discovery_body"], self_assessment=p.get("self_assessment", {}), at=at,
    )


def _add_flag(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.add_flag(
        actor=actor, evidence_id=p["evidence_id"], kind=p["kind"], body=p["body"],
        self_assessment=p.get("self_assessment", {}), at=at,
    )


def _resubmit_flag(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.resubmit_flag(
        actor=actor, rejected_flag_id=p["rejected_flag_id"], body=p["body"],
        self_assessment=p.get("self_assessment", {}), at=at,
    )


def _judge_flag(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.judge_flag(
        actor=actor, flag_id=p["flag_id"], decision=p["decision"],
        awarded_points=p.get("awarded_points", 0), comment=p.get("comment", ""), at=at,
    )


def _register_tool(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.register_tool(actor=actor, name=p["name"], api_token=p.get("api_token"), at=at)


def _revoke_tool(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.revoke_tool(actor=actor, tool_id=p["tool_id"], at=at)


def _create_task(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.create_task(
        actor=actor, event_id=p["event_id"], title=p["title"],
        instructions=p.get("instructions", ""), payload=p.get("payload"),
        reward_points=p["reward_points"], max_accepted=p.get("max_accepted", 1), at=at,
    )


def _withdraw_task(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.withdraw_task(actor=actor, task_id=p["task_id"], at=at)


def _submit_response(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.submit_response(actor=actor, task_id=p["task_id"], payload=p.get("payload"), at=at)


def _adjudicate_response(engine: Engine, actor: str | None, at: int, p: dict[str, Any]):
    return engine.adjudicate_response(
        actor=actor, response_id=p["response_id"], decision=p["decision"], at=at
    )


ACTIONS: dict[str, Callable[[Engine, str | None, int, dict[str, Any]], Any]] = {
    "create_user": _create_user,
    "create_event": _create_event,
    "add_thread": _add_thread,
    "create_team": _create_team,
    "transition_event": _transition_event,
    "new_evidence": _new_evidence,
    "add_flag": _add_flag,
    "resubmit_flag": _resubmit_flag,
    "judge_flag": _judge_flag,
    "register_tool": _register_tool,
    "revoke_tool": _revoke_tool,
    "create_task": _create_task,
    "withdraw_task": _withdraw_task,
    "submit_response": _submit_response,
    "adjudicate_response": _adjudicate_response,
}


def apply_action(
    engine: Engine, action: str, actor: str | None, params: dict[str, Any], at: int
) -> Any:
    handler = ACTIONS.get(action)
    if handler is None:
        raise ValidationError(f"unknown action {action!r}")
    return handler(engine, actor, at, params)
