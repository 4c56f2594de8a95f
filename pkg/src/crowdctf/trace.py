"""Trace files: line-delimited recorded action histories and their replay.

A trace is a versioned header line followed by one JSON action per line,
ordered by non-decreasing virtual timestamp. Replay drives the engine
directly (no network) and is deterministic: the same file always produces
the same final state, and timestamps come from the trace, so latency
statistics are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .actions import apply_action
from .engine import Engine
from .errors import PlatformError, ValidationError

TRACE_FORMAT = "crowdctf-trace"
TRACE_VERSION = 1


@dataclass
class TraceAction:
    at: int
    actor: str | None
    action: str
    params: dict[str, Any]

    def to_line(self) -> str:
        return json.dumps(
            {"at": self.at, "actor": self.actor, "action": self.action, "params": self.params},
            sort_keys=True, separators=(",", ":"),
        )


class TraceError(ValidationError):
    code = "TRACE"


def write_trace(actions: Iterable[TraceAction], path: str | Path) -> None:
    header = json.dumps({"format": TRACE_FORMAT, "version": TRACE_VERSION})
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for action in actions:
            fh.write(action.to_line() + "\n")


def read_trace(path: str | Path) -> list[TraceAction]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise TraceError("trace file is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise TraceError("trace header is not valid JSON")
    if header.get("format") != TRACE_FORMAT or header.get("version") != TRACE_VERSION:
        raise TraceError(f"unrecognized trace header: {header}")
    actions = []
    last_at = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError:
            raise TraceError(f"line {lineno}: not valid JSON")
        try:
            action = TraceAction(
                at=int(doc["at"]), actor=doc.get("actor"),
                action=str(doc["action"]), params=dict(doc.get("params", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TraceError(f"line {lineno}: malformed action ({exc})")
        if last_at is not None and action.at < last_at:
            raise TraceError(f"line {lineno}: timestamps must be non-decreasing")
        last_at = action.at
        actions.append(action)
    return actions


def replay_actions(actions: Iterable[TraceAction], engine: Engine | None = None) -> Engine:
    engine = engine or Engine()
    for i, action in enumerate(actions):
        try:
            apply_action(engine, action.action, action.actor, action.params, action.at)
        except PlatformError as exc:
            raise TraceError(
                f"action {i + 1} ({action.action}) is not a legal history step: {exc.message}",
                {"index": i + 1, "action": action.action, "cause": exc.to_dict()},
            )
    return engine


def replay_trace(path: str | Path, engine: Engine | None = None) -> Engine:
    """Replay a trace file; aborts with the offending line on any violation."""
    actions = read_trace(path)
    try:
        return replay_actions(actions, engine)
    except TraceError as exc:
        index = exc.details.get("index")
        if index is not None:
            # +1 for the header line
            exc.details["line"] = index + 1
        raise
