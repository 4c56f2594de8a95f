"""File-backed persistence: an append-only action log with recovery by replay.

Each mutation the service commits is appended as one JSON line carrying a
checksum. Opening a store verifies every line and re-executes the actions
against a fresh engine, so a restart reconstructs exactly the pre-crash
state (the engine is deterministic over action sequences). A truncated or
tampered file refuses to load.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any

from .actions import apply_action
from .engine import Engine
from .errors import StoreCorruptError

STORE_FORMAT = "crowdctf-store"
STORE_VERSION = 1


def _canonical(record: dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def _checksum(record: dict[str, Any]) -> str:
    return hashlib.sha256(_canonical(record).encode()).hexdigest()[:16]


class Store:
    """Owns an engine plus its durable action log."""

    def __init__(self, path: str | Path, engine: Engine, fsync: bool = False):
        self.path = Path(path)
        self.engine = engine
        self.fsync = fsync
        self._fh = open(self.path, "a", encoding="utf-8")

    @classmethod
    def create(cls, path: str | Path, fsync: bool = False) -> "Store":
        path = Path(path)
        if path.exists() and path.stat().st_size > 0:
            raise StoreCorruptError(f"refusing to overwrite existing store at {path}")
        path.parent.mkdir(parents=True, exist_ok=True)
        header = {"format": STORE_FORMAT, "version": STORE_VERSION}
        path.write_text(json.dumps(header) + "\n", encoding="utf-8")
        return cls(path, Engine(), fsync=fsync)

    @classmethod
    def open(cls, path: str | Path, fsync: bool = False) -> "Store":
        """Load and verify the log, replaying every action into a fresh engine."""
        path = Path(path)
        if not path.exists():
            raise StoreCorruptError(f"no store at {path}")
        text = path.read_text(encoding="utf-8")
        if not text.endswith("\n"):
            raise StoreCorruptError("store file is truncated (no trailing newline)")
        lines = text.splitlines()
        if not lines:
            raise StoreCorruptError("store file is empty")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError:
            raise StoreCorruptError("store header is not valid JSON")
        if header.get("format") != STORE_FORMAT or header.get("version") != STORE_VERSION:
            raise StoreCorruptError(f"unrecognized store header: {header}")
        engine = Engine()
        for lineno, line in enumerate(lines[1:], start=2):
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                raise StoreCorruptError(f"store line {lineno} is not valid JSON")
            expected = record.pop("check", None)
            if expected != _checksum(record):
                raise StoreCorruptError(f"store line {lineno} failed its integrity check")
            try:
                apply_action(engine, record["action"], record.get("actor"),
                             record.get("params", {}), record.get("at", 0))
            except Exception as exc:
                raise StoreCorruptError(f"store line {lineno} failed to replay: {exc}")
        return cls(path, engine, fsync=fsync)

    @classmethod
    def open_or_create(cls, path: str | Path, fsync: bool = False) -> "Store":
        path = Path(path)
        if path.exists() and path.stat().st_size > 0:
            return cls.open(path, fsync=fsync)
        return cls.create(path, fsync=fsync)

    def apply(self, action: str, actor: str | None, params: dict[str, Any], at: int) -> Any:
        """Execute one action and log it; the log is only written on success."""
        result = apply_action(self.engine, action, actor, params, at)
        record = {"at": at, "actor": actor, "action": action, "params": params}
        record["check"] = _checksum({"at": at, "actor": actor, "action": action, "params": params})
        self._fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
        self._fh.flush()
        if self.fsync:
            os.fsync(self._fh.fileno())
        return result

    def close(self) -> None:
        self._fh.close()
