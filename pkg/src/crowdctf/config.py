"""Service configuration: one YAML file plus environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ValidationError

ENV_PREFIX = "CROWDCTF_"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8800
    store_path: str = "crowdctf.store"
    poll_seconds: int = 5
    session_ttl_seconds: int = 12 * 3600
    fsync: bool = False

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ServiceConfig":
        values: dict = {}
        if path is not None:
            doc = yaml.safe_load(Path(path).read_text()) or {}
            if not isinstance(doc, dict):
                raise ValidationError("config file must be a key/value document")
            values.update(doc)
        for field_name, caster in (
            ("host", str), ("port", int), ("store_path", str),
            ("poll_seconds", int), ("session_ttl_seconds", int),
        ):
            env = os.environ.get(ENV_PREFIX + field_name.upper())
            if env is not None:
                values[field_name] = caster(env)
        env = os.environ.get(ENV_PREFIX + "FSYNC")
        if env is not None:
            values["fsync"] = env.lower() in ("1", "true", "yes")
        unknown = set(values) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)
