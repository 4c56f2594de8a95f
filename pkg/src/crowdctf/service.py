"""HTTP application: bearer-token auth, role gates, idempotent mutations,
and the cursor-based change feed.

Every mutating route maps to exactly one engine action, committed through
the store's append-only log, so a restarted service reconstructs the same
state. Error bodies are always {code, message, details}.
"""

from __future__ import annotations

import dataclasses
import hashlib
import hmac
import secrets
import threading
import time
from enum import Enum
from fractions import Fraction
from typing import Any

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse

from . import analytics
from .config import ServiceConfig
from .engine import Engine
from .errors import (
    AuthenticationError,
    AuthorizationError,
    NotFoundError,
    PlatformError,
)
from .model import FlagKind, Role
from .store import Store


def doc(obj: Any) -> Any:
    """Recursively turn domain values into JSON-ready documents."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: doc(v) for k, v in dataclasses.asdict(obj).items() if k != "password_hash"}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {k: doc(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [doc(v) for v in obj]
    if isinstance(obj, set):
        return sorted(doc(v) for v in obj)
    return obj


def verify_password(password: str, password_hash: str | None) -> bool:
    if not password_hash:
        return False
    try:
        scheme, salt, digest = password_hash.split(":", 2)
    except ValueError:
        return False
    if scheme != "sha256":
        return False
    candidate = hashlib.sha256(f"{salt}:{password}".encode()).hexdigest()
    return hmac.compare_digest(candidate, digest)


@dataclasses.dataclass
class Session:
    token: str
    user_id: str
    roles: set[Role]
    expires_at: float
    is_tool: bool = False
    tool_id: str | None = None


class Sessions:
    def __init__(self, ttl_seconds: int):
        self.ttl = ttl_seconds
        self._by_token: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, user_id: str, roles: set[Role]) -> Session:
        token = secrets.token_urlsafe(32)  # 256 bits
        session = Session(token=token, user_id=user_id, roles=roles,
                          expires_at=time.time() + self.ttl)
        with self._lock:
            self._by_token[token] = session
        return session

    def get(self, token: str) -> Session | None:
        with self._lock:
            session = self._by_token.get(token)
            if session and session.expires_at < time.time():
                del self._by_token[token]
                return None
            return session


def create_app(store: Store, config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="crowdctf", docs_url=None, redoc_url=None)
    sessions = Sessions(config.session_ttl_seconds)
    # idempotency key -> (status_code, body); per-process cache
    idempotent: dict[str, tuple[int, Any]] = {}
    idempotent_lock = threading.Lock()

    engine: Engine = store.engine

    def now() -> int:
        return int(time.time())

    @app.exception_handler(PlatformError)
    async def platform_error_handler(request: Request, exc: PlatformError):
        return JSONResponse(status_code=exc.http_status, content=exc.to_dict())

    def session_from(authorization: str | None) -> Session:
        if not authorization or not authorization.startswith("Bearer "):
            raise AuthenticationError("missing bearer token")
        token = authorization.removeprefix("Bearer ")
        session = sessions.get(token)
        if session:
            return session
        tool = engine.tool_by_token(token)
        if tool:
            return Session(token=token, user_id=tool.id, roles={Role.TOOL},
                           expires_at=time.time() + 60, is_tool=True, tool_id=tool.id)
        raise AuthenticationError("invalid or expired token")

    def require(session: Session, *roles: Role) -> None:
        if not any(r in session.roles for r in roles):
            raise AuthorizationError(
                "insufficient role", {"required": sorted(r.value for r in roles)}
            )

    def mutate(session: Session, action: str, params: dict[str, Any],
               idempotency_key: str | None, build_response) -> Any:
        if idempotency_key:
            with idempotent_lock:
                if idempotency_key in idempotent:
                    return idempotent[idempotency_key][1]
        result = store.apply(action, session.user_id, params, at=now())
        body = build_response(result)
        if idempotency_key:
            with idempotent_lock:
                idempotent.setdefault(idempotency_key, (200, body))
        return body

    # ------------------------------------------------------------------
    # auth

    @app.post("/auth/login")
    async def login(body: dict):
        username = body.get("username", "")
        password = body.get("password", "")
        user = next((u for u in engine.users.values() if u.display_name == username), None)
        if user is None or not verify_password(password, user.password_hash):
            # uniform failure: no user enumeration
            raise AuthenticationError("invalid credentials")
        session = sessions.create(user.id, set(user.roles))
        return {"token": session.token, "user_id": user.id,
                "roles": sorted(r.value for r in user.roles),
                "display_name": user.display_name}

    @app.get("/me")
    async def me(authorization: str | None = Header(default=None)):
        session = session_from(authorization)
        out = {"user_id": session.user_id,
               "roles": sorted(r.value for r in session.roles),
               "is_tool": session.is_tool}
        if not session.is_tool:
            user = engine.users[session.user_id]
            out["display_name"] = user.display_name
            out["teams"] = {
                event_id: team_id
                for (event_id, uid), team_id in engine._membership.items()
                if uid == session.user_id
            }
        return out

    # ------------------------------------------------------------------
    # admin: users, events, threads, teams

    @app.post("/users")
    async def create_user(body: dict, authorization: str | None = Header(default=None),
                          idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.EXPERT)
        params = {"display_name": body.get("display_name"),
                  "roles": body.get("roles", ["participant"])}
        if body.get("password"):
            salt = secrets.token_hex(8)
            digest = hashlib.sha256(f"{salt}:{body['password']}".encode()).hexdigest()
            params["password_hash"] = f"sha256:{salt}:{digest}"
        return mutate(session, "create_user", params, idempotency_key, doc)

    @app.post("/events")
    async def create_event(body: dict, authorization: str | None = Header(default=None),
                           idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.EXPERT)
        params = {"title": body.get("title"),
                  "rubric": body.get("rubric"),
                  "collab_policy": body.get("collab_policy",
                                            {"mode": "multiplier", "fraction": "1/4"}),
                  "duration_hint": body.get("duration_hint")}
        return mutate(session, "create_event", params, idempotency_key, doc)

    @app.get("/events")
    async def list_events(authorization: str | None = Header(default=None)):
        session_from(authorization)
        return [doc(e) for e in engine.events.values()]

    @app.get("/events/{event_id}")
    async def get_event(event_id: str, authorization: str | None = Header(default=None)):
        session_from(authorization)
        event = engine.events.get(event_id)
        if event is None:
            raise NotFoundError(f"unknown event {event_id}")
        return doc(event)

    @app.get("/events/{event_id}/rubric")
    async def get_rubric(event_id: str, authorization: str | None = Header(default=None)):
        session_from(authorization)
        event = engine.events.get(event_id)
        if event is None:
            raise NotFoundError(f"unknown event {event_id}")
        rubric = engine.rubrics[event.rubric_id]
        return {"rubric": rubric.to_dict(),
                "max_points": {k.value: rubric.max_points(k) for k in FlagKind},
                "collab_policy": engine.policies[event.collab_policy_id].to_dict()}

    @app.post("/events/{event_id}/transition")
    async def transition(event_id: str, body: dict,
                         authorization: str | None = Header(default=None),
                         idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.EXPERT)
        params = {"event_id": event_id, "target": body.get("target")}
        return mutate(session, "transition_event", params, idempotency_key, doc)

    @app.post("/events/{event_id}/threads")
    async def add_thread(event_id: str, body: dict,
                         authorization: str | None = Header(default=None),
                         idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.EXPERT)
        params = {"event_id": event_id, "title": body.get("title"),
                  "description": body.get("description", "")}
        return mutate(session, "add_thread", params, idempotency_key, doc)

    @app.get("/events/{event_id}/threads")
    async def list_threads(event_id: str, authorization: str | None = Header(default=None)):
        session_from(authorization)
        if event_id not in engine.events:
            raise NotFoundError(f"unknown event {event_id}")
        return [doc(engine.threads[tid]) for tid in engine._threads_by_event[event_id]]

    @app.post("/events/{event_id}/teams")
    async def create_team(event_id: str, body: dict,
                          authorization: str | None = Header(default=None),
                          idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.EXPERT, Role.PARTICIPANT)
        params = {"event_id": event_id, "name": body.get("name"),
                  "member_ids": body.get("member_ids", []),
                  "leader_id": body.get("leader_id")}
        return mutate(session, "create_team", params, idempotency_key, doc)

    @app.get("/events/{event_id}/teams")
    async def list_teams(event_id: str, authorization: str | None = Header(default=None)):
        session_from(authorization)
        if event_id not in engine.events:
            raise NotFoundError(f"unknown event {event_id}")
        return [doc(engine.teams[tid]) for tid in engine._teams_by_event[event_id]]

    # ------------------------------------------------------------------
    # evidence and flags

    @app.post("/events/{event_id}/evidence")
    async def new_evidence(event_id: str, body: dict,
                           authorization: str | None = Header(default=None),
                           idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.PARTICIPANT)
        params = {"thread_id": body.get("thread_id"), "name": body.get("name"),
                  "source_url": body.get("source_url"),
                  "discovery_body": body.get("discovery_body", {}),
                  "self_assessment": body.get("self_assessment", {})}

        def build(result):
            piece, flag = result
            return {"evidence": doc(piece), "discovery_flag": doc(flag)}

        return mutate(session, "new_evidence", params, idempotency_key, build)

    @app.get("/events/{event_id}/evidence")
    async def list_evidence(event_id: str, thread_id: str | None = None,
                            team_id: str | None = None,
                            authorization: str | None = Header(default=None)):
        session_from(authorization)
        pieces = engine.list_evidence(event_id, thread_id=thread_id, team_id=team_id)
        out = []
        for piece in pieces:
            summary = engine.evidence_status(piece.id)
            out.append({**doc(piece), "completion": doc(summary)})
        return out

    @app.get("/evidence/{evidence_id}/status")
    async def evidence_status(evidence_id: str,
                              authorization: str | None = Header(default=None)):
        session_from(authorization)
        return doc(engine.evidence_status(evidence_id))

    @app.get("/evidence/{evidence_id}/gate")
    async def reporting_gate(evidence_id: str,
                             authorization: str | None = Header(default=None)):
        session_from(authorization)
        return engine.reporting_gate(evidence_id)

    @app.post("/evidence/{evidence_id}/flags")
    async def add_flag(evidence_id: str, body: dict,
                       authorization: str | None = Header(default=None),
                       idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.PARTICIPANT)
        params = {"evidence_id": evidence_id, "kind": body.get("kind"),
                  "body": body.get("body", {}),
                  "self_assessment": body.get("self_assessment", {})}
        return mutate(session, "add_flag", params, idempotency_key, doc)

    @app.get("/events/{event_id}/flags")
    async def list_flags(event_id: str, thread_id: str | None = None,
                         status: str | None = None, team_id: str | None = None,
                         kind: str | None = None,
                         authorization: str | None = Header(default=None)):
        session_from(authorization)
        flags = engine.list_flags(event_id, thread_id=thread_id, status=status,
                                  team_id=team_id, kind=kind)
        out = []
        for flag in flags:
            piece = engine.evidence[flag.evidence_id]
            out.append({**doc(flag), "thread_id": piece.thread_id,
                        "evidence_name": piece.name, "source_url": piece.source_url})
        return out

    @app.get("/flags/{flag_id}")
    async def get_flag(flag_id: str, authorization: str | None = Header(default=None)):
        session_from(authorization)
        flag = engine.flags.get(flag_id)
        if flag is None:
            raise NotFoundError(f"unknown flag {flag_id}")
        out = doc(flag)
        judgment = engine.judgments.get(flag_id)
        out["judgment"] = doc(judgment) if judgment else None
        return out

    @app.post("/flags/{flag_id}/judgment")
    async def judge_flag(flag_id: str, body: dict,
                         authorization: str | None = Header(default=None),
                         idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.JUDGE)
        params = {"flag_id": flag_id, "decision": body.get("decision"),
                  "awarded_points": int(body.get("awarded_points", 0)),
                  "comment": body.get("comment", "")}
        return mutate(session, "judge_flag", params, idempotency_key, doc)

    @app.post("/flags/{flag_id}/resubmit")
    async def resubmit_flag(flag_id: str, body: dict,
                            authorization: str | None = Header(default=None),
                            idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.PARTICIPANT)
        params = {"rejected_flag_id": flag_id, "body": body.get("body", {}),
                  "self_assessment": body.get("self_assessment", {})}
        return mutate(session, "resubmit_flag", params, idempotency_key, doc)

    @app.get("/events/{event_id}/judge-queue")
    async def judge_queue(event_id: str, kind: str | None = None,
                          thread_id: str | None = None, team_id: str | None = None,
                          authorization: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.JUDGE)
        return engine.judge_queue(session.user_id, event_id, kind=kind,
                                  thread_id=thread_id, team_id=team_id)

    # ------------------------------------------------------------------
    # taskboard

    @app.post("/tools")
    async def register_tool(body: dict, authorization: str | None = Header(default=None),
                            idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.PARTICIPANT, Role.EXPERT)
        # the token is generated here so the action log can replay it
        params = {"name": body.get("name"), "api_token": secrets.token_urlsafe(32)}
        return mutate(session, "register_tool", params, idempotency_key, doc)

    @app.post("/tools/{tool_id}/revoke")
    async def revoke_tool(tool_id: str, authorization: str | None = Header(default=None),
                          idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.PARTICIPANT, Role.EXPERT)
        body = mutate(session, "revoke_tool", {"tool_id": tool_id}, idempotency_key, doc)
        body.pop("api_token", None)
        return body

    @app.get("/tools")
    async def list_tools(authorization: str | None = Header(default=None)):
        session_from(authorization)
        return [{"id": t.id, "name": t.name, "owner_user_id": t.owner_user_id,
                 "revoked": t.revoked} for t in engine.tools.values()]

    @app.post("/events/{event_id}/tasks")
    async def create_task(event_id: str, body: dict,
                          authorization: str | None = Header(default=None),
                          idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.PARTICIPANT, Role.EXPERT, Role.TOOL)
        params = {"event_id": event_id, "title": body.get("title"),
                  "instructions": body.get("instructions", ""),
                  "payload": body.get("payload", {}),
                  "reward_points": int(body.get("reward_points", 0)),
                  "max_accepted": int(body.get("max_accepted", 1))}
        return mutate(session, "create_task", params, idempotency_key, doc)

    @app.get("/events/{event_id}/tasks")
    async def list_tasks(event_id: str, status: str | None = None,
                         authorization: str | None = Header(default=None)):
        session_from(authorization)
        return [doc(t) for t in engine.list_tasks(event_id, status=status)]

    @app.post("/tasks/{task_id}/responses")
    async def submit_response(task_id: str, body: dict,
                              authorization: str | None = Header(default=None),
                              idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.PARTICIPANT)
        params = {"task_id": task_id, "payload": body.get("payload", {})}
        return mutate(session, "submit_response", params, idempotency_key, doc)

    @app.post("/responses/{response_id}/adjudication")
    async def adjudicate(response_id: str, body: dict,
                         authorization: str | None = Header(default=None),
                         idempotency_key: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.PARTICIPANT, Role.EXPERT, Role.JUDGE)
        params = {"response_id": response_id, "decision": body.get("decision")}
        return mutate(session, "adjudicate_response", params, idempotency_key, doc)

    # ------------------------------------------------------------------
    # leaderboard, feed, analytics, birds-eye

    @app.get("/events/{event_id}/leaderboard")
    async def leaderboard(event_id: str, authorization: str | None = Header(default=None)):
        session_from(authorization)
        return [doc(row) for row in engine.leaderboard(event_id)]

    @app.get("/events/{event_id}/feed")
    async def feed(event_id: str, cursor: int = 0,
                   authorization: str | None = Header(default=None)):
        session_from(authorization)
        return {"entries": [doc(e) for e in engine.feed_since(event_id, cursor)],
                "poll_seconds": config.poll_seconds}

    @app.get("/events/{event_id}/analytics")
    async def analytics_doc(event_id: str, authorization: str | None = Header(default=None)):
        session_from(authorization)
        return {
            "event_metrics": analytics.event_metrics(engine, event_id).to_dict(),
            "team_metrics": [t.to_dict() for t in analytics.team_metrics(engine, event_id)],
            "latency_stats": analytics.latency_stats(engine, event_id).to_dict(),
        }

    @app.get("/events/{event_id}/analytics/export")
    async def analytics_export(event_id: str, format: str = "csv",
                               authorization: str | None = Header(default=None)):
        session_from(authorization)
        files = analytics.export_tables(engine, event_id, format=format)
        return {"files": {name: content.decode() for name, content in sorted(files.items())}}

    @app.get("/events/{event_id}/birds-eye")
    async def birds_eye(event_id: str, authorization: str | None = Header(default=None)):
        session = session_from(authorization)
        require(session, Role.EXPERT)
        return engine.birds_eye(event_id)

    @app.get("/config")
    async def get_config():
        return {"poll_seconds": config.poll_seconds}

    return app
