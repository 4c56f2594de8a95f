"""HTTP layer: auth, role gates, idempotency, conflicts, and durability."""

import threading

import pytest
from fastapi.testclient import TestClient

from crowdctf import analytics
from crowdctf.config import ServiceConfig
from crowdctf.generate import hash_password
from crowdctf.service import create_app
from crowdctf.store import Store


@pytest.fixture
def service(tmp_path):
    """A running app over a store seeded with one open two-team event."""
    store = Store.create(tmp_path / "svc.store")
    actions = [
        ("create_user", None, {"display_name": "expert", "roles": ["expert"],
                               "password_hash": hash_password("pw")}),
        ("create_user", "u1", {"display_name": "judge", "roles": ["judge"],
                               "password_hash": hash_password("pw")}),
    ]
    for i in range(4):
        actions.append(("create_user", "u1", {
            "display_name": f"p{i + 1}", "roles": ["participant"],
            "password_hash": hash_password("pw"),
        }))
    actions += [
        ("create_event", "u1", {"title": "storm rumors",
                                "rubric": {k: {"base_points": 20, "criteria": []}
                                           for k in ("discovery", "archival",
                                                     "verification", "reporting")}}),
        ("add_thread", "u1", {"event_id": "ev1", "title": "flood clips"}),
        ("create_team", "u3", {"event_id": "ev1", "name": "alpha",
                               "member_ids": ["u3", "u4"], "leader_id": "u3"}),
        ("create_team", "u5", {"event_id": "ev1", "name": "beta",
                               "member_ids": ["u5", "u6"], "leader_id": "u5"}),
        ("transition_event", "u1", {"event_id": "ev1", "target": "open"}),
    ]
    for at, (action, actor, params) in enumerate(actions):
        store.apply(action, actor, params, at)
    app = create_app(store, ServiceConfig(store_path=str(tmp_path / "svc.store")))
    client = TestClient(app)
    yield client, store, tmp_path
    store.close()


def login(client, username, password="pw"):
    r = client.post("/auth/login", json={"username": username, "password": password})
    assert r.status_code == 200, r.text
    return {"Authorization": f"Bearer {r.json()['token']}"}


def post_evidence(client, headers, n, **extra):
    payload = {
        "thread_id": "th1", "name": f"clip {n}",
        "source_url": f"https://example.com/clip/{n}",
        "discovery_body": {"subtype": "video", "method_description": "feed search"},
    }
    payload.update(extra)
    return client.post("/events/ev1/evidence", headers=headers, json=payload)


class TestAuth:
    def test_login_failures_are_uniform(self, service):
        client, _, _ = service
        missing = client.post("/auth/login", json={"username": "ghost", "password": "pw"})
        wrong = client.post("/auth/login", json={"username": "expert", "password": "nope"})
        assert missing.status_code == wrong.status_code == 401
        assert missing.json() == wrong.json()

    def test_requests_need_a_valid_token(self, service):
        client, _, _ = service
        assert client.get("/events").status_code == 401
        bad = {"Authorization": "Bearer nonsense"}
        assert client.get("/events", headers=bad).status_code == 401

    def test_me_reports_roles_and_team(self, service):
        client, _, _ = service
        me = client.get("/me", headers=login(client, "p1")).json()
        assert me["roles"] == ["participant"]
        assert me["teams"] == {"ev1": "tm1"}

    def test_role_gates(self, service):
        client, _, _ = service
        part = login(client, "p1")
        assert client.post("/users", headers=part,
                           json={"display_name": "x"}).status_code == 403
        assert client.get("/events/ev1/judge-queue", headers=part).status_code == 403
        assert client.get("/events/ev1/birds-eye", headers=part).status_code == 403

    def test_tool_token_authenticates_as_tool(self, service):
        client, _, _ = service
        part = login(client, "p1")
        tool = client.post("/tools", headers=part, json={"name": "bot"}).json()
        tool_h = {"Authorization": f"Bearer {tool['api_token']}"}
        me = client.get("/me", headers=tool_h).json()
        assert me["is_tool"] and me["roles"] == ["tool"]
        task = client.post("/events/ev1/tasks", headers=tool_h,
                           json={"title": "label", "reward_points": 5})
        assert task.status_code == 200
        owner_id = client.get("/me", headers=part).json()["user_id"]
        assert task.json()["creator_id"] == tool["id"]
        assert task.json()["creator_user_id"] == owner_id
        client.post(f"/tools/{tool['id']}/revoke", headers=part)
        assert client.get("/me", headers=tool_h).status_code == 401


class TestFlows:
    def test_evidence_flag_judgment_leaderboard(self, service):
        client, _, _ = service
        part = login(client, "p1")
        judge = login(client, "judge")
        created = post_evidence(client, part, 1).json()
        flag_id = created["discovery_flag"]["id"]
        queue = client.get("/events/ev1/judge-queue", headers=judge).json()
        assert [q["flag_id"] for q in queue] == [flag_id]
        r = client.post(f"/flags/{flag_id}/judgment", headers=judge,
                        json={"decision": "approve", "awarded_points": 15})
        assert r.status_code == 200
        board = client.get("/events/ev1/leaderboard", headers=part).json()
        assert {b["team_name"]: b["total_points"] for b in board} == {"alpha": 15, "beta": 0}

    def test_error_bodies_have_code_message_details(self, service):
        client, _, _ = service
        part = login(client, "p1")
        post_evidence(client, part, 1)
        dup = post_evidence(client, login(client, "p3"), 1)
        assert dup.status_code == 409
        body = dup.json()
        assert set(body) == {"code", "message", "details"}
        assert body["code"] == "DUPLICATE_EVIDENCE"

    def test_gate_error_on_early_reporting_approval(self, service):
        client, _, _ = service
        part = login(client, "p1")
        judge = login(client, "judge")
        eid = post_evidence(client, part, 1).json()["evidence"]["id"]
        rep = client.post(f"/evidence/{eid}/flags", headers=part,
                          json={"kind": "reporting",
                                "body": {"report_text": "reported"}}).json()
        r = client.post(f"/flags/{rep['id']}/judgment", headers=judge,
                        json={"decision": "approve", "awarded_points": 5})
        assert r.status_code == 409
        assert r.json()["code"] == "GATE_UNMET"
        gate = client.get(f"/evidence/{eid}/gate", headers=part).json()
        assert gate["satisfied"] is False

    def test_list_filters_match_engine_semantics(self, service):
        client, _, _ = service
        alpha, beta = login(client, "p1"), login(client, "p3")
        post_evidence(client, alpha, 1)
        post_evidence(client, beta, 2)
        flags = client.get("/events/ev1/flags", headers=alpha).json()
        assert len(flags) == 2
        only_beta = client.get("/events/ev1/flags?team_id=tm2", headers=alpha).json()
        assert [f["author_team_id"] for f in only_beta] == ["tm2"]
        pending = client.get("/events/ev1/flags?status=pending&kind=discovery",
                             headers=alpha).json()
        assert len(pending) == 2

    def test_idempotency_key_replays_the_first_response(self, service):
        client, store, _ = service
        part = login(client, "p1")
        key = {"Idempotency-Key": "abc", **part}
        first = post_evidence(client, key, 1)
        again = post_evidence(client, key, 1)
        assert first.json() == again.json()
        assert len(store.engine.evidence) == 1

    def test_concurrent_judgments_one_wins(self, service):
        client, _, _ = service
        part = login(client, "p1")
        judge = login(client, "judge")
        flag_id = post_evidence(client, part, 1).json()["discovery_flag"]["id"]
        codes = []
        lock = threading.Lock()

        def judge_once(decision):
            r = client.post(f"/flags/{flag_id}/judgment", headers=judge,
                            json={"decision": decision, "awarded_points": 10})
            with lock:
                codes.append(r.status_code)

        threads = [threading.Thread(target=judge_once, args=(d,))
                   for d in ("approve", "reject")]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(codes) == [200, 409]

    def test_feed_cursor_pagination(self, service):
        client, _, _ = service
        part = login(client, "p1")
        post_evidence(client, part, 1)
        feed = client.get("/events/ev1/feed", headers=part).json()
        assert feed["poll_seconds"] == 5
        cursors = [e["cursor"] for e in feed["entries"]]
        assert cursors == list(range(1, len(cursors) + 1))
        later = client.get(f"/events/ev1/feed?cursor={cursors[-1]}", headers=part).json()
        assert later["entries"] == []
        post_evidence(client, part, 2)
        newer = client.get(f"/events/ev1/feed?cursor={cursors[-1]}", headers=part).json()
        assert {e["kind"] for e in newer["entries"]} == {"evidence_created", "flag_submitted"}


def test_restart_reconstructs_identical_state(service):
    client, store, tmp_path = service
    part = login(client, "p1")
    judge = login(client, "judge")
    for n in range(5):
        flag_id = post_evidence(client, part, n).json()["discovery_flag"]["id"]
        client.post(f"/flags/{flag_id}/judgment", headers=judge,
                    json={"decision": "approve", "awarded_points": 10 + n})
    before = analytics.export_tables(store.engine, "ev1", "csv")

    restarted = Store.open(tmp_path / "svc.store")
    after = analytics.export_tables(restarted.engine, "ev1", "csv")
    assert after == before
    assert restarted.engine.check_invariants() == []

    # the restarted service works and requires a fresh login
    app = create_app(restarted, ServiceConfig())
    client2 = TestClient(app)
    assert client2.get("/events", headers=part).status_code == 401
    assert client2.get("/events", headers=login(client2, "p1")).status_code == 200
