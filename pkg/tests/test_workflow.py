"""Engine transactions: lifecycle, evidence, flag submission, and judging."""

import pytest

from crowdctf.engine import Engine
from crowdctf.errors import (
    AuthorizationError,
    ConflictError,
    DuplicateEvidenceError,
    GateError,
    OwnTeamError,
    StateError,
    ValidationError,
)
from crowdctf.model import EventState, FlagStatus

from helpers import approve_dav, make_event, submit_evidence, submit_kind


class TestEventLifecycle:
    def test_straight_line_transitions(self):
        fx = make_event(open_event=False)
        engine, ev = fx.engine, fx.event
        assert ev.state == EventState.DRAFT
        engine.transition_event(fx.expert, ev.id, "open", at=10)
        assert ev.state == EventState.OPEN and ev.opened_at == 10
        engine.transition_event(fx.expert, ev.id, "closed", at=20)
        assert ev.state == EventState.CLOSED and ev.closed_at == 20
        engine.transition_event(fx.expert, ev.id, "finalized", at=30)
        assert ev.state == EventState.FINALIZED

    def test_illegal_jumps_rejected(self):
        fx = make_event(open_event=False)
        with pytest.raises(StateError):
            fx.engine.transition_event(fx.expert, fx.event.id, "closed")
        with pytest.raises(StateError):
            fx.engine.transition_event(fx.expert, fx.event.id, "finalized")

    def test_only_experts_transition(self):
        fx = make_event(open_event=False)
        with pytest.raises(AuthorizationError):
            fx.engine.transition_event(fx.members[0][0], fx.event.id, "open")

    def test_finalize_blocked_by_pending_work(self):
        fx = make_event()
        submit_evidence(fx, fx.members[0][0], 1)
        fx.engine.transition_event(fx.expert, fx.event.id, "closed")
        with pytest.raises(StateError) as err:
            fx.engine.transition_event(fx.expert, fx.event.id, "finalized")
        assert err.value.details["pending_flags"]

    def test_judging_still_allowed_after_close(self):
        fx = make_event()
        _, flag = submit_evidence(fx, fx.members[0][0], 1)
        fx.engine.transition_event(fx.expert, fx.event.id, "closed")
        judgment = fx.engine.judge_flag(fx.judges[0], flag.id, "approve", awarded_points=5)
        assert judgment.awarded_points == 5
        fx.engine.transition_event(fx.expert, fx.event.id, "finalized")
        with pytest.raises(StateError):
            fx.engine.judge_flag(fx.judges[0], flag.id, "reject")


class TestTeams:
    def test_membership_frozen_once_open(self):
        fx = make_event()
        extra = [fx.engine.create_user(f"late-{i}", ["participant"]).id for i in range(2)]
        with pytest.raises(StateError):
            fx.engine.create_team(extra[0], fx.event.id, "latecomers", extra, extra[0])

    def test_size_bounds(self):
        fx = make_event(open_event=False)
        solo = fx.engine.create_user("solo", ["participant"]).id
        with pytest.raises(ValidationError):
            fx.engine.create_team(solo, fx.event.id, "solo", [solo], solo)
        crowd = [fx.engine.create_user(f"c{i}", ["participant"]).id for i in range(6)]
        with pytest.raises(ValidationError):
            fx.engine.create_team(crowd[0], fx.event.id, "crowd", crowd, crowd[0])

    def test_no_double_membership(self):
        fx = make_event(open_event=False)
        taken = fx.members[0][0]
        other = fx.engine.create_user("other", ["participant"]).id
        with pytest.raises(ConflictError):
            fx.engine.create_team(other, fx.event.id, "again", [taken, other], other)

    def test_leader_must_be_member_and_no_tool_accounts(self):
        fx = make_event(open_event=False)
        a = fx.engine.create_user("a", ["participant"]).id
        b = fx.engine.create_user("b", ["participant"]).id
        with pytest.raises(ValidationError):
            fx.engine.create_team(a, fx.event.id, "x", [a, b], fx.expert)
        bot = fx.engine.create_user("bot", ["tool"]).id
        with pytest.raises(ValidationError):
            fx.engine.create_team(a, fx.event.id, "y", [a, bot], a)


class TestEvidence:
    def test_evidence_always_carries_a_discovery_flag(self):
        fx = make_event()
        piece, flag = submit_evidence(fx, fx.members[0][0], 1, at=5)
        assert flag.kind.value == "discovery"
        assert flag.evidence_id == piece.id
        assert flag.status == FlagStatus.PENDING
        assert piece.owner_team_id == fx.teams[0].id

    def test_duplicate_url_points_at_existing_piece(self):
        fx = make_event()
        piece, _ = submit_evidence(fx, fx.members[0][0], 1)
        with pytest.raises(DuplicateEvidenceError) as err:
            submit_evidence(fx, fx.members[1][0], 1)
        assert err.value.details["existing_evidence_id"] == piece.id
        # the failed submission left nothing behind
        assert len(fx.engine.list_evidence(fx.event.id)) == 1
        assert len(fx.engine.list_flags(fx.event.id)) == 1

    def test_submission_needs_open_event_and_team(self):
        fx = make_event(open_event=False)
        with pytest.raises(StateError):
            submit_evidence(fx, fx.members[0][0], 1)
        fx.engine.transition_event(fx.expert, fx.event.id, "open")
        loner = fx.engine.create_user("loner", ["participant"]).id
        with pytest.raises(AuthorizationError):
            submit_evidence(fx, loner, 2)

    def test_direct_discovery_flags_forbidden(self):
        fx = make_event()
        piece, _ = submit_evidence(fx, fx.members[0][0], 1)
        with pytest.raises(ValidationError):
            fx.engine.add_flag(fx.members[0][0], piece.id, "discovery",
                               {"subtype": "text", "method_description": "again"}, {})


class TestJudging:
    def test_award_and_ledger_entry(self):
        fx = make_event()
        _, flag = submit_evidence(fx, fx.members[0][0], 1)
        fx.engine.judge_flag(fx.judges[0], flag.id, "approve", awarded_points=17, at=60)
        assert flag.status == FlagStatus.APPROVED and flag.judged_at == 60
        entries = fx.engine.ledgers[fx.event.id].entries
        assert [(e.source, e.amount) for e in entries] == [("flag_award", 17)]

    def test_reject_zeroes_points_and_double_judging_conflicts(self):
        fx = make_event()
        _, flag = submit_evidence(fx, fx.members[0][0], 1)
        judgment = fx.engine.judge_flag(fx.judges[0], flag.id, "reject", awarded_points=9)
        assert judgment.awarded_points == 0
        assert not fx.engine.ledgers[fx.event.id].entries
        with pytest.raises(ConflictError):
            fx.engine.judge_flag(fx.judges[0], flag.id, "approve", awarded_points=1)

    def test_award_capped_at_rubric_max(self):
        fx = make_event(points=20)
        _, flag = submit_evidence(fx, fx.members[0][0], 1)
        with pytest.raises(ValidationError):
            fx.engine.judge_flag(fx.judges[0], flag.id, "approve", awarded_points=21)
        with pytest.raises(ValidationError):
            fx.engine.judge_flag(fx.judges[0], flag.id, "approve", awarded_points=-1)

    def test_own_team_bar(self):
        fx = make_event()
        judge_member = fx.members[0][1]
        fx.engine.users[judge_member].roles.add(
            next(iter(fx.engine.users[fx.judges[0]].roles))
        )
        _, flag = submit_evidence(fx, fx.members[0][0], 1)
        with pytest.raises(OwnTeamError):
            fx.engine.judge_flag(judge_member, flag.id, "approve", awarded_points=1)
        # a flag from the other team on their own evidence is fine
        piece2, flag2 = submit_evidence(fx, fx.members[1][0], 2)
        fx.engine.judge_flag(judge_member, flag2.id, "approve", awarded_points=1)

    def test_judge_queue_is_oldest_first_and_filtered(self):
        fx = make_event(threads=2)
        submit_evidence(fx, fx.members[0][0], 1, thread=fx.threads[0], at=30)
        piece2, _ = submit_evidence(fx, fx.members[1][0], 2, thread=fx.threads[1], at=10)
        queue = fx.engine.judge_queue(fx.judges[0], fx.event.id)
        assert [item["submitted_at"] for item in queue] == [10, 30]
        only_t1 = fx.engine.judge_queue(fx.judges[0], fx.event.id, thread_id=fx.threads[0])
        assert len(only_t1) == 1
        assert only_t1[0]["evidence"]["thread_id"] == fx.threads[0]


class TestReportingGate:
    def test_gate_blocks_until_dav_approved(self):
        fx = make_event()
        author = fx.members[0][0]
        piece, disc = submit_evidence(fx, author, 1)
        report = submit_kind(fx, author, piece.id, "reporting")
        gate = fx.engine.reporting_gate(piece.id)
        assert not gate["satisfied"]
        assert gate["missing"] == ["archival", "discovery", "verification"]
        with pytest.raises(GateError):
            fx.engine.judge_flag(fx.judges[0], report.id, "approve", awarded_points=1)
        # rejecting is always allowed
        fx.engine.judge_flag(fx.judges[0], report.id, "reject")

    def test_gate_opens_after_approvals(self):
        fx = make_event()
        author = fx.members[0][0]
        piece, disc = submit_evidence(fx, author, 1)
        approve_dav(fx, piece.id, disc.id, author)
        assert fx.engine.reporting_gate(piece.id)["satisfied"]
        report = submit_kind(fx, author, piece.id, "reporting")
        fx.engine.judge_flag(fx.judges[0], report.id, "approve", awarded_points=3)
        assert fx.engine.evidence_status(piece.id).complete

    def test_gate_info_shown_in_judge_queue(self):
        fx = make_event()
        author = fx.members[0][0]
        piece, _ = submit_evidence(fx, author, 1)
        submit_kind(fx, author, piece.id, "reporting")
        queue = fx.engine.judge_queue(fx.judges[0], fx.event.id, kind="reporting")
        assert queue[0]["gate"]["satisfied"] is False


class TestResubmission:
    def test_rejected_flag_can_be_superseded(self):
        fx = make_event()
        author = fx.members[0][0]
        piece, _ = submit_evidence(fx, author, 1)
        arch = submit_kind(fx, author, piece.id, "archival", at=10)
        fx.engine.judge_flag(fx.judges[0], arch.id, "reject", comment="dead link", at=20)
        again = fx.engine.resubmit_flag(
            author, arch.id, {"archive_url": "https://archive.example.com/snap/2"}, {}, at=30
        )
        assert again.supersedes == arch.id
        assert again.kind == arch.kind
        fx.engine.judge_flag(fx.judges[0], again.id, "approve", awarded_points=8, at=40)
        assert fx.engine.ledgers[fx.event.id].flag_award(again.id).amount == 8
        assert fx.engine.ledgers[fx.event.id].flag_award(arch.id) is None

    def test_only_rejected_flags_resubmittable(self):
        fx = make_event()
        author = fx.members[0][0]
        piece, disc = submit_evidence(fx, author, 1)
        with pytest.raises(StateError):
            fx.engine.resubmit_flag(author, disc.id, dict(disc.body), {})

    def test_rejected_discovery_resubmission_keeps_single_active_discovery(self):
        fx = make_event()
        author = fx.members[0][0]
        piece, disc = submit_evidence(fx, author, 1)
        fx.engine.judge_flag(fx.judges[0], disc.id, "reject")
        new_disc = fx.engine.resubmit_flag(
            author, disc.id, {"subtype": "text", "method_description": "better notes"}, {}
        )
        assert new_disc.kind.value == "discovery"
        assert fx.engine.check_invariants() == []


def test_invariant_scan_flags_a_corrupted_state():
    fx = make_event()
    piece, disc = submit_evidence(fx, fx.members[0][0], 1)
    assert fx.engine.check_invariants() == []
    disc.status = FlagStatus.APPROVED  # bypasses the engine: no judgment exists
    problems = fx.engine.check_invariants()
    assert any("lacks a judgment" in p for p in problems)


def test_feed_cursors_are_dense_and_resumable():
    fx = make_event()
    submit_evidence(fx, fx.members[0][0], 1)
    feed = fx.engine.feed_since(fx.event.id, 0)
    assert [e.cursor for e in feed] == list(range(1, len(feed) + 1))
    tail = fx.engine.feed_since(fx.event.id, feed[-2].cursor)
    assert [e.cursor for e in tail] == [feed[-1].cursor]
