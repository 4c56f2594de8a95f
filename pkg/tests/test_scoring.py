"""Rubric math, self-assessment totals, and the collaboration bonus."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from crowdctf.errors import ValidationError
from crowdctf.model import FlagKind
from crowdctf.rubric import (
    CollabPolicy,
    Criterion,
    KindRubric,
    Level,
    RubricConfig,
    default_collab_policy,
    default_rubric,
    flat_rubric,
)


def judgment_example_rubric() -> RubricConfig:
    """Verification worth up to 700: base 100 plus criteria maxing 300/200/100.

    Selecting the top levels of the first two criteria and the bottom of the
    third claims 600, the worked judging example used across the docs.
    """
    verification = KindRubric(
        base_points=100,
        criteria=[
            Criterion("rigor", "rigor", [Level("r0", "none", 0), Level("r1", "solid", 150),
                                         Level("r2", "exhaustive", 300)]),
            Criterion("sources", "sources", [Level("s0", "single", 0), Level("s1", "two", 100),
                                             Level("s2", "independent", 200)]),
            Criterion("difficulty", "difficulty", [Level("d0", "easy", 0),
                                                   Level("d1", "moderate", 50),
                                                   Level("d2", "hard", 100)]),
        ],
    )
    rubric = RubricConfig(
        id="worked-example",
        kinds={
            FlagKind.DISCOVERY: KindRubric(base_points=20),
            FlagKind.ARCHIVAL: KindRubric(base_points=50),
            FlagKind.VERIFICATION: verification,
            FlagKind.REPORTING: KindRubric(base_points=50),
        },
    )
    rubric.validate()
    return rubric


class TestRubricValidation:
    def test_default_rubric_is_valid(self):
        rubric = default_rubric()
        assert rubric.max_points(FlagKind.DISCOVERY) == 100
        assert rubric.max_points(FlagKind.ARCHIVAL) == 50
        assert rubric.max_points(FlagKind.VERIFICATION) == 500
        assert rubric.max_points(FlagKind.REPORTING) == 200

    def test_flat_rubric(self):
        rubric = flat_rubric(20)
        for kind in FlagKind:
            assert rubric.max_points(kind) == 20
            assert rubric.claimed_points(kind, {}) == 20

    def test_levels_must_strictly_increase(self):
        crit = Criterion("c", "c", [Level("a", "a", 10), Level("b", "b", 10)])
        with pytest.raises(ValidationError):
            crit.validate()

    def test_criterion_needs_two_levels(self):
        crit = Criterion("c", "c", [Level("a", "a", 0)])
        with pytest.raises(ValidationError):
            crit.validate()

    def test_missing_kind_rejected(self):
        rubric = RubricConfig(id="r", kinds={FlagKind.DISCOVERY: KindRubric(base_points=10)})
        with pytest.raises(ValidationError):
            rubric.validate()

    def test_round_trip_through_dict(self):
        rubric = default_rubric()
        again = RubricConfig.from_dict(rubric.to_dict(), rubric_id=rubric.id)
        for kind in FlagKind:
            assert again.max_points(kind) == rubric.max_points(kind)


class TestClaimedPoints:
    def test_worked_example_claims_600(self):
        rubric = judgment_example_rubric()
        claimed = rubric.claimed_points(
            FlagKind.VERIFICATION, {"rigor": "r2", "sources": "s2", "difficulty": "d0"}
        )
        assert claimed == 600
        assert rubric.max_points(FlagKind.VERIFICATION) == 700

    def test_every_criterion_must_be_selected(self):
        rubric = judgment_example_rubric()
        with pytest.raises(ValidationError):
            rubric.claimed_points(FlagKind.VERIFICATION, {"rigor": "r2"})

    def test_unknown_selection_rejected(self):
        rubric = judgment_example_rubric()
        with pytest.raises(ValidationError):
            rubric.claimed_points(
                FlagKind.VERIFICATION,
                {"rigor": "r2", "sources": "s2", "difficulty": "d1", "extra": "x"},
            )
        with pytest.raises(ValidationError):
            rubric.claimed_points(
                FlagKind.VERIFICATION, {"rigor": "r9", "sources": "s2", "difficulty": "d1"}
            )

    @given(st.integers(min_value=1, max_value=20))
    def test_scaling_multiplies_max_points(self, k):
        rubric = default_rubric()
        scaled = rubric.scaled(k)
        for kind in FlagKind:
            assert scaled.max_points(kind) == rubric.max_points(kind) * k


class TestCollabPolicy:
    def test_default_is_quarter_multiplier(self):
        policy = default_collab_policy()
        assert policy.mode == "multiplier"
        assert policy.fraction == Fraction(1, 4)

    @pytest.mark.parametrize("awarded,expected", [
        (0, 0), (1, 0), (2, 1), (4, 1), (20, 5), (500, 125), (10, 3), (6, 2),
    ])
    def test_quarter_bonus_rounds_half_up(self, awarded, expected):
        assert default_collab_policy().bonus_for(awarded) == expected

    def test_fixed_bonus_ignores_award_size(self):
        policy = CollabPolicy(id="p", mode="fixed", amount=15)
        assert policy.bonus_for(0) == 15
        assert policy.bonus_for(500) == 15

    def test_disabled_policy_pays_nothing(self):
        policy = CollabPolicy(id="p", mode="multiplier", fraction=Fraction(1, 4), enabled=False)
        assert policy.bonus_for(400) == 0

    def test_invalid_modes_rejected(self):
        with pytest.raises(ValidationError):
            CollabPolicy(id="p", mode="percentage").validate()
        with pytest.raises(ValidationError):
            CollabPolicy(id="p", mode="fixed", amount=-1).validate()
        with pytest.raises(ValidationError):
            CollabPolicy(id="p", mode="multiplier", fraction=Fraction(3, 2)).validate()

    @given(st.integers(min_value=0, max_value=10_000))
    def test_bonus_never_negative_and_at_most_award(self, awarded):
        bonus = default_collab_policy().bonus_for(awarded)
        assert 0 <= bonus <= max(awarded, 1)
