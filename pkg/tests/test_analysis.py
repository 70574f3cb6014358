from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clientdiv.analysis import (
    ClientClass,
    UnknownImpl,
    break_even_reward,
    classify,
    proving_feasible,
    slash_impact,
)
from clientdiv.proofs import ProofMechanism

ATT, SUC = ProofMechanism.ATTESTED, ProofMechanism.SUCCINCT


@pytest.mark.parametrize("share,cls", [
    (Fraction(8, 12), ClientClass.MAJORITY),
    (Fraction(9, 12), ClientClass.SUPERMAJORITY),
    (Fraction(3, 12), ClientClass.MINORITY),
    (Fraction(1, 3), ClientClass.MAJORITY),
    (0, ClientClass.MINORITY),
    (1, ClientClass.SUPERMAJORITY),
])
def test_classify(share, cls):
    assert classify(share) is cls


@given(st.fractions(min_value=0, max_value=1))
def test_classes_partition_unit_interval(share):
    cls = classify(share)
    in_class = {
        ClientClass.MINORITY: share < Fraction(1, 3),
        ClientClass.MAJORITY: Fraction(1, 3) <= share <= Fraction(2, 3),
        ClientClass.SUPERMAJORITY: share > Fraction(2, 3),
    }
    assert [c for c, ok in in_class.items() if ok] == [cls]


def test_slash_majority_client():
    r = slash_impact({"A": 2, "B": 8, "C": 2}, "B")
    assert (r.slashed_count, r.affected_fraction, r.client_class, r.corrupted_state_accepted) == \
        (8, Fraction(2, 3), ClientClass.MAJORITY, False)


def test_slash_supermajority_client():
    r = slash_impact({"A": 1, "B": 10, "C": 1}, "B")
    assert r.client_class is ClientClass.SUPERMAJORITY and r.corrupted_state_accepted


def test_slash_even_split():
    r = slash_impact({"A": 4, "B": 4, "C": 4}, "A")
    assert r.affected_fraction == Fraction(1, 3)
    assert r.client_class is ClientClass.MAJORITY and not r.corrupted_state_accepted


def test_slash_does_not_mutate_and_rejects_unknown():
    counts = {"A": 1, "B": 2}
    slash_impact(counts, "A")
    assert counts == {"A": 1, "B": 2}
    with pytest.raises(UnknownImpl):
        slash_impact(counts, "Z")


def test_feasibility():
    ok, margin = proving_feasible(SUC, 12)
    assert not ok and margin == pytest.approx(59 / 12)
    ok, margin = proving_feasible(ATT, 12)
    assert ok and margin == pytest.approx(0.08 / 12)
    assert proving_feasible(ATT, 0.05)[0] is False
    with pytest.raises(ValueError):
        proving_feasible(ATT, 0)


def test_break_even():
    assert break_even_reward(SUC, 1) == 289728
    assert break_even_reward(ATT, 1) == 5397746
    assert break_even_reward(SUC, 0) == 0
    assert break_even_reward(SUC, 1, "min") == 288458
    assert break_even_reward(SUC, 1, "max") == 291013


@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6), st.sampled_from([ATT, SUC]))
def test_break_even_linear(a, b, mech):
    assert break_even_reward(mech, a + b) == break_even_reward(mech, a) + break_even_reward(mech, b)
