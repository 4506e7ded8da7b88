from fractions import Fraction as F

import pytest

from mpas.adversary import (POLICIES, EdgeOnlyPolicy, FirstFitIntervalPolicy, MPASPolicy, Policy, PolicyError,
                            RandomizedMPASPolicy, eval_yao, is_middle, make_policy, run_adversary_13_23)
from mpas.core import Item, place


class FixedStart(Policy):
    def __init__(self, start):
        self.start = F(start)

    name = "fixed"

    def place(self, item):
        return place(item, min(self.start, 1 - item.size))


def test_middle_classification():
    third = Item(0, F(1, 3))
    assert not is_middle(place(third, 0))
    assert not is_middle(place(third, F(2, 3)))
    assert is_middle(place(third, F(1, 3)))
    assert is_middle(place(third, F(1, 10)))


def test_all_at_zero():
    r = run_adversary_13_23(FixedStart(0), 30)
    assert (r.middle, r.phase2) == (0, False)
    assert r.peak == 30 and r.opt == 10 and r.ratio == 3


def test_all_in_middle():
    r = run_adversary_13_23(FixedStart(F(1, 3)), 30)
    assert r.phase2 and r.peak == 60 and r.opt == 30
    assert r.ratio >= 2


def test_edge_only_avoids_phase_two():
    r = run_adversary_13_23(EdgeOnlyPolicy(), 150)
    assert not r.phase2 and r.ratio == 1.5


def test_first_fit_places_a_third_in_the_middle():
    r = run_adversary_13_23(FirstFitIntervalPolicy(), 150)
    assert r.middle == 50 and r.phase2
    assert r.ratio >= 1.2


def test_mpas_policy_is_deterministic():
    a = run_adversary_13_23(MPASPolicy(4), 60)
    b = run_adversary_13_23(MPASPolicy(4), 60)
    assert [e.id for e in a.stream] == [e.id for e in b.stream] and a.peak == b.peak


def test_randomized_policy_refused():
    with pytest.raises(PolicyError):
        run_adversary_13_23(RandomizedMPASPolicy(0), 15)


@pytest.mark.parametrize("n", [0, 14, 20])
def test_n_must_be_multiple_of_15(n):
    with pytest.raises(PolicyError):
        run_adversary_13_23(EdgeOnlyPolicy(), n)


def test_make_policy():
    assert set(POLICIES) == {"mpas", "mpas-randomized", "first-fit", "edge-only"}
    with pytest.raises(PolicyError):
        make_policy("nope")


def test_yao_three_per_bin_packer_is_six_fifths():
    rep = eval_yao("first-fit", 300, 50, seed=1)
    assert rep.mean == pytest.approx(1.2, abs=1e-12)
    assert rep.short_trials == 20


def test_yao_edge_only():
    rep = eval_yao("edge-only", 300, 20)
    assert rep.mean >= 1.2 - 1e-12


def test_yao_errors():
    with pytest.raises(PolicyError):
        eval_yao("first-fit", 300, 0)
    with pytest.raises(PolicyError):
        eval_yao("first-fit", 301, 5)


def test_yao_unstratified_reproducible():
    a = eval_yao("mpas-randomized", 60, 12, seed=3, stratified=False)
    b = eval_yao("mpas-randomized", 60, 12, seed=3, stratified=False)
    assert a == b and a.ci95[0] <= a.mean <= a.ci95[1]
