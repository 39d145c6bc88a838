import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmmb.counterexample import random_downward_closed
from rmmb.distribution import OutsideSupport, ParetoLike, PointMass, Uniform, discrete
from rmmb.mechanism import (MechanismError, critical_payment, interleave, myeropt, myeropt_allocate,
                            myeropt_batch, run_batch, vcg, vcg_batch)
from rmmb.set_system import SetSystem, enumerate_circuits, is_independent, is_matroid

from helpers import (AB_OR_C, naive_max_weight, oracle_allocation, oracle_payment, oracle_vcg,
                     random_continuous, random_discrete, random_matroid)

SINGLE = SetSystem.uniform(2, 1)
ALICE, BOB = Uniform(0, 4), Uniform(0, 8)


def ab_or_c(n_param):
    d = ParetoLike(n_param)
    x = n_param / (n_param - 2)
    return [d, d, PointMass(1)], np.array([x, x, 1.0])


# -- interleave -----------------------------------------------------------------------------

def test_interleave_examples():
    assert interleave({0}, {1}, [1], [2]).tolist() == [1, 2]
    assert interleave({2}, {0, 1}, [1], [7, 7]).tolist() == [7, 7, 1]
    assert interleave({0, 2}, set(), [3, 4], [], n=4).tolist() == [3, 0, 4, 0]
    with pytest.raises(MechanismError):
        interleave({0, 1}, {1}, [1, 1], [1])


# -- MyerOPT -------------------------------------------------------------------------------

def test_alice_bob_allocation_and_payments():
    assert myeropt_allocate(SINGLE, [ALICE, BOB], [0, 5]) == {1}
    assert critical_payment(SINGLE, [ALICE, BOB], [0, 5], 1) == pytest.approx(4, abs=1e-12)
    assert myeropt_allocate(SINGLE, [ALICE, BOB], [4, 5]) == {0}
    assert critical_payment(SINGLE, [ALICE, BOB], [4, 5], 0) == pytest.approx(3, abs=1e-12)


@pytest.mark.parametrize("n_param", [3, 5, 12, 102])
def test_ab_or_c_outcome(n_param):
    dists, bids = ab_or_c(n_param)
    out = myeropt(AB_OR_C, dists, bids)
    assert out.winners == {0, 1}
    assert out.payments[0] == pytest.approx(1 / (n_param - 2), abs=1e-12)
    assert out.payments[1] == pytest.approx(1 / (n_param - 2), abs=1e-12)
    assert out.revenue == pytest.approx(2 / (n_param - 2), abs=1e-12)
    assert out.virtuals[0] == pytest.approx(1) and out.virtuals[2] == 1
    green = myeropt(SetSystem.uniform(1, 1), [PointMass(1)], [1.0])
    assert green.winners == {0} and green.revenue == 1


def test_negative_virtuals_discarded():
    out = myeropt(SetSystem.uniform(1, 1), [Uniform(0, 1)], [0.25])
    assert out.winners == frozenset() and out.revenue == 0


def test_bid_outside_support_rejected():
    with pytest.raises(OutsideSupport):
        myeropt(SINGLE, [ALICE, BOB], [5, 1])
    with pytest.raises(MechanismError):
        myeropt(SINGLE, [ALICE, BOB], [1, 1, 1])


def test_critical_payment_requires_winner():
    with pytest.raises(MechanismError):
        critical_payment(SINGLE, [ALICE, BOB], [0, 5], 0)


def _random_instance(rng, matroid: bool, kinds="mixed"):
    market = random_matroid(rng) if matroid else random_downward_closed(rng, int(rng.integers(3, 6)))
    dists = []
    for _ in range(market.n):
        if kinds == "discrete" or (kinds == "mixed" and rng.random() < 0.5):
            dists.append(random_discrete(rng, max_atoms=4))
        else:
            dists.append(random_continuous(rng))
    bids = np.array([d.sample(rng.random()) for d in dists])
    return market, dists, bids


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_myeropt_matches_naive_oracle(seed, matroid):
    rng = np.random.default_rng(seed)
    market, dists, bids = _random_instance(rng, matroid)
    out = myeropt(market, dists, bids)
    assert out.winners == oracle_allocation(market, dists, bids)
    assert is_independent(market, out.winners)
    for i in range(market.n):
        if i in out.winners:
            assert out.payments[i] == pytest.approx(oracle_payment(market, dists, bids, i), abs=1e-7)
            assert dists[i].support_lo - 1e-12 <= out.payments[i] <= bids[i] + 1e-12
        else:
            assert out.payments[i] == 0


def test_exact_and_bisect_payments_agree():
    rng = np.random.default_rng(4)
    for _ in range(60):
        market, dists, bids = _random_instance(rng, bool(rng.random() < 0.5))
        for i in myeropt_allocate(market, dists, bids):
            a = critical_payment(market, dists, bids, i, method="exact")
            b = critical_payment(market, dists, bids, i, method="bisect")
            assert a == pytest.approx(b, abs=2e-9)


def test_batch_rows_match_single_calls():
    rng = np.random.default_rng(8)
    market, dists, _ = _random_instance(rng, False)
    bids = np.array([[d.sample(rng.random()) for d in dists] for _ in range(25)])
    batch = myeropt_batch(market, dists, bids)
    for t in range(len(bids)):
        single = myeropt(market, dists, bids[t])
        assert batch.outcome(t) == single


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_allocation_monotone_in_own_bid(seed):
    rng = np.random.default_rng(seed)
    market, dists, bids = _random_instance(rng, bool(rng.random() < 0.5))
    for i in myeropt_allocate(market, dists, bids):
        d = dists[i]
        hi = d.support_hi if np.isfinite(d.support_hi) else bids[i] + 10
        for z in rng.uniform(bids[i], hi, size=20):
            probe = bids.copy()
            probe[i] = d.clamp(z) if d.in_support(d.clamp(z)) else bids[i]
            if probe[i] < bids[i]:
                probe[i] = bids[i]
            assert i in myeropt_allocate(market, dists, probe)


def test_critical_bid_threshold_continuous():
    rng = np.random.default_rng(10)
    checked = 0
    while checked < 60:
        market, dists, bids = _random_instance(rng, bool(rng.random() < 0.5), kinds="continuous")
        out = myeropt(market, dists, bids)
        for i in out.winners:
            p = out.payments[i]
            d = dists[i]
            up, down = bids.copy(), bids.copy()
            up[i] = min(p + 1e-6, bids[i])
            assert i in myeropt_allocate(market, dists, up)
            if p - 1e-6 >= d.support_lo:
                down[i] = p - 1e-6
                assert i not in myeropt_allocate(market, dists, down)
            checked += 1


def test_red_payment_lower_bound_on_matroids():
    """A single red winner whose circuit closes on green winners pays at least the
    smallest virtual value it displaces."""
    rng = np.random.default_rng(12)
    checked = 0
    for _ in range(400):
        market, dists, bids = _random_instance(rng, True)
        if market.n < 2:
            continue
        e = int(rng.integers(0, market.n))
        out = myeropt(market, dists, bids)
        if e not in out.winners:
            continue
        phi = np.array(out.virtuals)
        green_phi = phi.copy()
        green_phi[e] = 0.0
        green_win = naive_max_weight(market, green_phi)
        for c in enumerate_circuits(market):
            if e in c and c - {e} <= green_win:
                f = min(c - {e}, key=lambda g: (phi[g], -g))
                assert out.payments[e] >= phi[f] - 1e-9
                checked += 1
    assert checked > 0


# -- VCG ---------------------------------------------------------------------------------------

def test_vcg_examples():
    out = vcg(AB_OR_C, [1, 1, 1])
    assert out.winners == {0, 1} and out.payments == (0, 0, 0) and out.revenue == 0
    out = vcg(AB_OR_C, [0, 1, 1])
    assert out.winners == {1} and out.payments[1] == 1 and out.revenue == 1
    out = vcg(SINGLE, [5, 3])
    assert out.winners == {0} and out.payments[0] == 3


def test_vcg_rejects_negative_bids():
    with pytest.raises(MechanismError):
        vcg(SINGLE, [-1, 2])


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_vcg_matches_oracle_and_is_rational(seed, matroid):
    rng = np.random.default_rng(seed)
    market = random_matroid(rng) if matroid else random_downward_closed(rng, int(rng.integers(3, 7)))
    bids = rng.integers(0, 4, size=market.n).astype(float)
    out = vcg(market, bids)
    win, pays = oracle_vcg(market, bids)
    assert out.winners == win
    assert is_independent(market, out.winners)
    for i in range(market.n):
        assert out.payments[i] == pytest.approx(pays.get(i, 0.0), abs=1e-12)
        assert -1e-12 <= out.payments[i] <= bids[i] + 1e-12


def test_run_batch_dispatch():
    dists, bids = ab_or_c(5)
    assert run_batch("MyerOPT", AB_OR_C, dists, bids).revenue[0] == pytest.approx(2 / 3)
    assert run_batch("vcg", AB_OR_C, dists, bids).revenue[0] == vcg_batch(AB_OR_C, bids).revenue[0]
    with pytest.raises(MechanismError):
        run_batch("gsp", AB_OR_C, dists, bids)


def test_to_json_shape():
    dists, bids = ab_or_c(5)
    js = myeropt(AB_OR_C, dists, bids).to_json()
    assert set(js) == {"winners", "payments", "virtuals", "revenue"}
    assert js["winners"] == [0, 1]


def test_exhaustive_used_on_nonmatroid():
    assert not is_matroid(AB_OR_C)
    # greedy would take c (virtual 1.5) first and stop; the optimum is {a,b}
    dists = [discrete({1: 1.0})] * 2 + [PointMass(1.5)]
    assert myeropt_allocate(AB_OR_C, dists, [1, 1, 1.5]) == {0, 1}
