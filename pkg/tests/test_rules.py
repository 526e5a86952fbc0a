import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairauction import errors
from fairauction.rules import (
    Allocation,
    RuleKind,
    RuleSpec,
    allocate,
    allocate_batch,
    capped_ipa_allocate,
    highest_bid_allocate,
    ipa_allocate,
    ipa_allocate_batch,
    ipa_allocate_threshold,
    ipa_threshold_batch,
    ipa_threshold_level,
    proportional_allocate,
    restricted_alloc,
    uniform_allocate,
)

from conftest import random_values


def restricted_oracle(v, serve, ell):
    """Direct evaluation of 1 - (|S|-1) g(v_i) / sum_S g(v_j), g(v) = v**-ell."""
    v = np.asarray(v, dtype=float)
    g = v[serve] ** -ell
    out = np.zeros_like(v)
    out[serve] = 1.0 - (len(serve) - 1) * g / g.sum()
    return out


# ---------------------------------------------------------------------------
# Worked examples
# ---------------------------------------------------------------------------


def test_ipa_symmetric_pair():
    assert np.allclose(ipa_allocate([1, 1], 1).probs, [0.5, 0.5], atol=1e-12)


def test_ipa_two_values_closed_form():
    # k=2 closed form: [a**l, b**l] normalized.
    assert np.allclose(ipa_allocate([2, 1], 1).probs, [2 / 3, 1 / 3], atol=1e-12)


def test_ipa_three_values_served_all():
    # Oracle: serve set {0,1,2}, g = (1, 2, 2), sum 5 -> [0.6, 0.2, 0.2].
    expected = restricted_oracle([1.0, 0.5, 0.5], [0, 1, 2], 1.0)
    assert np.allclose(expected, [0.6, 0.2, 0.2], atol=1e-15)
    got = ipa_allocate([1, 0.5, 0.5], 1).probs
    assert np.allclose(got, expected, atol=1e-12)
    assert np.allclose(ipa_allocate_threshold([1, 0.5, 0.5], 1).probs, expected, atol=1e-10)


def test_ipa_drops_low_half():
    # (k-s) g(0.5) >= suffix holds twice (6 >= 6, then 4 >= 4), dropping both
    # halves at equality; survivors split evenly.
    got = ipa_allocate([1, 1, 0.5, 0.5], 1).probs
    assert np.allclose(got, [0.5, 0.5, 0, 0], atol=1e-12)
    oracle = ipa_allocate_threshold([1, 1, 0.5, 0.5], 1).probs
    assert np.allclose(got, oracle, atol=1e-10)


def test_ipa_all_zero_is_uniform():
    assert np.allclose(ipa_allocate([0, 0, 0], 1).probs, [1 / 3] * 3, atol=1e-15)


def test_ipa_zero_values_excluded():
    assert np.allclose(ipa_allocate([2, 0], 1).probs, [1, 0], atol=1e-15)
    got = ipa_allocate([3, 0, 1], 2).probs
    assert got[1] == 0.0 and got[0] > got[2] > 0


def test_threshold_levels():
    # 2(1-t) = 1 -> t = 0.5; (1 - t/2) + (1 - t) = 1 -> t = 2/3.
    assert ipa_threshold_level([1, 1], 1) == pytest.approx(0.5, abs=1e-9)
    assert ipa_threshold_level([2, 1], 1) == pytest.approx(2 / 3, abs=1e-9)
    assert np.allclose(ipa_allocate_threshold([5, 5, 5], 2).probs, [1 / 3] * 3, atol=1e-10)


def test_restricted_alloc_examples():
    got = restricted_alloc([1, 0.5, 0.5], {0, 1, 2}, 1)
    assert np.allclose(got, [0.6, 0.2, 0.2], atol=1e-12)
    got = restricted_alloc([1, 1, 0.5, 0.5], {0, 1}, 1)
    assert np.allclose(got, [0.5, 0.5, 0, 0], atol=1e-12)
    # Full serve set: sum g = 6, multiplier 3; low values land exactly at 0.
    got = restricted_alloc([1, 1, 0.5, 0.5], {0, 1, 2, 3}, 1)
    assert np.allclose(got, [0.5, 0.5, 0, 0], atol=1e-12)


def test_restricted_alloc_may_go_negative():
    # (|S|-1) g(0.01) dominates the weight sum, pushing the entry below 0.
    got = restricted_alloc([1, 1, 0.01], {0, 1, 2}, 2)
    assert got[2] < 0


def test_capped_examples():
    assert np.allclose(capped_ipa_allocate([2, 1], 1, 1.0).probs, [2 / 3, 1 / 3], atol=1e-12)
    assert np.allclose(capped_ipa_allocate([2, 1], 1, 0.0).probs, [0.5, 0.5], atol=1e-15)
    assert np.allclose(capped_ipa_allocate([2, 1], 1, 0.5).probs, [7 / 12, 5 / 12], atol=1e-12)


def test_proportional_examples():
    assert np.allclose(proportional_allocate([2, 1], 1).probs, [2 / 3, 1 / 3], atol=1e-12)
    assert np.allclose(proportional_allocate([1, 1, 1], 7).probs, [1 / 3] * 3, atol=1e-12)
    assert np.allclose(proportional_allocate([3, 1], 2).probs, [0.9, 0.1], atol=1e-12)
    assert np.allclose(proportional_allocate([0, 0], 3).probs, [0.5, 0.5], atol=1e-15)


def test_proportional_extreme_exponent():
    # p * |log v| far beyond float range of v**p; log-space softmax handles it.
    got = proportional_allocate([1e-300, 1.0, 1e300], 3.0).probs
    assert got[2] == pytest.approx(1.0, abs=1e-12)
    got = proportional_allocate([1.0, 2.0], 5000.0).probs
    assert got[1] == pytest.approx(1.0, abs=1e-12)


def test_highest_bid_examples():
    assert np.allclose(highest_bid_allocate([2, 1]).probs, [1, 0], atol=1e-15)
    assert np.allclose(highest_bid_allocate([1, 1]).probs, [0.5, 0.5], atol=1e-15)
    assert np.allclose(highest_bid_allocate([0, 0, 0]).probs, [1 / 3] * 3, atol=1e-15)


def test_dispatch_examples():
    assert np.allclose(allocate(RuleSpec(RuleKind.IPA, ell=1), [2, 1]).probs, [2 / 3, 1 / 3], atol=1e-12)
    assert np.allclose(allocate(RuleSpec(RuleKind.UNIFORM), [9, 9, 9, 9]).probs, [0.25] * 4, atol=1e-15)
    assert np.allclose(allocate(RuleSpec(RuleKind.HIGHEST_BID), [1, 3, 2]).probs, [0, 1, 0], atol=1e-15)
    assert np.allclose(uniform_allocate([5]).probs, [1.0], atol=1e-15)


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


def test_validation_errors():
    with pytest.raises(errors.EmptyVector):
        ipa_allocate([], 1)
    with pytest.raises(errors.NegativeValue):
        ipa_allocate([1, -2], 1)
    with pytest.raises(errors.NonFiniteValue):
        ipa_allocate([1, math.nan], 1)
    with pytest.raises(errors.NonFiniteValue):
        ipa_allocate([1, math.inf], 1)
    with pytest.raises(errors.InvalidEll):
        ipa_allocate([1, 2], 0)
    with pytest.raises(errors.InvalidEll):
        ipa_allocate([1, 2], -1)
    with pytest.raises(errors.InvalidBeta):
        capped_ipa_allocate([1, 2], 1, 1.5)
    with pytest.raises(errors.InvalidExponent):
        proportional_allocate([1, 2], 0)
    with pytest.raises(errors.EmptyServeSet):
        restricted_alloc([1, 2], set(), 1)
    with pytest.raises(errors.ZeroValueInServeSet):
        restricted_alloc([1, 0], {0, 1}, 1)


def test_rule_spec_validation():
    with pytest.raises(errors.InvalidEll):
        RuleSpec(RuleKind.IPA)
    with pytest.raises(errors.FairAuctionError):
        RuleSpec(RuleKind.UNIFORM, ell=1)
    with pytest.raises(errors.InvalidBeta):
        RuleSpec(RuleKind.CAPPED_IPA, ell=1, beta=2)
    spec = RuleSpec("ipa", ell=2)
    assert spec.kind is RuleKind.IPA and spec.primary_param == 2.0


def test_allocation_invariants():
    with pytest.raises(errors.FairAuctionError):
        Allocation(np.array([0.6, 0.3]))
    with pytest.raises(errors.FairAuctionError):
        Allocation(np.array([1.2, -0.2]))
    a = Allocation(np.array([0.25, 0.75]))
    assert list(a.support) == [0, 1]
    assert len(a) == 2 and a[1] == 0.75
    with pytest.raises(ValueError):
        a.probs[0] = 0.5  # read-only


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------

ALL_SPECS = [
    RuleSpec(RuleKind.IPA, ell=0.4),
    RuleSpec(RuleKind.IPA, ell=1),
    RuleSpec(RuleKind.IPA, ell=3),
    RuleSpec(RuleKind.CAPPED_IPA, ell=1, beta=0.6),
    RuleSpec(RuleKind.PROPORTIONAL, exponent=2),
    RuleSpec(RuleKind.HIGHEST_BID),
    RuleSpec(RuleKind.UNIFORM),
]

values_strategy = st.lists(
    st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=1e6)),
    min_size=1,
    max_size=12,
)


@settings(max_examples=150, deadline=None)
@given(values_strategy)
def test_simplex_invariant(vals):
    for spec in ALL_SPECS:
        x = allocate(spec, vals).probs
        assert abs(x.sum() - 1.0) <= 1e-12
        assert ((x >= 0) & (x <= 1)).all()


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.floats(min_value=1e-6, max_value=1e6), min_size=2, max_size=10),
    st.floats(min_value=0.1, max_value=5.0),
    st.floats(min_value=1e-6, max_value=1e6),
)
def test_scale_freeness(vals, ell, c):
    v = np.asarray(vals)
    base = ipa_allocate(v, ell).probs
    scaled = ipa_allocate(c * v, ell).probs
    assert np.max(np.abs(base - scaled)) <= 1e-12


def test_formulation_equivalence_random(rng):
    for _ in range(1500):
        k = int(rng.integers(2, 50))
        v = random_values(rng, k, zero_prob=0.1, sigma=2.0)
        ell = float(rng.uniform(0.1, 5.0))
        a = ipa_allocate_batch(v.reshape(1, -1), ell)[0]
        b = ipa_threshold_batch(v.reshape(1, -1), ell)[0]
        assert np.max(np.abs(a - b)) <= 1e-9


def test_monotonicity_all_rules(rng):
    # Raising one value weakly raises that coordinate, weakly lowers others.
    for _ in range(120):
        k = int(rng.integers(2, 9))
        v = random_values(rng, k)
        i = int(rng.integers(0, k))
        for spec in ALL_SPECS:
            x = allocate(spec, v).probs
            w = v.copy()
            w[i] *= float(rng.uniform(1.01, 4.0))
            y = allocate(spec, w).probs
            assert y[i] >= x[i] - 1e-12
            mask = np.arange(k) != i
            assert (y[mask] <= x[mask] + 1e-12).all()


def test_support_structure(rng):
    for _ in range(300):
        k = int(rng.integers(2, 20))
        v = random_values(rng, k, zero_prob=0.2)
        if (v > 0).sum() < 2:
            continue
        ell = float(rng.uniform(0.1, 5.0))
        x = ipa_allocate(v, ell).probs
        assert (x > 0).sum() >= 2
        # Support is an up-set of the value order.
        for i in range(k):
            for j in range(k):
                if v[i] >= v[j] and x[j] > 0:
                    assert x[i] > 0


def test_throwout_monotone_in_serve_set(rng):
    for _ in range(200):
        k = int(rng.integers(2, 12))
        v = np.sort(random_values(rng, k))[::-1]
        ell = float(rng.uniform(0.2, 4.0))
        x = ipa_allocate(v, ell).probs
        m = int((x > 0).sum())
        assert set(np.flatnonzero(x > 0)) == set(range(m))
        for m_prime in range(m, k + 1):
            r = restricted_alloc(v, range(m_prime), ell)
            assert (r[:m] >= x[:m] - 1e-10).all()


def test_k2_closed_form(rng):
    for _ in range(300):
        a, b = random_values(rng, 2, sigma=3.0)
        ell = float(rng.uniform(0.1, 5.0))
        x = ipa_allocate([a, b], ell).probs
        num = np.array([a**ell, b**ell])
        assert np.allclose(x, num / num.sum(), atol=1e-12)


def test_batch_matches_scalar(rng):
    V = np.vstack([random_values(rng, 6, zero_prob=0.2) for _ in range(40)])
    for spec in ALL_SPECS:
        batch = allocate_batch(spec, V)
        for row in range(V.shape[0]):
            single = allocate(spec, V[row]).probs
            assert np.allclose(batch[row], single, atol=1e-12)


def test_equality_in_drop_condition_drops():
    # At exact equality the dropped advertiser's allocation is 0 either way;
    # the serve set must still shrink to the top half.
    x = ipa_allocate([1, 1, 0.5, 0.5], 1)
    assert set(x.support) == {0, 1}


def test_threshold_tolerance_validation():
    with pytest.raises(errors.FairAuctionError):
        ipa_allocate_threshold([1, 2], 1, tol=0.0)
