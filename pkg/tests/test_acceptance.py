"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they complete. The large randomized harnesses are deterministic
(fixed seeds) and batched so the whole suite stays within its runtime caps.
"""

import math
import time

import numpy as np

from fairauction.dataset import SyntheticConfig, build_auctions, gen_synthetic, partition_horizons, planted_pair_composition
from fairauction.payments import ic_regret, payment_identity
from fairauction.profiler import ProfileConfig, build_profile, match_parameters, welfare_report
from fairauction.rules import (
    RuleKind,
    RuleSpec,
    ipa_allocate,
    ipa_allocate_batch,
    ipa_threshold_batch,
)
from fairauction.stability import (
    alpha_ell,
    f_ell,
    gap_bounds,
    optimality_gap_construction,
    prior_free_upper_bound_min,
    stability_violation_search,
    welfare_ratio,
)
from fairauction.subset import (
    SetCollection,
    ClusterPartition,
    cluster_capped_alloc,
    collection_widths,
    partition_hierarchical_alloc,
    powerset_stability_check,
    subset_stability_check,
    tv_gap_example,
)
from fairauction.stability import stability_param


def report(n, label, detail):
    print(f"ACCEPTANCE {n} [{label}]: PASS ({detail})")


def test_criterion_1_closed_forms():
    t0 = time.monotonic()
    assert alpha_ell(1) == 0.75
    assert abs(alpha_ell(2) - 23 / 27) <= 1e-12
    assert f_ell(2, 1) == 0.75
    ub, ratio = gap_bounds(1)
    assert abs(ub - 2 / 3) <= 1e-12
    assert abs(ratio - 1.125) <= 1e-12
    elapsed = time.monotonic() - t0
    assert elapsed < 1.0
    report(1, "closed forms", f"{elapsed:.3f}s")


def test_criterion_2_formulation_equivalence():
    t0 = time.monotonic()
    rng = np.random.default_rng(260810)
    total = 0
    worst = 0.0
    for k in range(2, 51):
        for _ in range(41):
            ell = float(rng.uniform(0.1, 5.0))
            V = np.exp(rng.normal(0.0, 2.0, size=(50, k)))
            a = ipa_allocate_batch(V, ell)
            b = ipa_threshold_batch(V, ell)
            worst = max(worst, float(np.max(np.abs(a - b))))
            total += V.shape[0]
    elapsed = time.monotonic() - t0
    assert total >= 100_000
    assert worst <= 1e-9, f"worst coordinate gap {worst}"
    assert elapsed < 30.0
    report(2, "formulation equivalence", f"{total} instances, worst gap {worst:.2e}, {elapsed:.1f}s")


def test_criterion_3_value_stability_theorem():
    t0 = time.monotonic()
    rng = np.random.default_rng(314159)
    n = 100_000
    worst_margin = math.inf
    for i in range(n):
        k = int(rng.integers(2, 31))
        v = np.exp(rng.normal(0.0, 1.5, size=k))
        ell = float(rng.uniform(0.1, 5.0))
        lam = float(rng.uniform(1.0, 10.0))
        beta = float(rng.uniform(0.0, 1.0))
        bound = f_ell(lam, ell)

        d = stability_violation_search(RuleSpec(RuleKind.IPA, ell=ell), v, lam, 2, i)
        assert d <= bound + 1e-9, f"ipa violation at instance {i}: {d} > {bound}"
        worst_margin = min(worst_margin, bound - d)

        d = stability_violation_search(RuleSpec(RuleKind.CAPPED_IPA, ell=ell, beta=beta), v, lam, 2, i)
        assert d <= beta * bound + 1e-9, f"capped violation at instance {i}"

        d = stability_violation_search(RuleSpec(RuleKind.PROPORTIONAL, exponent=2 * ell), v, lam, 2, i)
        assert d <= bound + 1e-9, f"proportional violation at instance {i}"
    elapsed = time.monotonic() - t0
    assert elapsed < 120.0
    report(3, "value-stability theorem", f"{n} instances x 3 rules, min slack {worst_margin:.2e}, {elapsed:.1f}s")


def test_criterion_4_welfare_theorem():
    rng = np.random.default_rng(271828)
    n = 100_000
    worst_slack = math.inf
    for _ in range(n):
        k = int(rng.integers(2, 31))
        v = np.exp(rng.normal(0.0, 1.5, size=k))
        ell = float(rng.uniform(0.1, 5.0))
        ratio = welfare_ratio(ipa_allocate_batch(v.reshape(1, -1), ell)[0], v)
        slack = ratio - alpha_ell(ell)
        assert slack >= -1e-9, f"welfare below bound: ratio {ratio} at ell {ell}"
        worst_slack = min(worst_slack, slack)

    k = 10**4
    v = np.concatenate([[1.0], np.full(k - 1, 0.5)])
    tight = welfare_ratio(ipa_allocate(v, 1), v)
    assert abs(tight - 0.75) <= 1e-3
    report(4, "welfare theorem", f"{n} instances, min slack {worst_slack:.2e}, tightness ratio {tight:.5f}")


def test_criterion_5_optimality_constructions():
    _, _, delta = optimality_gap_construction(2.0, 10**5, 1.0)
    assert abs(delta - 0.75) <= 1e-4
    bound, _ = prior_free_upper_bound_min(lambda lam: f_ell(lam, 1.0), 10**6)
    assert abs(bound - 0.750001) <= 2e-6
    report(5, "optimality constructions", f"gap delta {delta:.6f}, ceiling {bound:.8f}")


RULES_FOR_PAYMENTS = [
    RuleSpec(RuleKind.IPA, ell=1),
    RuleSpec(RuleKind.IPA, ell=2),
    RuleSpec(RuleKind.CAPPED_IPA, ell=1, beta=0.7),
    RuleSpec(RuleKind.PROPORTIONAL, exponent=1),
    RuleSpec(RuleKind.HIGHEST_BID),
    RuleSpec(RuleKind.UNIFORM),
]


def test_criterion_6_payments():
    rng = np.random.default_rng(161803)
    worst_regret = 0.0
    for spec in RULES_FOR_PAYMENTS:
        for _ in range(1000):
            k = int(rng.integers(2, 6))
            v = np.exp(rng.normal(0.0, 1.0, size=k))
            i = int(rng.integers(0, k))
            regret = ic_regret(spec, v, i, 8)
            assert regret <= 1e-4, f"{spec.label()} regret {regret}"
            worst_regret = max(worst_regret, regret)
            res = payment_identity(spec, v, i)
            assert 0.0 <= res.payment <= v[i] * res.allocation_at_truth + 1e-12

    res = payment_identity(RuleSpec(RuleKind.IPA, ell=1), [2, 1], 0)
    assert abs(res.payment - (math.log(3) - 2 / 3)) <= 1e-6

    rng2 = np.random.default_rng(7)
    for _ in range(200):
        k = int(rng2.integers(2, 6))
        v = np.exp(rng2.normal(0.0, 1.0, size=k))
        i = int(np.argmax(v))
        if np.sum(v == v[i]) > 1:
            continue
        second = float(np.max(np.delete(v, i)))
        res = payment_identity(RuleSpec(RuleKind.HIGHEST_BID), v, i)
        assert abs(res.payment - second) <= 1e-9
    report(6, "payments", f"6 rules x 1000 instances, worst regret {worst_regret:.2e}")


def test_criterion_7_subset_fairness():
    rng = np.random.default_rng(577215)

    # Clustered composition with cluster width <= n.
    for _ in range(150):
        k = int(rng.integers(4, 12))
        n_clusters = int(rng.integers(2, k + 1))
        labels = rng.integers(0, n_clusters, size=k)
        labels[rng.permutation(k)[:n_clusters]] = np.arange(n_clusters)
        clusters = [frozenset(np.flatnonzero(labels == c).tolist()) for c in range(n_clusters)]
        n = int(rng.integers(1, min(4, n_clusters) + 1))
        sets = []
        for _ in range(int(rng.integers(1, 5))):
            picks = rng.permutation(n_clusters)[: int(rng.integers(1, n + 1))]
            sets.append(frozenset().union(*[clusters[p] for p in picks]))
        c = SetCollection(k=k, sets=tuple(sets))
        assert collection_widths(c)[1] <= n
        ell = float(rng.uniform(0.2, 3.0))
        v = np.exp(rng.normal(0.0, 1.0, size=k))
        w = v * rng.uniform(1.0, 4.0) ** rng.uniform(-1.0, 1.0, size=k)
        bound = f_ell(stability_param(v, w), ell)
        rule = lambda V: np.vstack([cluster_capped_alloc(row, ell, n, c).probs for row in V])
        assert subset_stability_check(rule, c, v, w) <= bound + 1e-9
        X = rule(np.vstack([v, w]))
        assert np.max(np.abs(X[0] - X[1])) <= 2 * bound + 1e-9
        assert welfare_ratio(X[0], v) >= alpha_ell(ell) ** 2 / n - 1e-9

    # Partitioned composition: power-set stability within cells.
    for _ in range(150):
        k = int(rng.integers(4, 12))
        n_cells = int(rng.integers(1, 4))
        labels = rng.integers(0, n_cells, size=k)
        labels[rng.permutation(k)[:n_cells]] = np.arange(n_cells)
        cells = [frozenset(np.flatnonzero(labels == c).tolist()) for c in range(n_cells)]
        parts = ClusterPartition(k=k, clusters=tuple(cells))
        n = max(len(cell) for cell in cells)
        ell = float(rng.uniform(0.5, 3.0))
        v = np.exp(rng.normal(0.0, 1.0, size=k))
        w = v * rng.uniform(1.0, 4.0) ** rng.uniform(-1.0, 1.0, size=k)
        bound = f_ell(stability_param(v, w), ell)
        rule = lambda V: np.vstack([partition_hierarchical_alloc(row, ell, parts).probs for row in V])
        assert powerset_stability_check(rule, cells, v, w, exhaustive_limit=12) <= 2 * bound + 1e-9
        x = partition_hierarchical_alloc(v, ell, parts)
        assert welfare_ratio(x, v) >= n ** (-2.0 / ell) * alpha_ell(ell) - 1e-9

    for k in (4, 10, 100):
        _, _, _, diff, bound = tv_gap_example(k, 1)
        assert abs(diff - 1.0) <= 1e-12
        assert diff > bound
    report(7, "subset fairness", "composed rules + witness pair over k in {4, 10, 100}")


def test_criterion_8_synthetic_pipeline():
    t0 = time.monotonic()
    cfg = SyntheticConfig()  # 200 keywords x 3 months
    seed = 20268
    records = gen_synthetic(seed, cfg)
    horizons = partition_horizons(build_auctions(records))
    assert len(horizons) == 3
    h = horizons[0]
    pcfg = ProfileConfig(seed=seed)

    # (a) winner-take-all flips in the near-identical bucket.
    hb_prof = build_profile(h, RuleSpec(RuleKind.HIGHEST_BID), pcfg)
    bucket0 = hb_prof.buckets[0]
    assert bucket0.frac_diff_one > 0.0
    pairs0, flips0 = planted_pair_composition(cfg)[0]
    assert flips0 / pairs0 >= 0.3
    assert abs(bucket0.frac_diff_one - cfg.flip_fraction) <= 0.05

    # (b) profile dominance per bucket for each exponent.
    ipa_profiles = {}
    for ell in (0.1, 1.0, 2.5):
        prof = build_profile(h, RuleSpec(RuleKind.IPA, ell=ell), pcfg)
        ipa_profiles[ell] = prof
        for b in prof.buckets:
            assert b.p90_diff <= f_ell(b.hi, ell) + 1e-9

    # (c) welfare floor overall and the 0.9 mark for ell >= 1.
    specs = [RuleSpec(RuleKind.IPA, ell=e) for e in (0.1, 1.0, 2.5)]
    for horizon in horizons:
        rep = welfare_report(horizon, specs)
        for entry in rep.entries:
            assert entry.ratio >= alpha_ell(entry.param) - 1e-9
            if entry.param >= 1.0:
                assert entry.ratio >= 0.9

    # (d) deterministic parameter matching; self-match is exact.
    matches = match_parameters(ipa_profiles, ipa_profiles)
    again = match_parameters(ipa_profiles, ipa_profiles)
    assert matches == again
    for ell, (best, spread) in matches.items():
        assert best == ell and spread == 0.0

    elapsed = time.monotonic() - t0
    assert elapsed < 60.0
    report(8, "synthetic pipeline", f"flip recovery {bucket0.frac_diff_one:.2f} vs planted {cfg.flip_fraction}, {elapsed:.1f}s")


def test_criterion_9_two_advertiser_footnote():
    rng = np.random.default_rng(141421)
    n = 10_000
    worst = math.inf
    for i in range(n):
        v = np.exp(rng.normal(0.0, 1.5, size=2))
        ell = float(rng.uniform(0.1, 5.0))
        lam = float(rng.uniform(1.0, 10.0))
        d = stability_violation_search(RuleSpec(RuleKind.IPA, ell=ell), v, lam, 2, i)
        bound = f_ell(lam, ell / 2.0)
        assert d <= bound + 1e-9, f"footnote violation at instance {i}"
        worst = min(worst, bound - d)
    report(9, "k=2 halved-exponent stability", f"{n} trials, min slack {worst:.2e}")
