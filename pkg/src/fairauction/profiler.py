"""Pairwise bid-stability profiling and welfare reporting over auction logs.

Auctions within a horizon are compared pairwise when their bidder sets overlap
enough (Jaccard similarity at or above a threshold, 0.67 by default). For a
qualifying pair, the similarity statistic ``lambda_tilde`` is the largest
bid ratio over the shared bidders and the difference statistic ``d_tilde`` is
the largest allocation gap over the shared bidders, with each auction's
allocation computed on its own full bidder set.

A stability profile buckets pairs by ``lambda_tilde`` into ten width-0.1
buckets tiling [1, 2] (pairs beyond 2 are counted and discarded) and reports,
per bucket, the nearest-rank 90th-percentile ``d_tilde`` over a seeded,
order-independent sample together with the fraction of sampled pairs whose
allocations differ completely. Welfare reports aggregate achieved and optimal
welfare over a horizon, overall and sliced by the number of distinct bidders.
"""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import AuctionInstance, Horizon
from .errors import (
    EmptyHorizon,
    EmptyIntersection,
    FairAuctionError,
    NoComparableBuckets,
    SchemaMismatch,
)
from .rules import RuleSpec, allocate_batch
from .serialize import format_float

__all__ = [
    "PairStats",
    "ProfileBucket",
    "ProfileConfig",
    "StabilityProfile",
    "WelfareEntry",
    "WelfareReport",
    "build_profile",
    "jaccard",
    "match_parameters",
    "match_to_json_obj",
    "nearest_rank_percentile",
    "pair_stats",
    "read_profile_csv",
    "welfare_report",
    "write_profile_csv",
    "write_welfare_csv",
]

#: An allocation difference this close to 1 counts as a complete flip.
FULL_DIFF_TOL = 1e-9

PROFILE_CSV_HEADER = (
    "algorithm",
    "ell",
    "bucket_lo",
    "bucket_hi",
    "pair_count",
    "sampled_count",
    "p90_alloc_diff",
    "frac_diff_one",
)

WELFARE_CSV_HEADER = ("algorithm", "ell", "k_slice", "total_welfare", "total_optimal", "ratio")


def jaccard(a, b) -> float:
    """|a & b| / |a | b|; two empty sets give 0 by convention."""
    a, b = set(a), set(b)
    union = len(a | b)
    return len(a & b) / union if union else 0.0


@dataclass(frozen=True)
class PairStats:
    keyword_u: str
    keyword_v: str
    lambda_tilde: float
    d_tilde: float
    jaccard: float
    shared: frozenset[str]


def _shared_lambda(u: AuctionInstance, v: AuctionInstance) -> tuple[frozenset[str], float]:
    shared = u.bidders & v.bidders
    if not shared:
        raise EmptyIntersection(f"auctions {u.keyword_id!r} and {v.keyword_id!r} share no bidders")
    lam = 1.0
    for adv in shared:
        bu, bv = u.bids[adv], v.bids[adv]
        lam = max(lam, bu / bv, bv / bu)
    return frozenset(shared), lam


def pair_stats(
    u: AuctionInstance,
    v: AuctionInstance,
    spec: RuleSpec,
    alloc_u: Mapping[str, float] | None = None,
    alloc_v: Mapping[str, float] | None = None,
) -> PairStats:
    """Similarity and allocation-difference statistics of one auction pair.

    Allocations may be passed in when already computed; otherwise each
    auction's rule allocation is evaluated on its full bidder set.
    """
    shared, lam = _shared_lambda(u, v)
    if alloc_u is None:
        alloc_u = _allocation_map(u, spec)
    if alloc_v is None:
        alloc_v = _allocation_map(v, spec)
    d = max(abs(alloc_u[adv] - alloc_v[adv]) for adv in shared)
    return PairStats(
        keyword_u=u.keyword_id,
        keyword_v=v.keyword_id,
        lambda_tilde=lam,
        d_tilde=float(d),
        jaccard=jaccard(u.bidders, v.bidders),
        shared=shared,
    )


def _allocation_map(a: AuctionInstance, spec: RuleSpec) -> dict[str, float]:
    ids, bids = a.value_vector()
    x = allocate_batch(spec, bids.reshape(1, -1))[0]
    return dict(zip(ids, x))


def nearest_rank_percentile(values: Sequence[float], pct: float) -> float:
    """The ceil(pct/100 * n)-th smallest value; 0.0 for an empty sample."""
    vals = sorted(values)
    if not vals:
        return 0.0
    rank = max(1, math.ceil(pct / 100.0 * len(vals)))
    return float(vals[min(rank, len(vals)) - 1])


@dataclass(frozen=True)
class ProfileBucket:
    lo: float
    hi: float
    pair_count: int
    sampled_count: int
    p90_diff: float
    frac_diff_one: float


@dataclass(frozen=True)
class StabilityProfile:
    algorithm: str
    param: float | None
    buckets: tuple[ProfileBucket, ...]
    discarded: int = 0


@dataclass(frozen=True)
class ProfileConfig:
    jaccard_min: float = 0.67
    range_lo: float = 1.0
    range_hi: float = 2.0
    bucket_width: float = 0.1
    percentile: float = 90.0
    max_samples_per_bucket: int = 10000
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not 0.0 <= self.jaccard_min <= 1.0:
            raise FairAuctionError(f"jaccard_min must lie in [0, 1], got {self.jaccard_min}")
        if not (self.range_lo >= 1.0 and self.range_hi > self.range_lo and self.bucket_width > 0):
            raise FairAuctionError("invalid bucket range")
        if not 0.0 < self.percentile <= 100.0:
            raise FairAuctionError(f"percentile must lie in (0, 100], got {self.percentile}")
        if self.max_samples_per_bucket < 1 or self.threads < 1:
            raise FairAuctionError("max_samples_per_bucket and threads must be positive")

    @property
    def n_buckets(self) -> int:
        return int(round((self.range_hi - self.range_lo) / self.bucket_width))


def _pair_priority(seed: int, bucket: int, key_u: str, key_v: str) -> int:
    """Order-independent sampling priority; the smallest priorities are kept."""
    payload = f"{seed}|{bucket}|{key_u}|{key_v}".encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


def _instance_key(a: AuctionInstance) -> str:
    return f"{a.keyword_id}@{a.day.isoformat()}#{a.period}"


def build_profile(h: Horizon, spec: RuleSpec, cfg: ProfileConfig | None = None) -> StabilityProfile:
    """Bid-stability profile of one horizon under one allocation rule.

    Deterministic for a fixed (horizon, rule, config) including the seed, and
    independent of the thread count: sampling uses keyed priorities, not
    arrival order.
    """
    cfg = cfg or ProfileConfig()
    auctions = h.auctions
    if not auctions:
        raise EmptyHorizon(f"horizon {h.label!r} has no auctions")
    n = len(auctions)
    sets = [a.bidders for a in auctions]
    keys = [_instance_key(a) for a in auctions]
    n_buckets = cfg.n_buckets

    def scan(chunk: range):
        local: list[list[tuple[int, int, int]]] = [[] for _ in range(n_buckets)]
        counts = np.zeros(n_buckets, dtype=np.int64)
        discarded = 0
        for i in chunk:
            si = sets[i]
            for j in range(i + 1, n):
                inter = len(si & sets[j])
                if inter == 0:
                    continue
                union = len(si | sets[j])
                if inter / union < cfg.jaccard_min:
                    continue
                _, lam = _shared_lambda(auctions[i], auctions[j])
                if lam > cfg.range_hi:
                    discarded += 1
                    continue
                b = min(int((lam - cfg.range_lo) / cfg.bucket_width), n_buckets - 1)
                counts[b] += 1
                local[b].append((_pair_priority(cfg.seed, b, keys[i], keys[j]), i, j))
        return local, counts, discarded

    if cfg.threads == 1 or n < 4:
        parts = [scan(range(n))]
    else:
        chunks = [range(t, n, cfg.threads) for t in range(cfg.threads)]
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(scan, chunks))

    per_bucket: list[list[tuple[int, int, int]]] = [[] for _ in range(n_buckets)]
    counts = np.zeros(n_buckets, dtype=np.int64)
    discarded = 0
    for local, c, d in parts:
        counts += c
        discarded += d
        for b in range(n_buckets):
            per_bucket[b].extend(local[b])
    for b in range(n_buckets):
        per_bucket[b].sort()
        del per_bucket[b][cfg.max_samples_per_bucket:]

    # Allocations once per auction appearing in a kept pair, batched by k.
    needed = sorted({i for bucket in per_bucket for (_, i, j) in bucket} | {j for bucket in per_bucket for (_, i, j) in bucket})
    alloc: dict[int, dict[str, float]] = {}
    by_k: dict[int, list[int]] = {}
    for i in needed:
        by_k.setdefault(auctions[i].k, []).append(i)
    for k, idxs in by_k.items():
        mats = np.vstack([auctions[i].value_vector()[1] for i in idxs])
        X = allocate_batch(spec, mats)
        for row, i in enumerate(idxs):
            ids = auctions[i].value_vector()[0]
            alloc[i] = dict(zip(ids, X[row]))

    buckets = []
    for b in range(n_buckets):
        lo = cfg.range_lo + b * cfg.bucket_width
        hi = cfg.range_lo + (b + 1) * cfg.bucket_width
        diffs = []
        for _, i, j in per_bucket[b]:
            shared = sets[i] & sets[j]
            ai, aj = alloc[i], alloc[j]
            diffs.append(max(abs(ai[adv] - aj[adv]) for adv in shared))
        p = nearest_rank_percentile(diffs, cfg.percentile)
        frac = float(np.mean([d >= 1.0 - FULL_DIFF_TOL for d in diffs])) if diffs else 0.0
        buckets.append(
            ProfileBucket(
                lo=lo,
                hi=hi,
                pair_count=int(counts[b]),
                sampled_count=len(diffs),
                p90_diff=p,
                frac_diff_one=frac,
            )
        )
    return StabilityProfile(
        algorithm=spec.kind.value,
        param=spec.primary_param,
        buckets=tuple(buckets),
        discarded=discarded,
    )


# ---------------------------------------------------------------------------
# Welfare
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WelfareEntry:
    algorithm: str
    param: float | None
    total_welfare: float
    total_optimal: float
    ratio: float
    by_k: dict[int, tuple[float, float, float]]
    per_auction_ratios: tuple[float, ...]


@dataclass(frozen=True)
class WelfareReport:
    horizon: str
    entries: tuple[WelfareEntry, ...]


def welfare_report(h: Horizon, specs: Sequence[RuleSpec]) -> WelfareReport:
    """Aggregate welfare (sum achieved / sum optimal) per rule over a horizon.

    ``by_k`` holds the same totals restricted to auctions with exactly k
    distinct bidders.
    """
    if not h.auctions:
        raise EmptyHorizon(f"horizon {h.label!r} has no auctions")
    by_k_idx: dict[int, list[int]] = {}
    for i, a in enumerate(h.auctions):
        by_k_idx.setdefault(a.k, []).append(i)

    entries = []
    for spec in specs:
        welfare = np.zeros(len(h.auctions))
        optimal = np.zeros(len(h.auctions))
        for k, idxs in by_k_idx.items():
            mats = np.vstack([h.auctions[i].value_vector()[1] for i in idxs])
            X = allocate_batch(spec, mats)
            welfare[idxs] = (X * mats).sum(axis=1)
            optimal[idxs] = mats.max(axis=1)
        by_k = {}
        for k, idxs in sorted(by_k_idx.items()):
            tw, to = float(welfare[idxs].sum()), float(optimal[idxs].sum())
            by_k[k] = (tw, to, tw / to)
        tw, to = float(welfare.sum()), float(optimal.sum())
        entries.append(
            WelfareEntry(
                algorithm=spec.kind.value,
                param=spec.primary_param,
                total_welfare=tw,
                total_optimal=to,
                ratio=tw / to,
                by_k=by_k,
                per_auction_ratios=tuple(float(r) for r in welfare / optimal),
            )
        )
    return WelfareReport(horizon=h.label, entries=tuple(entries))


# ---------------------------------------------------------------------------
# Parameter matching
# ---------------------------------------------------------------------------


def match_parameters(
    profiles_a: Mapping[float, StabilityProfile],
    profiles_b: Mapping[float, StabilityProfile],
) -> dict[float, tuple[float, float]]:
    """For each profile in ``a``, the ``b`` parameter whose profile tracks it best.

    The fit statistic for a candidate is ``max_j |ln(p90_a_j / p90_b_j)|``
    over buckets sampled in both profiles with a positive denominator; the
    candidate minimizing it wins, ties going to the smaller parameter.
    """
    if not profiles_a or not profiles_b:
        raise NoComparableBuckets("both profile families must be nonempty")
    out: dict[float, tuple[float, float]] = {}
    for ell, pa in profiles_a.items():
        best: tuple[float, float] | None = None
        for ell_b in sorted(profiles_b):
            pb = profiles_b[ell_b]
            spreads = []
            for ba, bb in zip(pa.buckets, pb.buckets):
                if ba.sampled_count == 0 or bb.sampled_count == 0 or bb.p90_diff <= 0.0:
                    continue
                spreads.append(abs(math.log(ba.p90_diff / bb.p90_diff)) if ba.p90_diff > 0 else math.inf)
            if not spreads:
                continue
            spread = max(spreads)
            if best is None or spread < best[1]:
                best = (ell_b, spread)
        if best is None:
            raise NoComparableBuckets(f"no bucket is populated in both profiles for parameter {ell}")
        out[ell] = best
    return out


def match_to_json_obj(matches: dict[float, tuple[float, float]]) -> list[dict]:
    return [
        {"ell": ell, "best_ell_prime": best, "spread": spread}
        for ell, (best, spread) in sorted(matches.items())
    ]


# ---------------------------------------------------------------------------
# CSV artifacts
# ---------------------------------------------------------------------------


def write_profile_csv(profiles: Sequence[StabilityProfile], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROFILE_CSV_HEADER)
        for p in profiles:
            for b in p.buckets:
                writer.writerow(
                    [
                        p.algorithm,
                        "" if p.param is None else format_float(float(p.param)),
                        format_float(b.lo),
                        format_float(b.hi),
                        b.pair_count,
                        b.sampled_count,
                        format_float(b.p90_diff),
                        format_float(b.frac_diff_one),
                    ]
                )


def read_profile_csv(path) -> list[StabilityProfile]:
    """Rebuild profiles from the documented CSV schema (grouped by algorithm, ell)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != PROFILE_CSV_HEADER:
            raise SchemaMismatch(f"profile CSV header {header!r} != {list(PROFILE_CSV_HEADER)!r}")
        grouped: dict[tuple[str, float | None], list[ProfileBucket]] = {}
        for row in reader:
            if not row:
                continue
            alg, ell_s, lo, hi, pc, sc, p90, frac = row
            key = (alg, None if ell_s == "" else float(ell_s))
            grouped.setdefault(key, []).append(
                ProfileBucket(
                    lo=float(lo),
                    hi=float(hi),
                    pair_count=int(pc),
                    sampled_count=int(sc),
                    p90_diff=float(p90),
                    frac_diff_one=float(frac),
                )
            )
    return [
        StabilityProfile(algorithm=alg, param=param, buckets=tuple(buckets))
        for (alg, param), buckets in grouped.items()
    ]


def write_welfare_csv(reports: Sequence[WelfareReport], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(WELFARE_CSV_HEADER)
        for report in reports:
            for e in report.entries:
                ell = "" if e.param is None else format_float(float(e.param))
                writer.writerow(
                    [e.algorithm, ell, "all", format_float(e.total_welfare), format_float(e.total_optimal), format_float(e.ratio)]
                )
                for k, (tw, to, ratio) in e.by_k.items():
                    writer.writerow(
                        [e.algorithm, ell, k, format_float(tw), format_float(to), format_float(ratio)]
                    )
