"""Bid-log ingestion, auction building, horizons, and a synthetic generator.

The on-disk schema is a UTF-8 CSV with header
``day,period,seq,keyword_id,advertiser_id,bid``: ISO dates, 15-minute period
indices 0-95, a within-period recency counter ``seq``, and positive decimal
bids. All bids on one keyword within one period form a single auction; an
advertiser's most recent bid wins (largest ``seq``, input order breaking
ties), and auctions with fewer than two distinct advertisers are dropped.
Auctions are analyzed in one-month horizons.

Real bid logs being proprietary, :func:`gen_synthetic` produces a seeded
desk-scale log with the same schema: keywords arrive in similar pairs whose
bid vectors differ by a controlled per-coordinate ratio, populating similarity
buckets across [1, 2]; a configurable fraction of pairs carry a near-tie at
the top (two bids within 2%) with the leader swapped between the two keywords,
so winner-take-all allocation flips while the bid vectors stay nearly equal.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from .errors import InvalidConfig, MalformedRow, SchemaMismatch

__all__ = [
    "AuctionInstance",
    "BidRecord",
    "CSV_HEADER",
    "Horizon",
    "SyntheticConfig",
    "build_auctions",
    "gen_synthetic",
    "ingest_csv",
    "partition_horizons",
    "planted_pair_composition",
    "write_csv",
]

CSV_HEADER = ("day", "period", "seq", "keyword_id", "advertiser_id", "bid")


@dataclass(frozen=True)
class BidRecord:
    day: date
    period: int
    seq: int
    keyword_id: str
    advertiser_id: str
    bid: float


@dataclass(frozen=True)
class AuctionInstance:
    """One keyword x 15-minute-period auction with deduplicated bids."""

    keyword_id: str
    day: date
    period: int
    bids: dict[str, float]

    @property
    def bidders(self) -> frozenset[str]:
        return frozenset(self.bids)

    @property
    def k(self) -> int:
        return len(self.bids)

    def value_vector(self) -> tuple[list[str], np.ndarray]:
        """Bidder ids in sorted order with the matching bid array."""
        ids = sorted(self.bids)
        return ids, np.array([self.bids[a] for a in ids])


@dataclass
class Horizon:
    """All auctions of one calendar month."""

    label: str
    auctions: list[AuctionInstance] = field(default_factory=list)


def ingest_csv(path) -> list[BidRecord]:
    """Parse a bid-record CSV, rejecting malformed rows with line numbers."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    records: list[BidRecord] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch("file is empty, expected a header row") from None
        if tuple(header) != CSV_HEADER:
            raise SchemaMismatch(f"header {header!r} != {list(CSV_HEADER)!r}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise MalformedRow(line_no, f"expected 6 fields, got {len(row)}")
            day_s, period_s, seq_s, kw, adv, bid_s = row
            try:
                day = date.fromisoformat(day_s)
            except ValueError:
                raise MalformedRow(line_no, f"bad date {day_s!r}") from None
            try:
                period = int(period_s)
                seq = int(seq_s)
                bid = float(bid_s)
            except ValueError:
                raise MalformedRow(line_no, "non-numeric period/seq/bid") from None
            if not 0 <= period <= 95:
                raise MalformedRow(line_no, f"period {period} outside [0, 95]")
            if seq < 0:
                raise MalformedRow(line_no, f"negative seq {seq}")
            if not math.isfinite(bid) or bid <= 0:
                raise MalformedRow(line_no, f"bid must be a positive finite decimal, got {bid_s!r}")
            if not kw or not adv:
                raise MalformedRow(line_no, "empty keyword or advertiser id")
            records.append(BidRecord(day, period, seq, kw, adv, bid))
    return records


def write_csv(records, path) -> None:
    """Write records in the documented schema with round-trip-exact bids."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                [r.day.isoformat(), r.period, r.seq, r.keyword_id, r.advertiser_id, format(r.bid, ".17g")]
            )


def build_auctions(records) -> list[AuctionInstance]:
    """Group records into auctions, keeping each advertiser's most recent bid.

    Recency is (seq, input order); groups with fewer than two distinct
    advertisers are dropped. Output is sorted by (day, period, keyword).
    """
    groups: dict[tuple, dict[str, tuple[int, int, float]]] = {}
    for pos, r in enumerate(records):
        key = (r.keyword_id, r.day, r.period)
        best = groups.setdefault(key, {})
        cur = best.get(r.advertiser_id)
        if cur is None or (r.seq, pos) > (cur[0], cur[1]):
            best[r.advertiser_id] = (r.seq, pos, r.bid)
    auctions = []
    for (kw, day, period), best in groups.items():
        if len(best) < 2:
            continue
        bids = {adv: rec[2] for adv, rec in best.items()}
        auctions.append(AuctionInstance(kw, day, period, bids))
    auctions.sort(key=lambda a: (a.day, a.period, a.keyword_id))
    return auctions


def partition_horizons(auctions) -> list[Horizon]:
    """Split auctions into calendar-month horizons, oldest first."""
    by_month: dict[tuple[int, int], Horizon] = {}
    for a in auctions:
        key = (a.day.year, a.day.month)
        h = by_month.get(key)
        if h is None:
            h = by_month[key] = Horizon(label=f"{key[0]:04d}-{key[1]:02d}")
        h.auctions.append(a)
    return [by_month[k] for k in sorted(by_month)]


# ---------------------------------------------------------------------------
# Synthetic generator
# ---------------------------------------------------------------------------

_BUCKET_EDGES = [1.0 + 0.1 * i for i in range(11)]


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs of the synthetic bid-log generator.

    ``keywords`` must be even: keywords come in similar pairs. The
    ``pair_similarity_profile`` weights apportion pairs to the ten ratio
    buckets tiling [1, 2]; ``flip_fraction`` of each bucket's pairs get a
    planted near-tie winner swap. ``pair_jaccard`` < 1 removes bidders from
    one side of a pair to thin the overlap.
    """

    keywords: int = 200
    advertisers: int = 48
    months: int = 3
    auctions_per_keyword: int = 1
    pair_similarity_profile: tuple[float, ...] = (3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    flip_fraction: float = 0.35
    bidders_range: tuple[int, int] = (3, 8)
    bid_sigma: float = 1.0
    start_month: str = "2002-10"
    pair_jaccard: float = 1.0
    stale_fraction: float = 0.1

    def __post_init__(self):
        if self.keywords < 2 or self.keywords % 2:
            raise InvalidConfig(f"keywords must be even and >= 2, got {self.keywords}")
        lo, hi = self.bidders_range
        if not 2 <= lo <= hi:
            raise InvalidConfig(f"bidders_range must satisfy 2 <= lo <= hi, got {self.bidders_range}")
        if self.advertisers < hi:
            raise InvalidConfig("advertiser pool smaller than the largest auction")
        if self.months < 1 or self.auctions_per_keyword < 1:
            raise InvalidConfig("months and auctions_per_keyword must be positive")
        if len(self.pair_similarity_profile) != 10 or any(w < 0 for w in self.pair_similarity_profile):
            raise InvalidConfig("pair_similarity_profile needs 10 nonnegative weights")
        if sum(self.pair_similarity_profile) <= 0:
            raise InvalidConfig("pair_similarity_profile weights sum to zero")
        if not 0.0 <= self.flip_fraction <= 1.0:
            raise InvalidConfig(f"flip_fraction must lie in [0, 1], got {self.flip_fraction}")
        if not 0.0 < self.pair_jaccard <= 1.0:
            raise InvalidConfig(f"pair_jaccard must lie in (0, 1], got {self.pair_jaccard}")
        if not 0.0 <= self.stale_fraction <= 1.0:
            raise InvalidConfig(f"stale_fraction must lie in [0, 1], got {self.stale_fraction}")
        if self.bid_sigma <= 0:
            raise InvalidConfig(f"bid_sigma must be positive, got {self.bid_sigma}")
        try:
            y, m = self.start_month.split("-")
            date(int(y), int(m), 1)
        except (ValueError, AttributeError):
            raise InvalidConfig(f"start_month must be YYYY-MM, got {self.start_month!r}") from None

    @classmethod
    def from_dict(cls, obj: dict) -> "SyntheticConfig":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(obj) - known
        if bad:
            raise InvalidConfig(f"unknown config keys: {sorted(bad)}")
        fixed = dict(obj)
        for key in ("pair_similarity_profile", "bidders_range"):
            if key in fixed and isinstance(fixed[key], list):
                fixed[key] = tuple(fixed[key])
        return cls(**fixed)


def planted_pair_composition(config: SyntheticConfig) -> list[tuple[int, int]]:
    """Per-bucket ``(pairs, flips)`` the generator will plant; seed-independent.

    Pairs are apportioned to buckets by largest remainder over the profile
    weights; flips are the rounded ``flip_fraction`` share of each bucket.
    """
    n_pairs = config.keywords // 2
    weights = np.asarray(config.pair_similarity_profile, dtype=float)
    quota = weights / weights.sum() * n_pairs
    counts = np.floor(quota).astype(int)
    remainder = n_pairs - counts.sum()
    order = np.argsort(-(quota - counts), kind="stable")
    counts[order[:remainder]] += 1
    return [(int(c), int(round(config.flip_fraction * c))) for c in counts]


def _month_sequence(start: str, months: int) -> list[tuple[int, int]]:
    y, m = (int(p) for p in start.split("-"))
    out = []
    for _ in range(months):
        out.append((y, m))
        m += 1
        if m > 12:
            y, m = y + 1, 1
    return out


def gen_synthetic(seed: int, config: SyntheticConfig | None = None) -> list[BidRecord]:
    """Deterministic synthetic bid log; identical seeds give identical records."""
    cfg = config or SyntheticConfig()
    rng = np.random.default_rng(int(seed))
    composition = planted_pair_composition(cfg)
    months = _month_sequence(cfg.start_month, cfg.months)
    lo_k, hi_k = cfg.bidders_range

    # Pair plan: bucket, flip status, bidder roster. Flips outside the first
    # bucket need a third bidder to carry the exact planted ratio.
    plans = []
    pair_idx = 0
    for b, (n_b, n_flip) in enumerate(composition):
        flip_flags = np.zeros(n_b, dtype=bool)
        flip_flags[:n_flip] = True
        rng.shuffle(flip_flags)
        for fl in flip_flags:
            k_c = int(rng.integers(lo_k, hi_k + 1))
            if fl and b > 0:
                k_c = max(k_c, 3)
            roster = sorted(int(a) for a in rng.choice(cfg.advertisers, size=k_c, replace=False))
            plans.append((pair_idx, b, bool(fl), roster))
            pair_idx += 1

    records: list[BidRecord] = []
    for pair_id, bucket, flip, roster in plans:
        k_c = len(roster)
        ids = [f"a{a:03d}" for a in roster]
        kw_u = f"kw{pair_id:04d}a"
        kw_v = f"kw{pair_id:04d}b"
        for year, month in months:
            lo_edge, hi_edge = _BUCKET_EDGES[bucket], _BUCKET_EDGES[bucket + 1]
            if flip:
                delta = float(rng.uniform(0.005, 0.019))
                lam = float(rng.uniform(max(lo_edge, 1.0 + delta + 0.002), hi_edge))
            else:
                delta = 0.0
                lam = float(rng.uniform(lo_edge, hi_edge))

            bids_u, bids_v, protected = _pair_bids(rng, k_c, lam, flip, delta, cfg.bid_sigma)
            keep_u, keep_v = _thin_sets(rng, k_c, cfg.pair_jaccard, protected)

            for kw, bids, keep in ((kw_u, bids_u, keep_u), (kw_v, bids_v, keep_v)):
                for slot in range(cfg.auctions_per_keyword):
                    day = date(year, month, int(rng.integers(1, 29)))
                    period = int(rng.integers(0, 96))
                    stale_pick = -1
                    if rng.random() < cfg.stale_fraction:
                        stale_pick = int(rng.integers(0, k_c))
                    for j in range(k_c):
                        if not keep[j]:
                            continue
                        if j == stale_pick:
                            records.append(
                                BidRecord(day, period, 0, kw, ids[j], float(bids[j] * rng.uniform(0.5, 0.95)))
                            )
                        records.append(BidRecord(day, period, 1, kw, ids[j], float(bids[j])))
    return records


def _pair_bids(rng, k_c: int, lam: float, flip: bool, delta: float, sigma: float):
    """Bid vectors of a keyword pair plus the indices that must stay in both sets.

    The per-coordinate ratio between the two vectors never exceeds ``lam`` and
    is attained exactly on one designated coordinate, so the pair lands in the
    intended similarity bucket. Plain pairs keep a winner margin wide enough
    that no within-band perturbation can change the top bidder; flip pairs put
    two near-tied bids at the top with the leader swapped.
    """
    log_lam = math.log(lam) if lam > 1.0 else 0.0
    scale = float(np.exp(rng.normal(0.0, sigma)))
    u = np.empty(k_c)
    wobble = rng.uniform(-0.9, 0.9, size=k_c)

    if flip:
        a_idx, b_idx = rng.choice(k_c, size=2, replace=False)
        others = [j for j in range(k_c) if j not in (a_idx, b_idx)]
        u[a_idx] = scale * (1.0 + delta)
        u[b_idx] = scale
        if others:
            u[others] = (0.6 * scale / lam) * np.exp(-rng.uniform(0.8, 4.0, size=len(others)))
        v = u * np.exp(wobble * log_lam)
        v[a_idx] = scale
        v[b_idx] = scale * (1.0 + delta)
        forced = others[int(rng.integers(0, len(others)))] if others else None
        protected = {int(a_idx), int(b_idx)}
    else:
        top = int(rng.integers(0, k_c))
        others = [j for j in range(k_c) if j != top]
        margin = lam * lam * 2.2
        u[top] = scale
        u[others] = (scale / margin) * np.exp(-rng.uniform(0.8, 4.0, size=len(others)))
        v = u * np.exp(wobble * log_lam)
        forced = others[int(rng.integers(0, len(others)))]
        protected = {top}

    if forced is not None:
        direction = 1.0 if rng.random() < 0.5 else -1.0
        v[forced] = u[forced] * lam**direction
        protected.add(int(forced))
    return u, v, protected


def _thin_sets(rng, k_c: int, jaccard: float, protected: set[int]):
    """Boolean keep-masks for both keywords hitting roughly the target overlap."""
    keep_u = np.ones(k_c, dtype=bool)
    keep_v = np.ones(k_c, dtype=bool)
    if jaccard >= 1.0:
        return keep_u, keep_v
    droppable = [j for j in range(k_c) if j not in protected]
    n_drop = min(len(droppable), int(round((1.0 - jaccard) * k_c)))
    # Keep at least two bidders on each side.
    n_drop = min(n_drop, k_c - 2)
    if n_drop <= 0:
        return keep_u, keep_v
    picks = rng.choice(len(droppable), size=n_drop, replace=False)
    for t, p in enumerate(picks):
        if t % 2 == 0:
            keep_u[droppable[int(p)]] = False
        else:
            keep_v[droppable[int(p)]] = False
    return keep_u, keep_v
