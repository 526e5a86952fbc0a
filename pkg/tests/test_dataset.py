from datetime import date

import numpy as np
import pytest

from fairauction import errors
from fairauction.dataset import (
    BidRecord,
    SyntheticConfig,
    build_auctions,
    gen_synthetic,
    ingest_csv,
    partition_horizons,
    planted_pair_composition,
    write_csv,
)


def rec(day, period, seq, kw, adv, bid):
    return BidRecord(date.fromisoformat(day), period, seq, kw, adv, bid)


def test_csv_roundtrip(tmp_path):
    records = [
        rec("2002-10-01", 0, 0, "kw1", "a1", 1.25),
        rec("2002-10-01", 0, 1, "kw1", "a2", 0.1234567890123456789),
        rec("2002-11-03", 95, 2, "kw2", "a3", 7.0),
    ]
    path = tmp_path / "bids.csv"
    write_csv(records, path)
    assert ingest_csv(path) == records


def test_ingest_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        ingest_csv(tmp_path / "nope.csv")


def test_ingest_header_mismatch(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("day,period,keyword_id\n")
    with pytest.raises(errors.SchemaMismatch):
        ingest_csv(p)


@pytest.mark.parametrize(
    "row",
    [
        "2002-10-01,0,0,kw,a,0",  # bid must be > 0
        "2002-10-01,96,0,kw,a,1",  # period out of range
        "2002-10-01,0,-1,kw,a,1",  # negative seq
        "not-a-date,0,0,kw,a,1",
        "2002-10-01,0,0,kw,a,inf",
        "2002-10-01,0,0,,a,1",
    ],
)
def test_ingest_malformed_rows(tmp_path, row):
    p = tmp_path / "bad.csv"
    p.write_text("day,period,seq,keyword_id,advertiser_id,bid\n" + row + "\n")
    with pytest.raises(errors.MalformedRow) as exc_info:
        ingest_csv(p)
    assert exc_info.value.line == 2


def test_build_auctions_keeps_most_recent():
    records = [
        rec("2002-10-01", 5, 1, "kw", "A", 1.0),
        rec("2002-10-01", 5, 2, "kw", "A", 3.0),
        rec("2002-10-01", 5, 0, "kw", "B", 2.0),
    ]
    (auction,) = build_auctions(records)
    assert auction.bids == {"A": 3.0, "B": 2.0}


def test_build_auctions_input_order_breaks_seq_ties():
    records = [
        rec("2002-10-01", 5, 1, "kw", "A", 1.0),
        rec("2002-10-01", 5, 1, "kw", "A", 4.0),  # later row wins at equal seq
        rec("2002-10-01", 5, 0, "kw", "B", 2.0),
    ]
    (auction,) = build_auctions(records)
    assert auction.bids["A"] == 4.0


def test_build_auctions_drops_single_bidder_groups():
    records = [rec("2002-10-01", 5, 0, "kw", "A", 1.0)]
    assert build_auctions(records) == []


def test_build_auctions_splits_periods():
    records = [
        rec("2002-10-01", 5, 0, "kw", "A", 1.0),
        rec("2002-10-01", 5, 0, "kw", "B", 2.0),
        rec("2002-10-01", 6, 0, "kw", "A", 1.0),
        rec("2002-10-01", 6, 0, "kw", "B", 2.0),
    ]
    assert len(build_auctions(records)) == 2


def test_build_auctions_idempotent_on_own_output():
    records = [
        rec("2002-10-01", 5, 3, "kw", "A", 1.0),
        rec("2002-10-01", 5, 9, "kw", "A", 1.5),
        rec("2002-10-01", 5, 0, "kw", "B", 2.0),
        rec("2002-10-02", 7, 0, "kw2", "A", 1.0),
        rec("2002-10-02", 7, 0, "kw2", "C", 2.5),
    ]
    first = build_auctions(records)
    flattened = [
        BidRecord(a.day, a.period, 0, a.keyword_id, adv, bid)
        for a in first
        for adv, bid in sorted(a.bids.items())
    ]
    assert build_auctions(flattened) == first


def test_partition_horizons():
    records = [
        rec("2002-10-05", 0, 0, "kw", "A", 1.0),
        rec("2002-10-05", 0, 0, "kw", "B", 1.0),
        rec("2002-11-01", 0, 0, "kw", "A", 1.0),
        rec("2002-11-01", 0, 0, "kw", "B", 1.0),
    ]
    horizons = partition_horizons(build_auctions(records))
    assert [h.label for h in horizons] == ["2002-10", "2002-11"]
    assert partition_horizons([]) == []


def test_generator_determinism():
    cfg = SyntheticConfig(keywords=40, months=2)
    a = gen_synthetic(7, cfg)
    b = gen_synthetic(7, cfg)
    assert a == b
    assert a != gen_synthetic(8, cfg)


def test_generator_config_validation():
    with pytest.raises(errors.InvalidConfig):
        SyntheticConfig(keywords=0)
    with pytest.raises(errors.InvalidConfig):
        SyntheticConfig(keywords=51)  # odd
    with pytest.raises(errors.InvalidConfig):
        SyntheticConfig(advertisers=3)  # smaller than max auction size
    with pytest.raises(errors.InvalidConfig):
        SyntheticConfig(pair_similarity_profile=(1.0,) * 9)
    with pytest.raises(errors.InvalidConfig):
        SyntheticConfig(flip_fraction=1.5)
    with pytest.raises(errors.InvalidConfig):
        SyntheticConfig.from_dict({"keywords": 10, "bogus": 1})


def test_generator_auction_invariants():
    records = gen_synthetic(3, SyntheticConfig(keywords=60, months=1))
    auctions = build_auctions(records)
    assert auctions
    for a in auctions:
        assert a.k >= 2
        assert all(bid > 0 for bid in a.bids.values())


def test_generator_targets_similarity_bucket():
    # All pairs aimed at ratios within [1, 1.1): measured pair similarity of
    # same-cluster keywords must land below 1.1 for at least 90% of pairs.
    cfg = SyntheticConfig(
        keywords=80,
        months=1,
        pair_similarity_profile=(1.0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
        flip_fraction=0.3,
    )
    auctions = build_auctions(gen_synthetic(11, cfg))
    by_kw = {a.keyword_id: a for a in auctions}
    lams = []
    for i in range(cfg.keywords // 2):
        u = by_kw.get(f"kw{i:04d}a")
        v = by_kw.get(f"kw{i:04d}b")
        assert u is not None and v is not None
        shared = u.bidders & v.bidders
        lam = max(max(u.bids[s] / v.bids[s], v.bids[s] / u.bids[s]) for s in shared)
        lams.append(lam)
    assert np.mean(np.asarray(lams) < 1.1) >= 0.9


def test_planted_composition_sums():
    cfg = SyntheticConfig(keywords=200, flip_fraction=0.35)
    comp = planted_pair_composition(cfg)
    assert sum(pairs for pairs, _ in comp) == 100
    assert all(0 <= flips <= pairs for pairs, flips in comp)
    # Heavier first bucket by default.
    assert comp[0][0] > comp[1][0]
