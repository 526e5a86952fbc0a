"""Fair single-slot ad auctions: allocation rules, payments, and analytics.

The package is organized around five surfaces:

* :mod:`fairauction.rules` — the allocation rules (inverse-proportional
  family with an independent bisection oracle, capped, proportional,
  highest-bid, uniform) plus the `RuleSpec` dispatch layer;
* :mod:`fairauction.estimators` — scikit-learn style transformer wrappers;
* :mod:`fairauction.payments` / :mod:`fairauction.stability` /
  :mod:`fairauction.subset` — truthful payments, value-stability metrics and
  bound calculators, and group-level stability with composed allocators;
* :mod:`fairauction.dataset` / :mod:`fairauction.profiler` — bid-log
  ingestion, the synthetic generator, pairwise bid-stability profiles,
  welfare reports, and parameter matching;
* :mod:`fairauction.cli` — the ``fairauction`` command.
"""

from .errors import FairAuctionError
from .estimators import (
    CappedIPAAllocator,
    HighestBidAllocator,
    IPAAllocator,
    ProportionalAllocator,
    UniformAllocator,
)
from .rules import (
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
    proportional_allocate,
    restricted_alloc,
    uniform_allocate,
)
from .payments import PaymentResult, QuadratureConfig, check_monotone, ic_regret, payment_identity
from .stability import (
    alpha_ell,
    f_ell,
    gap_bounds,
    near_optimal_params,
    optimality_gap_construction,
    prior_free_upper_bound,
    stability_param,
    stability_violation_search,
    welfare_ratio,
)
from .subset import (
    ClusterPartition,
    SetCollection,
    cluster_capped_alloc,
    collection_widths,
    equivalence_clusters,
    partition_hierarchical_alloc,
    partitioned_width,
    subset_stability_check,
    tv_gap_example,
)
from .dataset import (
    AuctionInstance,
    BidRecord,
    Horizon,
    SyntheticConfig,
    build_auctions,
    gen_synthetic,
    ingest_csv,
    partition_horizons,
)
from .profiler import (
    PairStats,
    ProfileConfig,
    StabilityProfile,
    WelfareReport,
    build_profile,
    jaccard,
    match_parameters,
    pair_stats,
    welfare_report,
)

__version__ = "0.1.0"
