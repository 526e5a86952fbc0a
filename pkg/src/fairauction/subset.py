"""Stability over groups of advertisers: set collections and composed rules.

A trusted authority names a collection of advertiser subsets; the allocation
must keep each subset's total probability stable across similar value
vectors. Complexity of a collection is measured three ways: its width (largest
set), its cluster bandwidth (most membership-equivalence clusters inside one
set), and, when sets live inside a partition, the largest partition cell.

Two composed allocators trade welfare for group stability: a capped
inverse-proportional pass across clusters refined by an inverse-proportional
pass within each cluster, and an inverse-proportional pass across partition
cells refined by a proportional pass (exponent ``2*ell``) within each cell.
The module also builds the classic witness pair on which per-advertiser
stability holds but a half-of-the-market group flips its entire allocation.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    FairAuctionError,
    InvalidCollection,
    KTooSmall,
    OddK,
    SetCrossesPartition,
)
from .rules import (
    Allocation,
    RuleKind,
    RuleSpec,
    _wrap,
    as_batch_rule,
    capped_ipa_allocate,
    ipa_allocate,
    proportional_allocate,
)
from .stability import f_ell
from .validation import check_ell, check_same_length, check_values

__all__ = [
    "ClusterPartition",
    "SetCollection",
    "cluster_capped_alloc",
    "collection_widths",
    "equivalence_clusters",
    "partition_hierarchical_alloc",
    "partitioned_width",
    "subset_stability_check",
    "tv_gap_example",
]


def _check_sets(sets, k: int) -> tuple[frozenset[int], ...]:
    out = []
    for s in sets:
        fs = frozenset(int(i) for i in s)
        if not fs:
            raise InvalidCollection("collections may not contain empty sets")
        if min(fs) < 0 or max(fs) >= k:
            raise InvalidCollection(f"set {sorted(fs)} outside [0, {k})")
        out.append(fs)
    return tuple(out)


@dataclass(frozen=True)
class SetCollection:
    """A collection of advertiser subsets of ``range(k)`` (0-based indices)."""

    k: int
    sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        if int(self.k) < 1:
            raise InvalidCollection(f"k must be >= 1, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "sets", _check_sets(self.sets, self.k))

    def to_json(self) -> str:
        """Serialize with 1-based indices, the on-disk convention."""
        return json.dumps(
            {"k": self.k, "sets": [sorted(i + 1 for i in s) for s in self.sets]}
        )

    @classmethod
    def from_json(cls, text: str) -> "SetCollection":
        try:
            obj = json.loads(text)
            k = obj["k"]
            raw = obj["sets"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InvalidCollection(f"bad collection JSON: {exc}") from exc
        return cls(k=k, sets=tuple(frozenset(int(i) - 1 for i in s) for s in raw))


@dataclass(frozen=True)
class ClusterPartition:
    """Disjoint nonempty clusters covering ``range(k)``."""

    k: int
    clusters: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "k", int(self.k))
        clusters = _check_sets(self.clusters, self.k)
        seen: set[int] = set()
        for c in clusters:
            if seen & c:
                raise InvalidCollection("clusters must be disjoint")
            seen |= c
        if seen != set(range(self.k)):
            raise InvalidCollection("clusters must cover all advertisers")
        object.__setattr__(self, "clusters", clusters)

    def cell_of(self) -> np.ndarray:
        """Map advertiser index -> cluster index."""
        out = np.empty(self.k, dtype=np.intp)
        for ci, c in enumerate(self.clusters):
            for i in c:
                out[i] = ci
        return out


def equivalence_clusters(c: SetCollection) -> ClusterPartition:
    """Group advertisers by identical membership across all sets of ``c``.

    Clusters are ordered by their smallest member; an empty collection puts
    everyone in one cluster.
    """
    signatures: dict[frozenset[int], list[int]] = {}
    for i in range(c.k):
        sig = frozenset(j for j, s in enumerate(c.sets) if i in s)
        signatures.setdefault(sig, []).append(i)
    groups = sorted(signatures.values(), key=min)
    return ClusterPartition(k=c.k, clusters=tuple(frozenset(g) for g in groups))


def collection_widths(c: SetCollection) -> tuple[int, int]:
    """``(width, cluster_width)`` of a collection.

    Width is the largest set size; cluster width is the largest number of
    membership-equivalence clusters contained in a single set. Both are 0 for
    an empty collection.
    """
    if not c.sets:
        return 0, 0
    width = max(len(s) for s in c.sets)
    parts = equivalence_clusters(c)
    cluster_width = max(
        sum(1 for cl in parts.clusters if cl <= s) for s in c.sets
    )
    return width, cluster_width


def partitioned_width(c: SetCollection, parts: ClusterPartition) -> int:
    """Largest partition cell, after checking every set stays inside one cell."""
    if c.k != parts.k:
        raise InvalidCollection("collection and partition describe different k")
    for s in c.sets:
        if not any(s <= cell for cell in parts.clusters):
            raise SetCrossesPartition(f"set {sorted(s)} spans partition cells")
    return max(len(cell) for cell in parts.clusters)


# ---------------------------------------------------------------------------
# Composed allocators
# ---------------------------------------------------------------------------


def _compose(v: np.ndarray, parts: ClusterPartition, across: np.ndarray, within_fn) -> np.ndarray:
    x = np.empty_like(v)
    for ci, cell in enumerate(parts.clusters):
        idx = np.asarray(sorted(cell), dtype=np.intp)
        x[idx] = within_fn(v[idx]).probs * across[ci]
    return x


def cluster_capped_alloc(values, ell, n: int, c: SetCollection) -> Allocation:
    """Capped pass across membership clusters, plain pass within each cluster.

    ``n`` is the caller's bound on the collection's cluster width; the
    across-cluster pass runs the capped rule with mixture weight ``1/n`` on
    cluster values ``max_{j in cluster} v_j``.
    """
    v = check_values(values)
    ell = check_ell(ell)
    n = int(n)
    if n < 1:
        raise FairAuctionError(f"cluster-width bound must be >= 1, got {n}")
    if v.size != c.k:
        raise InvalidCollection(f"collection is over k={c.k}, values have k={v.size}")
    parts = equivalence_clusters(c)
    cluster_values = [max(v[i] for i in cell) for cell in parts.clusters]
    across = capped_ipa_allocate(cluster_values, ell, 1.0 / n).probs
    x = _compose(v, parts, across, lambda vv: ipa_allocate(vv, ell))
    return _wrap(x)


def partition_hierarchical_alloc(values, ell, parts: ClusterPartition) -> Allocation:
    """Plain pass across partition cells, proportional (exponent 2*ell) within."""
    v = check_values(values)
    ell = check_ell(ell)
    if v.size != parts.k:
        raise InvalidCollection(f"partition is over k={parts.k}, values have k={v.size}")
    cell_values = [max(v[i] for i in cell) for cell in parts.clusters]
    across = ipa_allocate(cell_values, ell).probs
    x = _compose(v, parts, across, lambda vv: proportional_allocate(vv, 2.0 * ell))
    return _wrap(x)


# ---------------------------------------------------------------------------
# Group-stability checking
# ---------------------------------------------------------------------------


def subset_stability_check(rule, c: SetCollection, v, w) -> float:
    """Largest change of any constraint set's total allocation between v and w."""
    v = check_values(v)
    w = check_values(w)
    check_same_length(v, w)
    if v.size != c.k:
        raise InvalidCollection(f"collection is over k={c.k}, values have k={v.size}")
    fn = as_batch_rule(rule)
    X = fn(np.vstack([v, w]))
    delta = X[0] - X[1]
    if not c.sets:
        return 0.0
    return max(abs(float(sum(delta[i] for i in s))) for s in c.sets)


def max_subset_difference(delta: np.ndarray) -> float:
    """Exact max over all subsets of |sum of delta over the subset|.

    Attained by taking all positive or all negative coordinates, so no
    enumeration is needed; used to certify stability over a full power set.
    """
    pos = float(delta[delta > 0].sum())
    neg = float(-delta[delta < 0].sum())
    return max(pos, neg)


def powerset_stability_check(rule, cells, v, w, exhaustive_limit: int = 12) -> float:
    """Max group difference over the union of the cells' power sets.

    Cells of at most ``exhaustive_limit`` advertisers are enumerated outright
    as a cross-check; larger cells use the exact positive/negative-part
    extremum of :func:`max_subset_difference`.
    """
    v = check_values(v)
    w = check_values(w)
    check_same_length(v, w)
    fn = as_batch_rule(rule)
    X = fn(np.vstack([v, w]))
    delta = X[0] - X[1]
    worst = 0.0
    for cell in cells:
        idx = sorted(cell)
        d = delta[np.asarray(idx, dtype=np.intp)]
        if len(idx) <= exhaustive_limit:
            best = 0.0
            for r in range(1, len(idx) + 1):
                for combo in itertools.combinations(range(len(idx)), r):
                    best = max(best, abs(float(d[list(combo)].sum())))
            worst = max(worst, best)
        else:
            worst = max(worst, max_subset_difference(d))
    return worst


def tv_gap_example(k: int, ell) -> tuple[np.ndarray, np.ndarray, frozenset[int], float, float]:
    """Witness pair on which a group of size k/2 flips its whole allocation.

    Half the advertisers are valued 1 and half ``((k/2-1)/(k/2))**(1/ell)``,
    with the roles swapped in the second vector; the boundary arithmetic makes
    the rule drop the low half entirely, so the first half's group allocation
    moves by 1 while the per-coordinate constraint bound is only ~4/k.

    Returns ``(v, w, group, group_diff, f_bound)``.
    """
    k = int(k)
    if k % 2:
        raise OddK(f"k must be even, got {k}")
    if k < 4:
        raise KTooSmall(f"k must be >= 4, got {k}")
    ell = check_ell(ell)
    half = k // 2
    low = ((half - 1) / half) ** (1.0 / ell)
    v = np.ones(k)
    v[half:] = low
    w = np.full(k, low)
    w[half:] = 1.0
    group = frozenset(range(half))
    c = SetCollection(k=k, sets=(group,))
    diff = subset_stability_check(RuleSpec(RuleKind.IPA, ell=ell), c, v, w)
    bound = f_ell(1.0 / low, ell)
    return v, w, group, diff, bound
