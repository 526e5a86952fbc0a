"""Single-slot auction allocation rules.

The central family starts every advertiser at a full (infeasible) unit of
allocation and removes the surplus in proportion to a decreasing power of each
advertiser's value, ``v ** -ell``, so low-value advertisers absorb the
deduction first and may be dropped to zero. Two independent solvers are
provided:

* :func:`ipa_allocate` — the O(k log k) sort-and-drop solve, and
* :func:`ipa_allocate_threshold` — a bracketed bisection on the equivalent
  threshold equation ``sum_i max(0, 1 - t * v_i**-ell) = 1``,

which serve as cross-checking oracles for each other. The module also
implements the capped variant (a mixture with the uniform rule), proportional
allocation, highest-bid-wins, uniform, and a `RuleSpec`-driven dispatch layer.

All rules are pure, scale-free, and weakly monotone in each coordinate. The
``*_batch`` entry points take an (n, k) matrix of value vectors and return an
(n, k) matrix of allocations; scalar entry points wrap them. Internally the
deduction weights are handled in log space (normalized per row by the maximum
value), so extreme value spreads and large exponents neither overflow nor
break scale invariance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import (
    BisectionNotConverged,
    EmptyServeSet,
    FairAuctionError,
    ZeroValueInServeSet,
)
from .validation import (
    check_beta,
    check_ell,
    check_exponent,
    check_values,
    check_values_batch,
)

__all__ = [
    "Allocation",
    "RuleKind",
    "RuleSpec",
    "allocate",
    "allocate_batch",
    "as_batch_rule",
    "capped_ipa_allocate",
    "capped_ipa_allocate_batch",
    "highest_bid_allocate",
    "highest_bid_allocate_batch",
    "ipa_allocate",
    "ipa_allocate_batch",
    "ipa_allocate_threshold",
    "ipa_threshold_batch",
    "ipa_threshold_level",
    "proportional_allocate",
    "proportional_allocate_batch",
    "restricted_alloc",
    "uniform_allocate",
    "uniform_allocate_batch",
]

#: Tolerance on the simplex invariant of a valid allocation.
SIMPLEX_ATOL = 1e-12

# Raw allocations whose total drifts past this are renormalized before being
# wrapped; drift beyond _RENORM_MAX indicates a bug and is left to fail
# validation rather than be papered over.
_RENORM_MIN = 1e-13
_RENORM_MAX = 1e-8


@dataclass(frozen=True)
class Allocation:
    """A probability vector over the k advertisers of one auction.

    Entries lie in [0, 1] and sum to 1 within ``SIMPLEX_ATOL``. The instance
    is immutable; ``probs`` is a read-only array.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise FairAuctionError(f"allocation must be a nonempty 1-D vector, got shape {p.shape}")
        if np.isnan(p).any() or np.isinf(p).any():
            raise FairAuctionError("allocation contains non-finite entries")
        if (p < 0).any() or (p > 1).any():
            raise FairAuctionError("allocation entries must lie in [0, 1]")
        total = float(p.sum())
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise FairAuctionError(f"allocation sums to {total!r}, not 1")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def support(self) -> np.ndarray:
        """Indices of advertisers with strictly positive probability."""
        return np.flatnonzero(self.probs > 0)

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, i) -> float:
        return self.probs[i]

    def __iter__(self) -> Iterator[float]:
        return iter(self.probs)

    def __array__(self, dtype=None):
        return np.asarray(self.probs, dtype=dtype)


def _wrap(probs: np.ndarray) -> Allocation:
    """Wrap a freshly computed row, absorbing benign float drift in the total."""
    total = probs.sum()
    drift = abs(total - 1.0)
    if _RENORM_MIN < drift <= _RENORM_MAX:
        probs = probs / total
    return Allocation(probs)


class RuleKind(str, enum.Enum):
    IPA = "ipa"
    CAPPED_IPA = "capped-ipa"
    PROPORTIONAL = "proportional"
    HIGHEST_BID = "highest-bid"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class RuleSpec:
    """Descriptor selecting an allocation rule and its parameters.

    ``ell`` applies to ``IPA`` and ``CAPPED_IPA``; ``beta`` to ``CAPPED_IPA``;
    ``exponent`` to ``PROPORTIONAL``. Irrelevant parameters must be left None.
    """

    kind: RuleKind
    ell: float | None = None
    beta: float | None = None
    exponent: float | None = None

    def __post_init__(self):
        kind = RuleKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in (RuleKind.IPA, RuleKind.CAPPED_IPA):
            object.__setattr__(self, "ell", check_ell(self.ell))
        elif self.ell is not None:
            raise FairAuctionError(f"rule {kind.value!r} takes no ell parameter")
        if kind is RuleKind.CAPPED_IPA:
            object.__setattr__(self, "beta", check_beta(self.beta))
        elif self.beta is not None:
            raise FairAuctionError(f"rule {kind.value!r} takes no beta parameter")
        if kind is RuleKind.PROPORTIONAL:
            object.__setattr__(self, "exponent", check_exponent(self.exponent))
        elif self.exponent is not None:
            raise FairAuctionError(f"rule {kind.value!r} takes no exponent parameter")

    @property
    def primary_param(self) -> float | None:
        """The rule's headline parameter, used in report columns."""
        if self.kind in (RuleKind.IPA, RuleKind.CAPPED_IPA):
            return self.ell
        if self.kind is RuleKind.PROPORTIONAL:
            return self.exponent
        return None

    def label(self) -> str:
        if self.kind is RuleKind.IPA:
            return f"ipa(ell={self.ell:g})"
        if self.kind is RuleKind.CAPPED_IPA:
            return f"capped-ipa(ell={self.ell:g},beta={self.beta:g})"
        if self.kind is RuleKind.PROPORTIONAL:
            return f"proportional(exponent={self.exponent:g})"
        return self.kind.value


# ---------------------------------------------------------------------------
# Inverse proportional allocation: sort-and-drop solve
# ---------------------------------------------------------------------------


def _log_weights_sorted(v_sorted: np.ndarray, ell: float) -> np.ndarray:
    """log of deduction weights for an ascending-sorted batch, max-normalized.

    Zero values get -inf (weight 0); they never enter a serve set. Weights are
    >= 1 for positive values, so all scale information cancels.
    """
    with np.errstate(divide="ignore"):
        logw = -ell * (np.log(v_sorted) - np.log(v_sorted[:, -1:]))
    logw[v_sorted == 0] = -np.inf
    return logw


def _ipa_sorted_solve(logw: np.ndarray, n_zero: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve the drop recursion on sorted log-weights.

    Returns ``(x_sorted, s_star, log_suffix_at_s)`` where ``s_star`` is the
    first served position per row. Rows must contain at least one positive
    value (all-zero rows are handled by the caller).
    """
    n, k = logw.shape
    # Suffix log-sum-exp of the weights: lse[:, s] = log sum_{j >= s} w_j.
    lse = np.logaddexp.accumulate(logw[:, ::-1], axis=1)[:, ::-1]

    # Drop condition at sorted position s (0-based): (k-1-s) * w_s >= suffix_s.
    m = np.arange(k - 1, -1, -1, dtype=np.float64)  # k-1-s for each s
    with np.errstate(divide="ignore"):
        log_m = np.log(m)
    cond = log_m[None, :] + logw >= lse
    cond[:, -1] = False  # one advertiser never drops
    # Positions holding zero values are skipped by initialization, not dropped
    # by the condition; force-advance past them.
    cols = np.arange(k)
    cond |= cols[None, :] < n_zero[:, None]

    s_star = np.argmax(~cond, axis=1)
    rows = np.arange(n)
    lse_at_s = lse[rows, s_star]
    m_at_s = m[s_star]
    with np.errstate(divide="ignore"):
        log_m_at_s = np.log(m_at_s)

    # The exponent is <= ~0 for served positions; dropped positions can
    # overflow but are overwritten just below.
    with np.errstate(over="ignore"):
        x = 1.0 - np.exp(log_m_at_s[:, None] + logw - lse_at_s[:, None])
    x[cols[None, :] < s_star[:, None]] = 0.0
    np.maximum(x, 0.0, out=x)
    return x, s_star, lse_at_s


def ipa_allocate_batch(values, ell) -> np.ndarray:
    """Inverse proportional allocation, one auction per row.

    Rows of all-zero values receive the uniform allocation; otherwise
    zero-value advertisers receive 0 and the remaining mass is assigned by the
    sort-and-drop solve.
    """
    V = check_values_batch(values)
    ell = check_ell(ell)
    n, k = V.shape

    vmax = V.max(axis=1)
    X = np.empty_like(V)
    zero_rows = vmax == 0
    if zero_rows.any():
        X[zero_rows] = 1.0 / k
    act = np.flatnonzero(~zero_rows)
    if act.size:
        Va = V[act]
        order = np.argsort(Va, axis=1, kind="stable")
        rows = np.arange(act.size)[:, None]
        v_sorted = Va[rows, order]
        logw = _log_weights_sorted(v_sorted, ell)
        n_zero = (v_sorted == 0).sum(axis=1)
        x_sorted, _, _ = _ipa_sorted_solve(logw, n_zero)
        Xa = np.empty_like(Va)
        Xa[rows, order] = x_sorted
        X[act] = Xa

    _renormalize_rows(X)
    return X


def _renormalize_rows(X: np.ndarray) -> None:
    totals = X.sum(axis=1)
    drift = np.abs(totals - 1.0)
    fix = (drift > _RENORM_MIN) & (drift <= _RENORM_MAX)
    if fix.any():
        X[fix] /= totals[fix, None]


def ipa_allocate(values, ell) -> Allocation:
    """Inverse proportional allocation of a single auction.

    Scale-free: multiplying all values by a common positive factor leaves the
    allocation unchanged. With at least two positive values, at least two
    advertisers receive positive probability.
    """
    return _wrap(ipa_allocate_batch(check_values(values), ell)[0])


# ---------------------------------------------------------------------------
# Inverse proportional allocation: threshold bisection oracle
# ---------------------------------------------------------------------------

_BISECT_CAP = 200


def _threshold_weights(V: np.ndarray, vmax: np.ndarray, ell: float) -> np.ndarray:
    # Independent of the log-space route above on purpose: direct powers of
    # the max-normalized ratios. Ratios <= 1, so weights are >= 1; an
    # overflow to +inf simply pins that advertiser's term at 0 for any t > 0.
    with np.errstate(divide="ignore", over="ignore"):
        W = np.power(V / vmax[:, None], -ell)
    return W


def ipa_threshold_batch(values, ell, tol: float = 1e-12) -> np.ndarray:
    """Bisection solve of ``sum_i max(0, 1 - t * v_i**-ell) = 1``, batched.

    The solve runs on max-normalized weights with a relative tolerance on the
    threshold, which bounds the per-coordinate allocation error by ~``tol``.
    """
    V = check_values_batch(values)
    ell = check_ell(ell)
    if not tol > 0:
        raise FairAuctionError(f"tol must be positive, got {tol}")
    n, k = V.shape

    vmax = V.max(axis=1)
    X = np.empty_like(V)
    zero_rows = vmax == 0
    if zero_rows.any():
        X[zero_rows] = 1.0 / k
    act = np.flatnonzero(~zero_rows)
    if act.size == 0:
        return X

    Va = V[act]
    W = _threshold_weights(Va, vmax[act], ell)
    zero_mask = Va == 0

    def total_served(t: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            y = 1.0 - t[:, None] * W
        np.maximum(y, 0.0, out=y)
        y[zero_mask] = 0.0
        return y.sum(axis=1)

    # Bracket: with k_pos positive values and nothing dropped yet,
    # y((k_pos-1)/sum(w)) >= 1, and the largest value (weight 1) reaches 0
    # exactly at t = 1, so y(1) <= 1.
    with np.errstate(invalid="ignore"):
        sumw = np.where(np.isfinite(W), W, 0.0).sum(axis=1)
    k_pos = k - zero_mask.sum(axis=1)
    lo = np.maximum((k_pos - 1) / np.maximum(sumw, 1.0), 1e-300)
    hi = np.ones(act.size)
    # Guard the lower end against float drift at the bracket boundary.
    for _ in range(4):
        bad = total_served(lo) < 1.0
        if not bad.any():
            break
        lo[bad] *= 0.5

    log_lo = np.log(lo)
    log_hi = np.log(hi)
    iters = 0
    while np.max(log_hi - log_lo) > tol:
        if iters >= _BISECT_CAP:
            raise BisectionNotConverged(f"no convergence within {_BISECT_CAP} bisection steps")
        mid_log = 0.5 * (log_lo + log_hi)
        above = total_served(np.exp(mid_log)) >= 1.0
        log_lo = np.where(above, mid_log, log_lo)
        log_hi = np.where(above, log_hi, mid_log)
        iters += 1

    t = np.exp(0.5 * (log_lo + log_hi))
    with np.errstate(invalid="ignore"):
        Y = 1.0 - t[:, None] * W
    np.maximum(Y, 0.0, out=Y)
    Y[zero_mask] = 0.0
    X[act] = Y
    return X


def ipa_allocate_threshold(values, ell, tol: float = 1e-12) -> Allocation:
    """Single-auction threshold solve; independent oracle for :func:`ipa_allocate`."""
    return _wrap(ipa_threshold_batch(check_values(values), ell, tol)[0])


def ipa_threshold_level(values, ell, tol: float = 1e-12) -> float:
    """The threshold ``t*`` (in raw value units) at which served mass equals 1."""
    v = check_values(values)
    ell = check_ell(ell)
    vmax = v.max()
    if vmax == 0:
        raise ZeroValueInServeSet("threshold level undefined for an all-zero vector")
    X = ipa_threshold_batch(v.reshape(1, -1), ell, tol)[0]
    # Recover t from any served advertiser: 1 - x_i = t * (v_i / vmax)**-ell.
    i = int(np.argmax(v))
    t_norm = 1.0 - X[i]
    return t_norm * math.exp(ell * math.log(vmax)) if vmax != 1.0 else t_norm


# ---------------------------------------------------------------------------
# Restricted allocation over an explicit serve set
# ---------------------------------------------------------------------------


def restricted_alloc(values, serve_set, ell) -> np.ndarray:
    """Allocation formula frozen on an explicit serve set S.

    Returns, for i in S, ``1 - (|S|-1) * g(v_i) / sum_{j in S} g(v_j)`` with
    ``g(v) = v**-ell``; entries outside S are 0. Values of members of S must
    be positive. Entries may be negative: this is an analysis surface, not a
    probability vector.
    """
    v = check_values(values)
    ell = check_ell(ell)
    idx = np.asarray(sorted(set(int(i) for i in serve_set)), dtype=np.intp)
    if idx.size == 0:
        raise EmptyServeSet("serve set is empty")
    if (idx < 0).any() or (idx >= v.size).any():
        raise EmptyServeSet(f"serve set indices outside [0, {v.size})")
    vs = v[idx]
    if (vs == 0).any():
        raise ZeroValueInServeSet("serve set contains a zero-value advertiser")
    w = np.power(vs / vs.max(), -ell)
    out = np.zeros_like(v)
    out[idx] = 1.0 - (idx.size - 1) * w / w.sum()
    return out


# ---------------------------------------------------------------------------
# Capped, proportional, highest-bid, uniform
# ---------------------------------------------------------------------------


def capped_ipa_allocate_batch(values, ell, beta) -> np.ndarray:
    """``beta``-mixture of inverse proportional allocation with the uniform rule."""
    beta = check_beta(beta)
    X = ipa_allocate_batch(values, ell)
    k = X.shape[1]
    return beta * X + (1.0 - beta) / k


def capped_ipa_allocate(values, ell, beta) -> Allocation:
    return _wrap(capped_ipa_allocate_batch(check_values(values), ell, beta)[0])


def proportional_allocate_batch(values, exponent) -> np.ndarray:
    """Allocation proportional to ``v ** exponent``; all-zero rows become uniform.

    Computed as a softmax over ``exponent * log v`` (max-normalized), so large
    exponents and extreme value spreads stay in range.
    """
    V = check_values_batch(values)
    p = check_exponent(exponent)
    n, k = V.shape
    vmax = V.max(axis=1)
    X = np.empty_like(V)
    zero_rows = vmax == 0
    if zero_rows.any():
        X[zero_rows] = 1.0 / k
    act = np.flatnonzero(~zero_rows)
    if act.size:
        Va = V[act]
        with np.errstate(divide="ignore"):
            logits = p * (np.log(Va) - np.log(vmax[act])[:, None])
        weights = np.exp(logits)  # in [0, 1]; exact 0 for zero values
        X[act] = weights / weights.sum(axis=1)[:, None]
    _renormalize_rows(X)
    return X


def proportional_allocate(values, exponent) -> Allocation:
    return _wrap(proportional_allocate_batch(check_values(values), exponent)[0])


def highest_bid_allocate_batch(values) -> np.ndarray:
    """Full allocation to the highest value, split equally among exact ties."""
    V = check_values_batch(values)
    vmax = V.max(axis=1)
    is_max = V == vmax[:, None]
    return is_max / is_max.sum(axis=1)[:, None]


def highest_bid_allocate(values) -> Allocation:
    return _wrap(highest_bid_allocate_batch(check_values(values))[0])


def uniform_allocate_batch(values) -> np.ndarray:
    V = check_values_batch(values)
    return np.full_like(V, 1.0 / V.shape[1])


def uniform_allocate(values) -> Allocation:
    return _wrap(uniform_allocate_batch(check_values(values))[0])


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def allocate_batch(spec: RuleSpec, values) -> np.ndarray:
    """Run the rule described by ``spec`` on an (n, k) batch of value vectors."""
    if spec.kind is RuleKind.IPA:
        return ipa_allocate_batch(values, spec.ell)
    if spec.kind is RuleKind.CAPPED_IPA:
        return capped_ipa_allocate_batch(values, spec.ell, spec.beta)
    if spec.kind is RuleKind.PROPORTIONAL:
        return proportional_allocate_batch(values, spec.exponent)
    if spec.kind is RuleKind.HIGHEST_BID:
        return highest_bid_allocate_batch(values)
    if spec.kind is RuleKind.UNIFORM:
        return uniform_allocate_batch(values)
    raise FairAuctionError(f"unknown rule kind {spec.kind!r}")


def allocate(spec: RuleSpec, values) -> Allocation:
    """Run the rule described by ``spec`` on a single value vector."""
    return _wrap(allocate_batch(spec, check_values(values))[0])


def as_batch_rule(rule):
    """Normalize a ``RuleSpec`` or a batch callable into a batch callable.

    Several analysis entry points accept either a :class:`RuleSpec` or an
    arbitrary ``(n, k) -> (n, k)`` allocation function (e.g. a composed rule).
    """
    if isinstance(rule, RuleSpec):
        return lambda V: allocate_batch(rule, V)
    return rule
