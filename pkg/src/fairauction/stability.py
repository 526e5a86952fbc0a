"""Value-stability metrics, worst-case search, and closed-form bound calculators.

Value stability asks that two value vectors within a per-coordinate
multiplicative ratio ``lam`` receive allocations within an additive bound
``f(lam)`` per coordinate. The polynomial constraint family used throughout is
``f_ell(lam) = 1 - lam**(-2*ell)``; the matching worst-case welfare ratio of
the inverse-proportional rule with exponent ``ell`` is ``alpha_ell``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .errors import AllZeroValues, InvalidX
from .rules import Allocation, RuleSpec, as_batch_rule, ipa_allocate_batch
from .validation import (
    check_alpha,
    check_ell,
    check_index,
    check_lambda,
    check_same_length,
    check_values,
)

__all__ = [
    "BoundReport",
    "alpha_ell",
    "bound_report",
    "alpha_ell_numeric",
    "bounding_logs_check",
    "directed_worst_case",
    "f_ell",
    "gap_bounds",
    "near_optimal_params",
    "optimality_gap_construction",
    "prior_free_upper_bound",
    "prior_free_upper_bound_min",
    "stability_param",
    "stability_violation_search",
    "welfare_ratio",
]


def stability_param(v, w) -> float:
    """Maximum per-coordinate multiplicative ratio between two value vectors.

    Coordinates that are zero in both vectors contribute 1; a zero matched
    with a positive value yields ``inf``.
    """
    v = check_values(v)
    w = check_values(w)
    check_same_length(v, w)
    both_zero = (v == 0) & (w == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.maximum(v / w, w / v)
    ratio[both_zero] = 1.0
    return float(np.max(ratio)) if ratio.size else 1.0


def f_ell(lam, ell) -> float:
    """The stability constraint ``1 - lam**(-2*ell)``; 0 at 1, 1 at infinity."""
    lam = check_lambda(lam)
    ell = check_ell(ell)
    if math.isinf(lam):
        return 1.0
    return 1.0 - lam ** (-2.0 * ell)


def alpha_ell(ell) -> float:
    """Worst-case welfare ratio of the inverse-proportional rule, closed form."""
    ell = check_ell(ell)
    # 1 - (1/(ell+1)) * (ell/(ell+1))**ell, stable for large ell via exp/log1p.
    return 1.0 - math.exp(ell * math.log1p(-1.0 / (ell + 1.0))) / (ell + 1.0)


def alpha_ell_numeric(ell) -> float:
    """Numerical minimization of ``1 - x**ell + x**(ell+1)`` on (0, 1).

    Cross-check for :func:`alpha_ell`; the two agree to ~1e-12.
    """
    ell = check_ell(ell)
    res = optimize.minimize_scalar(
        lambda x: 1.0 - x**ell + x ** (ell + 1.0),
        bounds=(1e-12, 1.0 - 1e-12),
        method="bounded",
        options={"xatol": 1e-14},
    )
    return float(res.fun)


def welfare_ratio(x, v) -> float:
    """Achieved welfare ``x . v`` relative to the maximum value."""
    v = check_values(v)
    p = np.asarray(x.probs if isinstance(x, Allocation) else x, dtype=np.float64)
    check_same_length(p, v)
    vmax = v.max()
    if vmax <= 0:
        raise AllZeroValues("welfare ratio undefined for an all-zero value vector")
    return float(p @ v / vmax)


def directed_worst_case(v, i, lam) -> np.ndarray:
    """Lower coordinate ``i`` by ``lam**2``, leaving the rest unchanged.

    For a scale-free rule this perturbation is equivalent to the within-band
    extreme that lowers i by ``lam`` while raising everyone else by ``lam``.
    """
    v = check_values(v)
    lam = check_lambda(lam)
    i = check_index(i, v.size)
    out = v.copy()
    out[i] = v[i] / lam**2 if not math.isinf(lam) else 0.0
    return out


def stability_violation_search(
    spec: RuleSpec | Callable[[np.ndarray], np.ndarray],
    v,
    lam,
    samples: int,
    seed: int,
) -> float:
    """Largest per-coordinate allocation change over a similarity band.

    Candidates are (a) the directed extreme for every coordinate and (b)
    ``samples`` vectors with each coordinate drawn log-uniformly within ratio
    ``lam`` of the base, using a generator seeded by ``seed``. Exact for the
    inverse-proportional family, whose within-band worst case is one of the
    directed candidates; a sampling heuristic for other rules.
    """
    v = check_values(v)
    lam = check_lambda(lam)
    if int(samples) < 1:
        raise InvalidX(f"samples must be >= 1, got {samples}")
    k = v.size

    cands = np.tile(v, (k + int(samples), 1))
    # Directed extremes: lower one coordinate by lam**2, leave the rest.
    diag = np.arange(k)
    cands[diag, diag] = 0.0 if math.isinf(lam) else v / (lam * lam)
    rng = np.random.default_rng(seed)
    if math.isinf(lam):
        # Unbounded band: drive each coordinate to 0 or scale it arbitrarily.
        mask = rng.random((int(samples), k)) < 0.5
        cands[k:][mask] = 0.0
    else:
        log_lam = math.log(lam)
        u = rng.uniform(-1.0, 1.0, size=(int(samples), k))
        cands[k:] *= np.exp(u * log_lam)

    batch = np.vstack([v, cands])
    X = as_batch_rule(spec)(batch)
    diffs = np.abs(X[1:] - X[0])
    return float(diffs.max())


def prior_free_upper_bound(f: Callable[[float], float], lam, k: int) -> float:
    """Welfare ceiling for any value-stable rule at a given similarity ratio.

    Evaluates ``1/k + f(lam) + lam**-2 * (1 - 1/k - f(lam))``.
    """
    lam = check_lambda(lam, strict=True)
    k = int(k)
    if k < 1:
        raise InvalidX(f"k must be >= 1, got {k}")
    flam = float(f(lam))
    inv = 0.0 if math.isinf(lam) else lam**-2.0
    return 1.0 / k + flam + inv * (1.0 - 1.0 / k - flam)


def prior_free_upper_bound_min(
    f: Callable[[float], float],
    k: int,
    grid_points: int = 20001,
    lam_max: float = 1e4,
) -> tuple[float, float]:
    """Minimum of :func:`prior_free_upper_bound` over a log grid of ratios.

    Returns ``(bound, argmin_lam)``; the grid spans (1, lam_max].
    """
    lams = np.exp(np.linspace(math.log(1.0 + 1e-9), math.log(lam_max), int(grid_points)))
    vals = np.array([prior_free_upper_bound(f, lam, k) for lam in lams])
    j = int(np.argmin(vals))
    return float(vals[j]), float(lams[j])


def near_optimal_params(alpha) -> tuple[float, float, float]:
    """Cap and exponent settings competing with any rule of welfare ratio alpha.

    Returns ``(ell, beta, guarantee)`` with ``beta = alpha/(1+alpha)``,
    ``ell = 1/(2 ln(1/alpha))`` and ``guarantee = beta / (2 ln(1/alpha) + 1)``,
    which is always at least ``(alpha/2) / (2 ln(1/alpha) + 1)``.
    """
    alpha = check_alpha(alpha)
    log_inv = -math.log(alpha)
    ell = 1.0 / (2.0 * log_inv)
    beta = alpha / (1.0 + alpha)
    guarantee = beta / (2.0 * log_inv + 1.0)
    return ell, beta, guarantee


def bounding_logs_check(beta, alpha, xs: Sequence[float], tol: float = 1e-12) -> bool:
    """Check ``min(beta, ln(x) * beta / ln(1/alpha)) >= beta * (1 - x**(-1/ln(1/alpha)))``.

    Pointwise over a grid of x >= 1; True iff no violation beyond ``tol``.
    """
    alpha = check_alpha(alpha)
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise InvalidX(f"beta must lie in (0, 1], got {beta}")
    log_inv = -math.log(alpha)
    x = np.asarray(list(xs), dtype=np.float64)
    if (x < 1.0).any():
        raise InvalidX("grid points must be >= 1")
    lhs = np.minimum(beta, np.log(x) * beta / log_inv)
    rhs = beta * (1.0 - x ** (-1.0 / log_inv))
    return bool(np.all(lhs >= rhs - tol))


def optimality_gap_construction(x, k: int, ell) -> tuple[np.ndarray, np.ndarray, float]:
    """Witness pair showing no weaker constraint family bounds the rule.

    Builds ``v = [x]*k`` and ``v2 = [x**2, 1, ..., 1]`` (within ratio x of each
    other), runs the inverse-proportional rule on both, and returns
    ``(v, v2, delta)`` where ``delta`` is the first coordinate's allocation
    gain. As k grows, ``delta -> 1 - x**(-2*ell)``.
    """
    x = float(x)
    if not x > 1.0:
        raise InvalidX(f"x must be > 1, got {x}")
    k = int(k)
    if k < 2:
        raise InvalidX(f"k must be >= 2, got {k}")
    ell = check_ell(ell)
    v = np.full(k, x)
    v2 = np.ones(k)
    v2[0] = x * x
    X = ipa_allocate_batch(np.vstack([v, v2]), ell)
    delta = float(X[1, 0] - X[0, 0])
    return v, v2, delta


@dataclass(frozen=True)
class BoundReport:
    """Welfare-bound summary for one exponent: the floor, the ceiling, and inputs.

    ``upper_bound`` is the prior-free ceiling minimized over the similarity
    ratio; note it reads ``alpha_ell + 1/k`` (the stated optimality direction
    is ``alpha_ell - 1/k``; the ceiling expression itself minimizes to the
    former, and is reported verbatim).
    """

    alpha_ell: float
    upper_bound: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.alpha_ell <= 1.0:
            raise InvalidX(f"alpha_ell must lie in (0, 1], got {self.alpha_ell}")


def bound_report(ell, k: int = 10**6) -> BoundReport:
    """Closed-form floor and minimized prior-free ceiling for one exponent."""
    ell = check_ell(ell)
    ceiling, arg_lam = prior_free_upper_bound_min(lambda lam: f_ell(lam, ell), k)
    return BoundReport(
        alpha_ell=alpha_ell(ell),
        upper_bound=ceiling,
        params={"ell": ell, "k": float(k), "argmin_lambda": arg_lam},
    )


def gap_bounds(ell) -> tuple[float, float]:
    """Closed-form limits comparing all-subsets stability against the base rule.

    Returns ``(ub_limit, ratio_lb)``: the large-k welfare ceiling
    ``2*ell / (2*ell + 1)`` for rules stable on every subset of advertisers,
    and the lower bound on how far the plain rule's ratio exceeds it,
    ``(2*ell+1)/(ell+1) * (1/2 + (1/(2*ell)) * (1 - (ell/(ell+1))**ell))``.
    """
    ell = check_ell(ell)
    ub = 2.0 * ell / (2.0 * ell + 1.0)
    pow_term = math.exp(ell * math.log1p(-1.0 / (ell + 1.0)))
    ratio_lb = (2.0 * ell + 1.0) / (ell + 1.0) * (0.5 + (1.0 - pow_term) / (2.0 * ell))
    return ub, ratio_lb
