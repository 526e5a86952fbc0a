"""Truthful payments for weakly monotone allocation rules.

For a rule whose coordinate allocation ``x_i(z, v_-i)`` is non-decreasing in
the bid ``z``, the unique truthful payment normalized at zero is

    p_i(v) = v_i * x_i(v) - integral_0^{v_i} x_i(z, v_-i) dz.

The integrand is piecewise smooth: it has kinks wherever the rule's serve set
changes as ``z`` varies. Payments are computed by adaptive Simpson quadrature
run per smooth piece, with piece boundaries located by scanning the serve-set
fingerprint and bisecting each change. Evaluations are batched, so one
payment costs a handful of vectorized rule calls.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import FairAuctionError, NonMonotoneRule, QuadratureNotConverged
from .rules import as_batch_rule
from .validation import check_index, check_values

__all__ = [
    "PaymentResult",
    "QuadratureConfig",
    "check_monotone",
    "ic_regret",
    "payment_curve",
    "payment_identity",
]

_MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for the payment integration.

    ``tol`` is the absolute error budget for one payment integral;
    ``kink_scan_points`` controls the serve-set change scan; ``max_waves``
    caps the adaptive refinement rounds.
    """

    tol: float = 1e-8
    kink_scan_points: int = 65
    max_waves: int = 60

    def __post_init__(self):
        if not self.tol > 0:
            raise FairAuctionError(f"quadrature tol must be positive, got {self.tol}")
        if self.kink_scan_points < 3 or self.max_waves < 4:
            raise FairAuctionError("quadrature config too coarse")


@dataclass(frozen=True)
class PaymentResult:
    payment: float
    allocation_at_truth: float
    quadrature_error_estimate: float


def _coordinate_curve(rule, v: np.ndarray, i: int) -> Callable[[np.ndarray], np.ndarray]:
    """Batch evaluator of the full allocation matrix as coordinate i's bid varies."""
    fn = as_batch_rule(rule)

    def evaluate(zs: np.ndarray) -> np.ndarray:
        V = np.tile(v, (zs.size, 1))
        V[:, i] = zs
        return fn(V)

    return evaluate


def _scan_grid(hi: float, points: int) -> np.ndarray:
    # Geometric points resolve changes near 0, linear points the rest.
    ngeo = points // 2
    geo = hi * np.geomspace(1e-9, 1.0, ngeo)
    lin = np.linspace(0.0, hi, points - ngeo)
    return np.unique(np.concatenate([[0.0], geo, lin]))


def _find_kinks(curve, i: int, hi: float, cfg: QuadratureConfig) -> np.ndarray:
    """Bid levels where the serve set changes, located to ~1e-12 * hi.

    Also guards monotonicity of coordinate i's allocation along the scan.
    """
    grid = _scan_grid(hi, cfg.kink_scan_points)
    X = curve(grid)
    xi = X[:, i]
    if np.any(np.diff(xi) < -_MONOTONE_SLACK):
        raise NonMonotoneRule("allocation decreases in the advertiser's own bid")

    finger = X > 0
    changed = np.any(finger[1:] != finger[:-1], axis=1)
    lo = grid[:-1][changed]
    up = grid[1:][changed]
    if lo.size == 0:
        return np.empty(0)
    f_lo = finger[:-1][changed]
    # Bisect every change interval in parallel until tight, tracking the
    # leftmost fingerprint so nested changes still land on a boundary.
    for _ in range(48):
        mid = 0.5 * (lo + up)
        fm = curve(mid) > 0
        same = np.all(fm == f_lo, axis=1)
        lo = np.where(same, mid, lo)
        up = np.where(same, up, mid)
        f_lo = np.where(same[:, None], fm, f_lo)
    return 0.5 * (lo + up)


def _simpson_batched(f: Callable[[np.ndarray], np.ndarray], edges: np.ndarray, tol: float, max_waves: int):
    """Adaptive Simpson over consecutive panels, evaluated in batched waves.

    Returns ``(panel_integrals, panel_errors)`` aligned with ``edges[:-1]``.
    The error budget ``tol`` is apportioned to intervals by length.
    """
    a = edges[:-1].copy()
    b = edges[1:].copy()
    keep = b > a
    panel_ids = np.flatnonzero(keep)
    a, b = a[keep], b[keep]
    total_len = float((b - a).sum())
    if total_len == 0.0 or a.size == 0:
        return np.zeros(edges.size - 1), np.zeros(edges.size - 1)

    m = 0.5 * (a + b)
    fa, fm, fb = (f(z) for z in (a, m, b))
    S = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    eps = tol * (b - a) / total_len
    owner = panel_ids.copy()

    integrals = np.zeros(edges.size - 1)
    errors = np.zeros(edges.size - 1)
    hmin = total_len * 1e-14

    for _ in range(max_waves):
        if a.size == 0:
            return integrals, errors
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        f_new = f(np.concatenate([lm, rm]))
        flm, frm = f_new[: a.size], f_new[a.size:]
        Sl = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        Sr = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = (Sl + Sr - S) / 15.0
        done = (np.abs(err) <= eps) | (b - a <= hmin)

        np.add.at(integrals, owner[done], Sl[done] + Sr[done] + err[done])
        np.add.at(errors, owner[done], np.abs(err[done]))

        split = ~done
        a = np.concatenate([a[split], m[split]])
        b = np.concatenate([m[split], b[split]])
        fa = np.concatenate([fa[split], fm[split]])
        fb = np.concatenate([fm[split], fb[split]])
        m = np.concatenate([lm[split], rm[split]])
        fm = np.concatenate([flm[split], frm[split]])
        S = np.concatenate([Sl[split], Sr[split]])
        eps = np.concatenate([eps[split] / 2.0, eps[split] / 2.0])
        owner = np.concatenate([owner[split], owner[split]])

    raise QuadratureNotConverged(f"refinement cap of {max_waves} waves exceeded")


def payment_curve(
    rule,
    values,
    i: int,
    bids: Sequence[float],
    quad: QuadratureConfig | None = None,
) -> list[PaymentResult]:
    """Payments at several bid levels of one advertiser, sharing one integration.

    ``bids`` are treated as alternative reports of advertiser ``i``; the
    integral ``int_0^z x_i`` is accumulated once over the sorted levels.
    """
    quad = quad or QuadratureConfig()
    v = check_values(values)
    i = check_index(i, v.size)
    zs = np.asarray(list(bids), dtype=np.float64)
    if zs.size == 0:
        return []
    if (zs < 0).any() or not np.isfinite(zs).all():
        raise FairAuctionError("bid levels must be finite and nonnegative")

    curve = _coordinate_curve(rule, v, i)
    hi = float(zs.max())
    xi_at = curve(zs)[:, i]
    if hi == 0.0:
        return [PaymentResult(0.0, float(x), 0.0) for x in xi_at]

    kinks = _find_kinks(curve, i, hi, quad)
    edges = np.unique(np.concatenate([[0.0, hi], kinks, zs]))
    f = lambda z: curve(z)[:, i]
    panel_int, panel_err = _simpson_batched(f, edges, quad.tol, quad.max_waves)
    cum_int = np.concatenate([[0.0], np.cumsum(panel_int)])
    cum_err = np.concatenate([[0.0], np.cumsum(panel_err)])

    results = []
    for z, xz in zip(zs, xi_at):
        j = int(np.searchsorted(edges, z))
        integral = float(cum_int[j])
        err = float(cum_err[j])
        p = z * float(xz) - integral
        # Monotonicity puts the exact payment in [0, z * x_i(z)]; the clamp
        # strips quadrature noise only.
        p = min(max(p, 0.0), z * float(xz))
        results.append(PaymentResult(p, float(xz), err))
    return results


def payment_identity(
    rule,
    values,
    i: int,
    quad: QuadratureConfig | None = None,
) -> PaymentResult:
    """Truthful payment of advertiser ``i`` at the reported value vector."""
    v = check_values(values)
    i = check_index(i, v.size)
    return payment_curve(rule, v, i, [v[i]], quad)[0]


def check_monotone(rule, values, i: int, grid: int = 64) -> bool:
    """True iff coordinate i's allocation is non-decreasing in its own bid.

    Evaluated on a geometric grid spanning two decades around the current bid,
    plus zero; tolerance 1e-12 on dips.
    """
    v = check_values(values)
    i = check_index(i, v.size)
    grid = int(grid)
    if grid < 2:
        raise FairAuctionError(f"grid must have at least 2 points, got {grid}")
    base = v[i] if v[i] > 0 else 1.0
    zs = np.concatenate([[0.0], np.geomspace(base / 100.0, base * 100.0, grid)])
    xi = _coordinate_curve(rule, v, i)(zs)[:, i]
    return bool(np.all(np.diff(xi) >= -1e-12))


def ic_regret(
    rule,
    values,
    i: int,
    deviations: int = 32,
    quad: QuadratureConfig | None = None,
) -> float:
    """Best achievable utility gain from misreporting, on a geometric bid grid.

    For a monotone rule paid via :func:`payment_identity` the exact regret is
    zero; the returned value is bounded by the quadrature error.
    """
    v = check_values(values)
    i = check_index(i, v.size)
    deviations = int(deviations)
    if deviations < 1:
        raise FairAuctionError(f"deviations must be >= 1, got {deviations}")
    vi = float(v[i])
    if vi == 0.0:
        zs = np.array([0.0])
    else:
        zs = np.concatenate([[0.0], np.geomspace(vi * 1e-3, vi * 1e3, deviations)])
    zs = np.unique(np.concatenate([zs, [vi]]))

    results = payment_curve(rule, v, i, zs, quad)
    utils = np.array([vi * r.allocation_at_truth - r.payment for r in results])
    truth_util = utils[int(np.searchsorted(zs, vi))]
    return float(max(0.0, np.max(utils) - truth_util))
