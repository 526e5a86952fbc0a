"""Input validation helpers shared by the allocation rules and estimators.

These are deliberately small and composable, in the spirit of
``sklearn.utils.validation``: each helper either returns a normalized
``numpy`` array / scalar or raises one of the typed errors from
:mod:`fairauction.errors`.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    AlphaOutOfRange,
    EmptyVector,
    IndexOutOfRange,
    InvalidBeta,
    InvalidEll,
    InvalidExponent,
    InvalidLambda,
    LengthMismatch,
    NegativeValue,
    NonFiniteValue,
)

__all__ = [
    "check_alpha",
    "check_beta",
    "check_ell",
    "check_exponent",
    "check_index",
    "check_lambda",
    "check_same_length",
    "check_values",
    "check_values_batch",
]


def check_values(values) -> np.ndarray:
    """Validate a single value vector and return it as a 1-D float64 array."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise EmptyVector(f"expected a 1-D value vector, got shape {v.shape}")
    if v.size == 0:
        raise EmptyVector("value vector is empty")
    if np.isnan(v).any() or np.isinf(v).any():
        raise NonFiniteValue("value vector contains NaN or infinite entries")
    if (v < 0).any():
        raise NegativeValue("value vector contains negative entries")
    return v


def check_values_batch(values) -> np.ndarray:
    """Validate an (n, k) matrix of value vectors (one auction per row)."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v.reshape(1, -1)
    if v.ndim != 2:
        raise EmptyVector(f"expected an (n, k) value matrix, got shape {v.shape}")
    if v.shape[1] == 0:
        raise EmptyVector("value vectors are empty (k = 0)")
    if not np.isfinite(v).all():
        raise NonFiniteValue("value matrix contains NaN or infinite entries")
    if (v < 0).any():
        raise NegativeValue("value matrix contains negative entries")
    return v


def check_ell(ell) -> float:
    try:
        ell = float(ell)
    except (TypeError, ValueError):
        raise InvalidEll(f"ell must be a finite positive real, got {ell!r}") from None
    if not math.isfinite(ell) or ell <= 0:
        raise InvalidEll(f"ell must be a finite positive real, got {ell}")
    return ell


def check_beta(beta) -> float:
    try:
        beta = float(beta)
    except (TypeError, ValueError):
        raise InvalidBeta(f"beta must lie in [0, 1], got {beta!r}") from None
    if not math.isfinite(beta) or not 0.0 <= beta <= 1.0:
        raise InvalidBeta(f"beta must lie in [0, 1], got {beta}")
    return beta


def check_exponent(exponent) -> float:
    try:
        exponent = float(exponent)
    except (TypeError, ValueError):
        raise InvalidExponent(f"exponent must be a finite positive real, got {exponent!r}") from None
    if not math.isfinite(exponent) or exponent <= 0:
        raise InvalidExponent(f"exponent must be a finite positive real, got {exponent}")
    return exponent


def check_lambda(lam, *, strict: bool = False) -> float:
    """Validate a similarity ratio; ``math.inf`` is allowed."""
    try:
        lam = float(lam)
    except (TypeError, ValueError):
        raise InvalidLambda(f"similarity ratio must be >= 1, got {lam!r}") from None
    if math.isnan(lam) or lam < 1.0:
        raise InvalidLambda(f"similarity ratio must be >= 1, got {lam}")
    if strict and lam == 1.0:
        raise InvalidLambda("similarity ratio must be > 1 here")
    return lam


def check_alpha(alpha) -> float:
    try:
        alpha = float(alpha)
    except (TypeError, ValueError):
        raise AlphaOutOfRange(f"alpha must lie strictly inside (0, 1), got {alpha!r}") from None
    if not math.isfinite(alpha) or not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie strictly inside (0, 1), got {alpha}")
    return alpha


def check_index(i, k: int) -> int:
    i = int(i)
    if not 0 <= i < k:
        raise IndexOutOfRange(f"index {i} outside [0, {k})")
    return i


def check_same_length(v: np.ndarray, w: np.ndarray) -> None:
    if v.shape != w.shape:
        raise LengthMismatch(f"vectors have shapes {v.shape} and {w.shape}")
