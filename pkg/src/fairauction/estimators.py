"""Scikit-learn style wrappers around the allocation rules.

Each allocator is a stateless transformer: ``fit`` only validates (like
``sklearn.preprocessing.Normalizer``) and ``transform`` maps an (n, k) matrix
of per-auction value vectors to the (n, k) matrix of allocation
probabilities. Parameters follow the estimator convention (stored verbatim in
``__init__``, validated at use), so ``get_params`` / ``set_params`` /
``clone`` and pipeline composition work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .rules import RuleKind, RuleSpec, allocate_batch
from .validation import check_values_batch

__all__ = [
    "CappedIPAAllocator",
    "HighestBidAllocator",
    "IPAAllocator",
    "ProportionalAllocator",
    "UniformAllocator",
]


class _BaseAllocator(BaseEstimator, TransformerMixin):
    def to_rule_spec(self) -> RuleSpec:
        raise NotImplementedError

    def fit(self, X, y=None):
        self.to_rule_spec()  # parameter validation
        X = check_values_batch(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        return allocate_batch(self.to_rule_spec(), check_values_batch(X))


class IPAAllocator(_BaseAllocator):
    """Inverse proportional allocation with deduction exponent ``ell``."""

    def __init__(self, ell: float = 1.0):
        self.ell = ell

    def to_rule_spec(self) -> RuleSpec:
        return RuleSpec(RuleKind.IPA, ell=self.ell)


class CappedIPAAllocator(_BaseAllocator):
    """Mixture of inverse proportional allocation (weight ``beta``) and uniform."""

    def __init__(self, ell: float = 1.0, beta: float = 1.0):
        self.ell = ell
        self.beta = beta

    def to_rule_spec(self) -> RuleSpec:
        return RuleSpec(RuleKind.CAPPED_IPA, ell=self.ell, beta=self.beta)


class ProportionalAllocator(_BaseAllocator):
    """Allocation proportional to ``value ** exponent``."""

    def __init__(self, exponent: float = 1.0):
        self.exponent = exponent

    def to_rule_spec(self) -> RuleSpec:
        return RuleSpec(RuleKind.PROPORTIONAL, exponent=self.exponent)


class HighestBidAllocator(_BaseAllocator):
    """Winner-take-all allocation; exact ties split equally."""

    def to_rule_spec(self) -> RuleSpec:
        return RuleSpec(RuleKind.HIGHEST_BID)


class UniformAllocator(_BaseAllocator):
    """Value-blind equal split."""

    def to_rule_spec(self) -> RuleSpec:
        return RuleSpec(RuleKind.UNIFORM)
