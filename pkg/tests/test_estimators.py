import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import Pipeline

from fairauction import errors
from fairauction.estimators import (
    CappedIPAAllocator,
    HighestBidAllocator,
    IPAAllocator,
    ProportionalAllocator,
    UniformAllocator,
)
from fairauction.rules import allocate_batch

ESTIMATORS = [
    IPAAllocator(ell=1.3),
    CappedIPAAllocator(ell=0.8, beta=0.5),
    ProportionalAllocator(exponent=2.0),
    HighestBidAllocator(),
    UniformAllocator(),
]


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
def test_transform_matches_functional(est, rng):
    X = np.exp(rng.normal(0, 1, size=(20, 5)))
    got = est.transform(X)
    expected = allocate_batch(est.to_rule_spec(), X)
    assert np.array_equal(got, expected)
    assert np.allclose(got.sum(axis=1), 1.0, atol=1e-12)


def test_get_set_params_and_clone():
    est = IPAAllocator(ell=2.5)
    assert est.get_params() == {"ell": 2.5}
    est.set_params(ell=0.5)
    assert est.to_rule_spec().ell == 0.5
    twin = clone(est)
    assert twin.get_params() == {"ell": 0.5}

    capped = CappedIPAAllocator(ell=1.0, beta=0.25)
    assert capped.get_params() == {"beta": 0.25, "ell": 1.0}


def test_fit_validates_and_records_width(rng):
    X = np.exp(rng.normal(0, 1, size=(8, 4)))
    est = IPAAllocator(ell=1.0).fit(X)
    assert est.n_features_in_ == 4
    with pytest.raises(errors.InvalidEll):
        IPAAllocator(ell=-1).fit(X)
    with pytest.raises(errors.NegativeValue):
        IPAAllocator(ell=1).transform([[1.0, -1.0]])


def test_pipeline_composition(rng):
    X = np.exp(rng.normal(0, 1, size=(6, 3)))
    pipe = Pipeline([("alloc", IPAAllocator(ell=1.0))])
    out = pipe.fit_transform(X)
    assert out.shape == X.shape
    assert np.allclose(out.sum(axis=1), 1.0, atol=1e-12)
