"""Contract tests shared by every manifold implementation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manifold_cpd.geometry import (
    GrassmannManifold,
    SpdManifold,
    ValidationError,
    karcher_stochastic_gradient,
)
from manifold_cpd.geometry.base import TangentVector

from helpers import directional_derivative_gap, fine_distance, retraction_slope


def test_metric_axioms_sampled(manifold, rng):
    for _ in range(200):
        x, y, z = (manifold.random_point(rng) for _ in range(3))
        dxy = manifold.distance(x, y)
        dyx = manifold.distance(y, x)
        assert dxy >= 0
        assert abs(dxy - dyx) <= 1e-9
        assert dxy + manifold.distance(y, z) >= manifold.distance(x, z) - 1e-8


def test_identity_of_indiscernibles(manifold, rng):
    for _ in range(25):
        x = manifold.random_point(rng)
        y = manifold.random_point(rng)
        assert manifold.distance(x, x) < 1e-8
        if manifold.distance(x, y) < 1e-8:
            assert np.allclose(x.data, y.data, atol=1e-9)


def test_exp_log_roundtrip(manifold, rng):
    for _ in range(25):
        x, y = manifold.random_point(rng), manifold.random_point(rng)
        v = manifold.log(x, y)
        back = manifold.exp(x, v)
        # Grassmann representatives may differ; compare as manifold points
        assert manifold.distance(back, y) <= 1e-8


def test_retraction_second_order(manifold, rng):
    for _ in range(5):
        x = manifold.random_point(rng)
        v = manifold.random_tangent(rng, x, scale=1.0)
        assert retraction_slope(manifold, x, v) >= 2.7


def test_retract_matches_exp_at_zero(manifold, rng):
    x = manifold.random_point(rng)
    zero = TangentVector(np.zeros(manifold.shape), x)
    assert manifold.distance(manifold.retract(x, zero), x) <= 1e-12
    assert manifold.distance(manifold.exp(x, zero), x) <= 1e-12


def test_karcher_gradient_vanishes_at_sample(manifold, rng):
    x = manifold.random_point(rng)
    g = karcher_stochastic_gradient(manifold, x, x)
    assert np.linalg.norm(g.data) <= 1e-10


def test_karcher_gradient_norm_equals_distance(manifold, rng):
    for _ in range(25):
        m, x = manifold.random_point(rng), manifold.random_point(rng)
        g = karcher_stochastic_gradient(manifold, m, x)
        assert abs(manifold.norm(m, g) - manifold.distance(m, x)) <= 1e-9


def test_directional_derivative_of_half_squared_distance(manifold, rng):
    for _ in range(25):
        m, x = manifold.random_point(rng), manifold.random_point(rng)
        v = manifold.random_tangent(rng, m, scale=1.0)
        gap, scale = directional_derivative_gap(manifold, m, x, v)
        assert gap <= 1e-5 * scale


def test_inner_is_bilinear_and_symmetric(manifold, rng):
    x = manifold.random_point(rng)
    v = manifold.random_tangent(rng, x)
    w = manifold.random_tangent(rng, x)
    two_v = TangentVector(2.0 * v.data, x)
    assert manifold.inner(x, v, w) == pytest.approx(manifold.inner(x, w, v), rel=1e-12)
    assert manifold.inner(x, two_v, w) == pytest.approx(
        2.0 * manifold.inner(x, v, w), rel=1e-12
    )
    assert manifold.norm(x, v) >= 0


def test_tangent_base_mismatch_rejected(manifold, rng):
    x, y = manifold.random_point(rng), manifold.random_point(rng)
    v = manifold.log(x, y)
    with pytest.raises(ValidationError):
        manifold.exp(y, v)


def test_wrong_shape_rejected(manifold, rng):
    bad = manifold.point(np.zeros((manifold.shape[0] + 1, manifold.shape[1])))
    with pytest.raises(ValidationError):
        manifold.validate(bad)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=15)
def test_distance_symmetry_property(seed):
    rng = np.random.default_rng(seed)
    for man in (SpdManifold(3), GrassmannManifold(5, 2)):
        x, y = man.random_point(rng), man.random_point(rng)
        assert abs(man.distance(x, y) - man.distance(y, x)) <= 1e-9
