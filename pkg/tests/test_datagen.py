"""Stream generators: validity, determinism, distributional identities."""

import math

import numpy as np
import pytest

from manifold_cpd.centroid import batch_frechet_mean
from manifold_cpd.datagen import (
    StreamSpec,
    SubspaceParams,
    WishartParams,
    default_subspace_params,
    default_wishart_params,
    gen_grassmann_stream,
    gen_spd_stream,
    gen_stream,
    manifold_for,
    sample_wishart,
    stream_stack,
)
from manifold_cpd.geometry import GrassmannManifold, SpdManifold


# -- spec validation -----------------------------------------------------------


def test_change_at_bounds():
    with pytest.raises(ValueError):
        StreamSpec(manifold="spd", p=3, length=100, change_at=0)
    with pytest.raises(ValueError):
        StreamSpec(manifold="spd", p=3, length=100, change_at=100)
    StreamSpec(manifold="spd", p=3, length=100, change_at=50)


def test_grassmann_needs_valid_k():
    with pytest.raises(ValueError):
        StreamSpec(manifold="grassmann", p=5, k=5, length=10)
    with pytest.raises(ValueError):
        StreamSpec(manifold="grassmann", p=5, k=0, length=10)


def test_params_dimension_checked():
    with pytest.raises(ValueError):
        StreamSpec(
            manifold="spd", p=3, length=10,
            pre=WishartParams(scale=np.eye(4), dof=6),
        )
    with pytest.raises(ValueError):
        StreamSpec(
            manifold="grassmann", p=5, k=2, length=10,
            pre=SubspaceParams(mean=np.zeros((5, 3))),
        )


def test_wishart_params_dof_check():
    with pytest.raises(ValueError):
        WishartParams(scale=np.eye(4), dof=3)


# -- wishart sampling ------------------------------------------------------------


def test_reference_setting_draw_is_valid_spd():
    rng = np.random.default_rng(0)
    pt = sample_wishart(rng, np.eye(10), 12)
    SpdManifold(10).validate(pt)


def test_wishart_rejects_rank_deficient():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_wishart(rng, np.eye(10), 9)


def test_wishart_mean_identity():
    # E[W]/dof = V for the normalized sampler; 1e4 draws, 5% on the diagonal
    rng = np.random.default_rng(7)
    p, dof, n = 10, 12, 10_000
    acc = np.zeros((p, p))
    for _ in range(n):
        acc += sample_wishart(rng, np.eye(p), dof).data
    mean = acc / n
    assert np.all(np.abs(np.diag(mean) - 1.0) < 0.05)


def test_wishart_unnormalized_mean():
    rng = np.random.default_rng(7)
    p, dof, n = 4, 8, 4000
    acc = np.zeros((p, p))
    for _ in range(n):
        acc += sample_wishart(rng, np.eye(p), dof, normalize=False).data
    assert np.all(np.abs(np.diag(acc / n) / dof - 1.0) < 0.05)


def test_wishart_determinism():
    a = sample_wishart(np.random.default_rng(42), np.eye(3), 5)
    b = sample_wishart(np.random.default_rng(42), np.eye(3), 5)
    assert np.array_equal(a.data, b.data)


# -- spd streams --------------------------------------------------------------------


def test_spd_stream_full_scale_all_valid():
    spec = StreamSpec(manifold="spd", p=10, length=2000, change_at=1500, seed=1)
    stream = gen_spd_stream(spec)
    assert len(stream) == 2000
    man = SpdManifold(10)
    for pt in stream[::97]:
        man.validate(pt)
    man.validate(stream[1499])
    man.validate(stream[1500])


def test_spd_stream_without_change_uses_one_distribution():
    spec = StreamSpec(manifold="spd", p=5, length=400, seed=3)
    stream = gen_spd_stream(spec)
    halves = np.array_split(stream_stack(stream), 2)
    # same scale matrix throughout: segment means agree within sampling noise
    assert np.linalg.norm(halves[0].mean(0) - halves[1].mean(0)) < 0.5


def test_spd_stream_change_moves_the_mean():
    spec = StreamSpec(manifold="spd", p=5, length=800, change_at=400, seed=3)
    stack = stream_stack(gen_spd_stream(spec))
    pre, post = stack[:400].mean(0), stack[400:].mean(0)
    assert np.linalg.norm(pre - post) > 0.0
    # and the normalized sampler concentrates on the scale matrices
    rng = np.random.default_rng(3)
    v_pre = default_wishart_params(rng, 5)
    v_post = default_wishart_params(rng, 5)
    assert np.linalg.norm(pre - v_pre.scale) < np.linalg.norm(pre - v_post.scale)


def test_spd_stream_determinism():
    spec = StreamSpec(manifold="spd", p=4, length=50, change_at=25, seed=11)
    s1 = stream_stack(gen_spd_stream(spec))
    s2 = stream_stack(gen_spd_stream(spec))
    assert np.array_equal(s1, s2)


def test_gen_stream_dispatch_checks_manifold():
    spec = StreamSpec(manifold="spd", p=4, length=10)
    with pytest.raises(ValueError):
        gen_grassmann_stream(spec)


# -- grassmann streams ------------------------------------------------------------------


def test_grassmann_stream_full_scale_valid():
    spec = StreamSpec(manifold="grassmann", p=20, k=5, length=2000, change_at=1500, seed=1)
    stream = gen_grassmann_stream(spec)
    assert len(stream) == 2000
    man = GrassmannManifold(20, 5)
    for pt in stream[::131]:
        man.validate(pt)


def test_high_signal_limit_recovers_mean_subspace():
    # as the mean dominates the unit noise, the subspace approaches span(M)
    rng = np.random.default_rng(5)
    man = GrassmannManifold(8, 2)
    base = default_subspace_params(rng, 8, 2, 1.0).mean
    spec = StreamSpec(
        manifold="grassmann", p=8, k=2, length=5, seed=5,
        pre=SubspaceParams(mean=base * 1e6),
    )
    target = man.point(base)
    for pt in gen_grassmann_stream(spec):
        assert man.distance(pt, target) < 1e-4


def test_pre_post_mean_subspaces_separate():
    spec = StreamSpec(manifold="grassmann", p=20, k=5, length=400, change_at=200, seed=9)
    stream = gen_grassmann_stream(spec)
    man = manifold_for(spec)
    mean_pre = batch_frechet_mean(man, math.inf, stream[:200], tol=1e-6)
    mean_post = batch_frechet_mean(man, math.inf, stream[200:], tol=1e-6)
    assert man.distance(mean_pre, mean_post) > 0.1


def test_grassmann_stream_determinism():
    spec = StreamSpec(manifold="grassmann", p=6, k=2, length=40, seed=13)
    s1 = stream_stack(gen_grassmann_stream(spec))
    s2 = stream_stack(gen_grassmann_stream(spec))
    assert np.array_equal(s1, s2)
