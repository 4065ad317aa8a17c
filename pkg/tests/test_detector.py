"""Detector state machine, policies, baseline, and the batched fast path."""

import math

import numpy as np
import pytest

from manifold_cpd._batch import two_tracker_statistics
from manifold_cpd.centroid import HuberConfig
from manifold_cpd.datagen import StreamSpec, gen_stream, manifold_for, stream_stack
from manifold_cpd.detector import (
    BaselineConfig,
    DegenerateStreamError,
    DetectorConfig,
    baseline_init,
    baseline_update,
    detector_init,
    detector_update,
    run_baseline,
    run_detector,
)
from manifold_cpd.geometry import GrassmannManifold, SpdManifold


def _cfg(xi=1.0, a=1.0, alpha=0.05, **kw):
    return DetectorConfig(huber=HuberConfig(a, alpha), threshold_xi=xi, **kw)


# -- configuration ---------------------------------------------------------------


def test_infinite_threshold_a_rejected():
    with pytest.raises(ValueError, match="identically zero"):
        DetectorConfig(huber=HuberConfig(math.inf, 0.05), threshold_xi=1.0)


def test_nonpositive_xi_rejected():
    with pytest.raises(ValueError):
        _cfg(xi=0.0)


def test_baseline_config_ordering():
    BaselineConfig(0.1, 0.01, threshold=1.0)
    with pytest.raises(ValueError):
        BaselineConfig(0.01, 0.1, threshold=1.0)
    with pytest.raises(ValueError):
        BaselineConfig(0.05, 0.05, threshold=1.0)


# -- initialization ----------------------------------------------------------------


def test_init_spd_identity():
    man = SpdManifold(3)
    x0 = man.point(np.eye(3))
    state = detector_init(man, _cfg(), x0)
    assert state.g == 0.0
    assert state.t == 0
    assert not state.alarm
    assert np.array_equal(state.m.data, np.eye(3))
    assert np.array_equal(state.m_rho.data, np.eye(3))


def test_init_grassmann_line():
    man = GrassmannManifold(3, 1)
    e1 = man.point(np.array([[1.0], [0.0], [0.0]]))
    state = detector_init(man, _cfg(a=0.05), e1)
    assert state.g == 0.0
    assert np.array_equal(state.m.data, e1.data)


def test_init_validates_point():
    man = SpdManifold(3)
    from manifold_cpd.geometry import ValidationError

    with pytest.raises(ValidationError):
        detector_init(man, _cfg(), man.point(np.diag([1.0, -1.0, 1.0])))


# -- update behavior ------------------------------------------------------------------


def test_constant_stream_never_flags(rng):
    man = SpdManifold(3)
    x0 = man.random_point(rng)
    cfg = _cfg(xi=1e-6)
    state = detector_init(man, cfg, x0)
    for _ in range(50):
        state, flagged = detector_update(man, state, cfg, x0)
        assert not flagged
        assert state.g <= 1e-12
    assert state.t == 50


def test_statistic_matches_recomputed_distance(rng):
    spec = StreamSpec(manifold="spd", p=4, length=40, seed=5)
    stream = gen_stream(spec)
    man = manifold_for(spec)
    cfg = _cfg(xi=math.inf)
    state = detector_init(man, cfg, stream[0])
    for x in stream[1:]:
        state, _ = detector_update(man, state, cfg, x)
        assert state.g == pytest.approx(
            man.distance(state.m, state.m_rho), abs=1e-12
        )


def test_step_counter_increments_by_one(rng):
    spec = StreamSpec(manifold="grassmann", p=5, k=2, length=20, seed=2)
    stream = gen_stream(spec)
    man = manifold_for(spec)
    cfg = _cfg(a=0.05, xi=math.inf)
    state = detector_init(man, cfg, stream[0])
    for i, x in enumerate(stream[1:], start=1):
        state, _ = detector_update(man, state, cfg, x)
        assert state.t == i


def test_determinism(rng):
    spec = StreamSpec(manifold="spd", p=4, length=120, change_at=60, seed=9)
    stream = gen_stream(spec)
    man = manifold_for(spec)
    cfg = _cfg(xi=0.6)
    r1 = run_detector(man, cfg, stream)
    r2 = run_detector(man, cfg, stream)
    assert r1.flags == r2.flags
    assert np.array_equal(r1.statistics, r2.statistics)


def test_reset_policy_reinitializes_and_applies_dead_time(rng):
    spec = StreamSpec(manifold="spd", p=4, length=200, change_at=30, seed=13)
    stream = gen_stream(spec)
    man = manifold_for(spec)
    cfg = _cfg(xi=0.25, dead_time=40)
    state = detector_init(man, cfg, stream[0])
    first_flag = None
    for x in stream[1:]:
        prev_t = state.t
        state, flagged = detector_update(man, state, cfg, x)
        if flagged and first_flag is None:
            first_flag = state.t
            # trackers re-initialized at the flagged sample
            assert np.array_equal(state.m.data, x.data)
            assert np.array_equal(state.m_rho.data, x.data)
            assert state.g == 0.0
            assert state.dead_until == first_flag + 40
        elif first_flag is not None and state.t <= first_flag + 40:
            assert not flagged
    assert first_flag is not None


def test_halt_policy_freezes_after_first_flag(rng):
    spec = StreamSpec(manifold="spd", p=4, length=200, change_at=30, seed=13)
    stream = gen_stream(spec)
    man = manifold_for(spec)
    cfg = _cfg(xi=0.25, post_alarm="halt")
    result = run_detector(man, cfg, stream)
    assert len(result.flags) == 1
    t0 = result.flags[0]
    frozen = result.statistics[t0 - 1]
    assert np.all(result.statistics[t0:] == frozen)


def test_trace_matches_flags(rng):
    spec = StreamSpec(manifold="spd", p=3, length=80, change_at=40, seed=21)
    stream = gen_stream(spec)
    man = manifold_for(spec)
    result = run_detector(man, _cfg(xi=0.45), stream)
    trace = list(result.trace())
    assert [t for t, _, f in trace if f] == result.flags
    assert len(trace) == len(stream) - 1


# -- baseline ---------------------------------------------------------------------------


def test_baseline_constant_stream(rng):
    man = SpdManifold(3)
    x0 = man.random_point(rng)
    cfg = BaselineConfig(0.1, 0.01, threshold=1e-9)
    state = baseline_init(man, cfg, x0)
    for _ in range(20):
        state, flagged = baseline_update(man, state, cfg, x0)
        assert not flagged
        assert state.g <= 1e-12


def test_equal_step_sizes_mathematically_degenerate(rng):
    # the config rejects alpha_fast == alpha_slow; the underlying fact:
    # two identical Karcher trackers never separate
    spec = StreamSpec(manifold="spd", p=4, length=150, seed=17)
    stack = stream_stack(gen_stream(spec))[None]
    g, _ = two_tracker_statistics("spd", stack, (0.05, math.inf), (0.05, math.inf))
    assert np.max(g) <= 1e-12


def test_baseline_statistic_rises_after_change(rng):
    spec = StreamSpec(manifold="spd", p=6, length=600, change_at=400, seed=23)
    stream = gen_stream(spec)
    man = manifold_for(spec)
    cfg = BaselineConfig(0.1, 0.01, threshold=math.inf, post_alarm="halt")
    result = run_baseline(man, cfg, stream)
    pre = result.statistics[300:399].mean()
    post = result.statistics[405:500].max()
    assert post > pre


def test_baseline_determinism(rng):
    spec = StreamSpec(manifold="grassmann", p=6, k=2, length=100, seed=31)
    stream = gen_stream(spec)
    man = manifold_for(spec)
    cfg = BaselineConfig(0.1, 0.01, threshold=0.5)
    assert run_baseline(man, cfg, stream).flags == run_baseline(man, cfg, stream).flags


def test_null_statistic_percentile_stabilizes():
    # basis for threshold calibration: on change-free streams the upper tail
    # of g is stationary over t in [500, 1500]
    stacks = np.stack(
        [
            stream_stack(
                gen_stream(StreamSpec(manifold="spd", p=10, length=1500, seed=s))
            )
            for s in range(6)
        ]
    )
    g, _ = two_tracker_statistics("spd", stacks, (0.05, math.inf), (0.05, 1.0))
    for r in range(g.shape[0]):
        first = np.percentile(g[r, 499:999], 99)
        second = np.percentile(g[r, 999:1499], 99)
        assert abs(first - second) / max(first, second) < 0.2


# -- degenerate samples --------------------------------------------------------------------


def _orthogonal_complement_point(man, x, rng):
    # subspace orthogonal to x: log(x, y) is undefined
    u, s, _ = np.linalg.svd(np.eye(man.p) - x.data @ x.data.T)
    return man.point(u[:, : man.k])


def test_degenerate_sample_skips_tracker_and_counts(rng):
    man = GrassmannManifold(4, 1)
    x0 = man.point(np.array([[1.0], [0.0], [0.0], [0.0]]))
    bad = _orthogonal_complement_point(man, x0, rng)
    cfg = _cfg(a=0.05, xi=math.inf)
    state = detector_init(man, cfg, x0)
    state, flagged = detector_update(man, state, cfg, bad)
    assert state.degenerate_skips == 1
    # both trackers were at x0, both skip: statistic unchanged
    assert state.g == 0.0
    assert np.array_equal(state.m.data, x0.data)


def test_too_many_degenerates_abort(rng):
    man = GrassmannManifold(4, 1)
    x0 = man.point(np.array([[1.0], [0.0], [0.0], [0.0]]))
    bad = _orthogonal_complement_point(man, x0, rng)
    stream = [x0] + [bad] * 30
    with pytest.raises(DegenerateStreamError):
        run_detector(man, _cfg(a=0.05, xi=math.inf), stream)


# -- batched engine equivalence ----------------------------------------------------------


@pytest.mark.parametrize(
    "spec,a",
    [
        (StreamSpec(manifold="spd", p=5, length=80, change_at=40, seed=7), 1.0),
        (
            StreamSpec(manifold="grassmann", p=6, k=2, length=80, change_at=40, seed=7),
            0.05,
        ),
    ],
    ids=["spd", "grassmann"],
)
def test_batched_engine_matches_detector(spec, a):
    stream = gen_stream(spec)
    man = manifold_for(spec)
    cfg = DetectorConfig(
        huber=HuberConfig(a, 0.05), threshold_xi=math.inf, post_alarm="halt"
    )
    rich = run_detector(man, cfg, stream)
    g, skips = two_tracker_statistics(
        spec.manifold, stream_stack(stream)[None], (0.05, math.inf), (0.05, a)
    )
    assert np.allclose(rich.statistics, g[0], atol=1e-9)
    assert skips[0] == 0


def test_batched_engine_matches_baseline():
    spec = StreamSpec(manifold="spd", p=5, length=80, seed=11)
    stream = gen_stream(spec)
    man = manifold_for(spec)
    cfg = BaselineConfig(0.1, 0.01, threshold=math.inf, post_alarm="halt")
    rich = run_baseline(man, cfg, stream)
    g, _ = two_tracker_statistics(
        "spd", stream_stack(stream)[None], (0.1, math.inf), (0.01, math.inf)
    )
    assert np.allclose(rich.statistics, g[0], atol=1e-9)
