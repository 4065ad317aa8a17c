"""Online two-tracker change-point detection.

The proposed detector runs a plain Karcher tracker next to a Huber-robust one
with the same step size and flags when their geodesic separation exceeds a
threshold.  The baseline detector runs two Karcher trackers with distinct
step sizes, the comparison method used in the experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, Union

import numpy as np

from .centroid import HuberConfig, sgd_step
from .geometry.base import DegeneratePairError, Manifold, ManifoldPoint


class DegenerateStreamError(RuntimeError):
    """Too many cut-locus samples; the run is not trustworthy."""


@dataclass(frozen=True)
class DetectorConfig:
    """Threshold and tracker settings for the robust-vs-plain detector.

    post_alarm: "reset" re-initializes both trackers at the flagged sample and
    suppresses flags for ``dead_time`` steps (multi-change streams); "halt"
    freezes the detector after the first flag (single-change experiments).
    """

    huber: HuberConfig
    threshold_xi: float
    post_alarm: str = "reset"
    dead_time: int = 50

    def __post_init__(self):
        if math.isinf(self.huber.threshold_a):
            raise ValueError(
                "threshold_a=inf makes the robust tracker identical to the "
                "plain one, so the statistic is identically zero; "
                "use a finite threshold_a"
            )
        if not self.threshold_xi > 0:
            raise ValueError("threshold_xi must be positive")
        if self.post_alarm not in ("reset", "halt"):
            raise ValueError("post_alarm must be 'reset' or 'halt'")
        if self.dead_time < 0:
            raise ValueError("dead_time must be >= 0")


@dataclass(frozen=True)
class DetectorState:
    m: ManifoldPoint
    m_rho: ManifoldPoint
    t: int
    g: float
    alarm: bool
    dead_until: int = -1
    degenerate_skips: int = 0


@dataclass(frozen=True)
class BaselineConfig:
    """Two Karcher trackers with distinct step sizes plus a flag threshold."""

    alpha_fast: float
    alpha_slow: float
    threshold: float
    post_alarm: str = "reset"
    dead_time: int = 50

    def __post_init__(self):
        if not 0.0 < self.alpha_slow < self.alpha_fast <= 1.0:
            raise ValueError("need 0 < alpha_slow < alpha_fast <= 1")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.post_alarm not in ("reset", "halt"):
            raise ValueError("post_alarm must be 'reset' or 'halt'")
        if self.dead_time < 0:
            raise ValueError("dead_time must be >= 0")


@dataclass(frozen=True)
class BaselineState:
    m_fast: ManifoldPoint
    m_slow: ManifoldPoint
    t: int
    g: float
    alarm: bool
    dead_until: int = -1
    degenerate_skips: int = 0


def detector_init(
    ops: Manifold, cfg: DetectorConfig, x0: ManifoldPoint
) -> DetectorState:
    ops.validate(x0)
    return DetectorState(m=x0, m_rho=x0, t=0, g=0.0, alarm=False)


def baseline_init(
    ops: Manifold, cfg: BaselineConfig, x0: ManifoldPoint
) -> BaselineState:
    ops.validate(x0)
    return BaselineState(m_fast=x0, m_slow=x0, t=0, g=0.0, alarm=False)


def _tracker_step(
    ops: Manifold,
    threshold_a: float,
    alpha: float,
    m: ManifoldPoint,
    x: ManifoldPoint,
) -> tuple[ManifoldPoint, bool]:
    """One SGD step; a cut-locus sample leaves the tracker unchanged."""
    try:
        return sgd_step(ops, HuberConfig(threshold_a, alpha), m, x), False
    except DegeneratePairError:
        return m, True


def _detector_step(
    ops: Manifold, state: DetectorState, cfg: DetectorConfig, x: ManifoldPoint
) -> tuple[DetectorState, bool, float]:
    t = state.t + 1
    if cfg.post_alarm == "halt" and state.alarm:
        return replace(state, t=t), False, state.g
    alpha = cfg.huber.step_alpha
    m, sk1 = _tracker_step(ops, math.inf, alpha, state.m, x)
    m_rho, sk2 = _tracker_step(ops, cfg.huber.threshold_a, alpha, state.m_rho, x)
    skips = state.degenerate_skips + (1 if (sk1 or sk2) else 0)
    g = ops.distance(m, m_rho)
    flagged = g > cfg.threshold_xi and t > state.dead_until
    if flagged and cfg.post_alarm == "reset":
        new = DetectorState(
            m=x,
            m_rho=x,
            t=t,
            g=0.0,
            alarm=True,
            dead_until=t + cfg.dead_time,
            degenerate_skips=skips,
        )
    else:
        new = DetectorState(
            m=m,
            m_rho=m_rho,
            t=t,
            g=g,
            alarm=state.alarm or flagged,
            dead_until=state.dead_until,
            degenerate_skips=skips,
        )
    return new, flagged, g


def detector_update(
    ops: Manifold, state: DetectorState, cfg: DetectorConfig, x: ManifoldPoint
) -> tuple[DetectorState, bool]:
    """Consume one observation; returns the new state and whether it flagged."""
    new, flagged, _ = _detector_step(ops, state, cfg, x)
    return new, flagged


def _baseline_step(
    ops: Manifold, state: BaselineState, cfg: BaselineConfig, x: ManifoldPoint
) -> tuple[BaselineState, bool, float]:
    t = state.t + 1
    if cfg.post_alarm == "halt" and state.alarm:
        return replace(state, t=t), False, state.g
    m_fast, sk1 = _tracker_step(ops, math.inf, cfg.alpha_fast, state.m_fast, x)
    m_slow, sk2 = _tracker_step(ops, math.inf, cfg.alpha_slow, state.m_slow, x)
    skips = state.degenerate_skips + (1 if (sk1 or sk2) else 0)
    g = ops.distance(m_fast, m_slow)
    flagged = g > cfg.threshold and t > state.dead_until
    if flagged and cfg.post_alarm == "reset":
        new = BaselineState(
            m_fast=x,
            m_slow=x,
            t=t,
            g=0.0,
            alarm=True,
            dead_until=t + cfg.dead_time,
            degenerate_skips=skips,
        )
    else:
        new = BaselineState(
            m_fast=m_fast,
            m_slow=m_slow,
            t=t,
            g=g,
            alarm=state.alarm or flagged,
            dead_until=state.dead_until,
            degenerate_skips=skips,
        )
    return new, flagged, g


def baseline_update(
    ops: Manifold, state: BaselineState, cfg: BaselineConfig, x: ManifoldPoint
) -> tuple[BaselineState, bool]:
    new, flagged, _ = _baseline_step(ops, state, cfg, x)
    return new, flagged


@dataclass
class RunResult:
    """Trace of one run: flagged steps and the observed statistic per step.

    ``statistics[i]`` is the statistic computed at step t = i + 1, before any
    post-alarm reset zeroed the state.
    """

    flags: list[int]
    statistics: np.ndarray
    state: Union[DetectorState, BaselineState]

    def trace(self) -> Iterable[tuple[int, float, bool]]:
        flagged = set(self.flags)
        for i, g in enumerate(self.statistics):
            t = i + 1
            yield t, float(g), t in flagged


def _check_degeneracy(skips: int, t: int) -> None:
    if skips > max(2.0, 0.001 * t):
        raise DegenerateStreamError(
            f"{skips} degenerate samples in {t} steps (> 0.1%); aborting run"
        )


def run_detector(
    ops: Manifold, cfg: DetectorConfig, stream: Sequence[ManifoldPoint]
) -> RunResult:
    """Run the detector over a full stream; the first sample initializes."""
    if len(stream) < 2:
        raise ValueError("stream must contain at least two samples")
    state = detector_init(ops, cfg, stream[0])
    flags: list[int] = []
    stats = np.empty(len(stream) - 1)
    for i, x in enumerate(stream[1:]):
        state, flagged, g = _detector_step(ops, state, cfg, x)
        stats[i] = g
        if flagged:
            flags.append(state.t)
        _check_degeneracy(state.degenerate_skips, state.t)
    return RunResult(flags, stats, state)


def run_baseline(
    ops: Manifold, cfg: BaselineConfig, stream: Sequence[ManifoldPoint]
) -> RunResult:
    if len(stream) < 2:
        raise ValueError("stream must contain at least two samples")
    state = baseline_init(ops, cfg, stream[0])
    flags: list[int] = []
    stats = np.empty(len(stream) - 1)
    for i, x in enumerate(stream[1:]):
        state, flagged, g = _baseline_step(ops, state, cfg, x)
        stats[i] = g
        if flagged:
            flags.append(state.t)
        _check_degeneracy(state.degenerate_skips, state.t)
    return RunResult(flags, stats, state)
