"""Huber-weighted centroid machinery.

The robust stochastic gradient is the plain tracking gradient scaled by
min(1, A/d); A = inf recovers the Karcher tracker exactly, so both trackers
share one update path.  A deterministic batch fixed-point solver is provided
as an oracle for the streaming estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry.base import (
    Manifold,
    ManifoldPoint,
    TangentVector,
    karcher_stochastic_gradient,
)


@dataclass(frozen=True)
class HuberConfig:
    """Robustness threshold and SGD step size.

    threshold_a = inf turns the robust tracker into the plain Karcher one.
    """

    threshold_a: float
    step_alpha: float

    def __post_init__(self):
        if not self.threshold_a > 0:
            raise ValueError("threshold_a must be positive (inf allowed)")
        if not 0.0 < self.step_alpha <= 1.0:
            raise ValueError("step_alpha must lie in (0, 1]")


class MeanConvergenceError(RuntimeError):
    """Batch mean iteration did not reach the requested gradient norm."""

    def __init__(self, gradient_norm: float, max_iter: int):
        self.gradient_norm = gradient_norm
        super().__init__(
            f"no convergence after {max_iter} iterations "
            f"(last gradient norm {gradient_norm:.3e})"
        )


def huber_weight(threshold_a: float, dist: float) -> float:
    """min(1, A/d), with the d = 0 case pinned to 1."""
    if dist < 0:
        raise ValueError("distance must be nonnegative")
    if dist <= threshold_a:
        return 1.0
    return threshold_a / dist


def robust_stochastic_gradient(
    ops: Manifold, threshold_a: float, m: ManifoldPoint, x: ManifoldPoint
) -> TangentVector:
    """Tracking gradient scaled down for samples farther than the threshold.

    Equals huber_weight(A, d(m, x)) times the Karcher gradient; its norm never
    exceeds min(d(m, x), A).
    """
    grad = karcher_stochastic_gradient(ops, m, x)
    if math.isinf(threshold_a):
        return grad
    w = huber_weight(threshold_a, ops.norm(m, grad))
    if w == 1.0:
        return grad
    return TangentVector(w * grad.data, m)


def sgd_step(
    ops: Manifold, cfg: HuberConfig, m: ManifoldPoint, x: ManifoldPoint
) -> ManifoldPoint:
    """One streaming update: retract along the negated, scaled gradient."""
    h = robust_stochastic_gradient(ops, cfg.threshold_a, m, x)
    return ops.retract(m, TangentVector(-cfg.step_alpha * h.data, m))


def empirical_cost(
    ops: Manifold,
    threshold_a: float,
    m: ManifoldPoint,
    samples: Sequence[ManifoldPoint],
) -> float:
    """Empirical weighted tracking cost (1/N) sum of 1/2 w(d_i) d_i^2."""
    total = 0.0
    for x in samples:
        d = ops.distance(m, x)
        total += 0.5 * huber_weight(threshold_a, d) * d * d
    return total / len(samples)


def batch_frechet_mean(
    ops: Manifold,
    threshold_a: float,
    samples: Sequence[ManifoldPoint],
    tol: float = 1e-9,
    step: float = 0.5,
    max_iter: int = 10000,
) -> ManifoldPoint:
    """Deterministic full-gradient fixed point of the weighted centroid cost.

    Initialized at the first sample; uses the exact exponential map.  Intended
    as a test oracle, not a streaming component.
    """
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    if not tol > 0:
        raise ValueError("tol must be positive")
    m = samples[0]
    gnorm = math.inf
    for _ in range(max_iter):
        acc = np.zeros(ops.shape)
        for x in samples:
            acc += robust_stochastic_gradient(ops, threshold_a, m, x).data
        grad = TangentVector(acc / len(samples), m)
        gnorm = ops.norm(m, grad)
        if gnorm <= tol:
            return m
        m = ops.exp(m, TangentVector(-step * grad.data, m))
    raise MeanConvergenceError(gnorm, max_iter)
