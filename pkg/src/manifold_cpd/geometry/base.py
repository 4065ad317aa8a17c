"""Shared manifold contract used by the centroid trackers and the detector.

Points and tangent vectors are immutable value objects; every geometry
implements the same small operation set (distance, log, exp, retract, inner)
so the tracking and detection code is written once.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

# Module-wide default tolerances; individual tests may override.
SYM_TOL = 1e-10
ORTHO_TOL = 1e-10
HORIZONTAL_TOL = 1e-8
EIG_FLOOR = 1e-12
CUT_LOCUS_TOL = 1e-10


class ValidationError(ValueError):
    """Input fails a manifold membership or tangency check."""


class DegeneratePairError(ValueError):
    """Log map undefined for this pair (cut locus / singular alignment)."""


def _frozen_array(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ManifoldPoint:
    """A point on a manifold: raw matrix plus the tag naming its geometry."""

    data: np.ndarray
    tag: str

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_array(self.data))


@dataclass(frozen=True)
class TangentVector:
    """A tangent matrix attached to its base point."""

    data: np.ndarray
    base: ManifoldPoint

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_array(self.data))


class Manifold(ABC):
    """Operation set every geometry provides.

    ``exp`` is the exact exponential map (used by tests and the batch mean
    oracle); ``retract`` is the cheap second-order approximation used by the
    streaming updates.  All operations are pure functions and thread-safe.
    """

    tag: str
    shape: tuple[int, int]

    # -- contract ---------------------------------------------------------
    @abstractmethod
    def distance(self, x: ManifoldPoint, y: ManifoldPoint) -> float: ...

    @abstractmethod
    def log(self, x: ManifoldPoint, y: ManifoldPoint) -> TangentVector: ...

    @abstractmethod
    def exp(self, x: ManifoldPoint, v: TangentVector) -> ManifoldPoint: ...

    @abstractmethod
    def retract(self, x: ManifoldPoint, v: TangentVector) -> ManifoldPoint: ...

    @abstractmethod
    def inner(self, x: ManifoldPoint, v: TangentVector, w: TangentVector) -> float: ...

    @abstractmethod
    def validate(self, x: ManifoldPoint) -> None:
        """Raise ValidationError unless ``x`` is a valid point."""

    def norm(self, x: ManifoldPoint, v: TangentVector) -> float:
        return math.sqrt(max(self.inner(x, v, v), 0.0))

    # -- construction helpers ----------------------------------------------
    def point(self, data) -> ManifoldPoint:
        return ManifoldPoint(data, self.tag)

    def tangent(self, base: ManifoldPoint, data) -> TangentVector:
        return TangentVector(data, base)

    @abstractmethod
    def random_point(self, rng: np.random.Generator) -> ManifoldPoint: ...

    @abstractmethod
    def random_tangent(
        self, rng: np.random.Generator, x: ManifoldPoint, scale: float = 1.0
    ) -> TangentVector: ...

    # -- shared guards -------------------------------------------------------
    def _check_point(self, x: ManifoldPoint) -> None:
        if x.tag != self.tag:
            raise ValidationError(f"expected a {self.tag} point, got tag {x.tag!r}")
        if x.data.shape != self.shape:
            raise ValidationError(
                f"expected shape {self.shape}, got {x.data.shape}"
            )

    def _check_pair(self, x: ManifoldPoint, y: ManifoldPoint) -> None:
        self._check_point(x)
        self._check_point(y)

    def _check_tangent(self, x: ManifoldPoint, v: TangentVector) -> None:
        self._check_point(x)
        if v.data.shape != self.shape:
            raise ValidationError(
                f"tangent shape {v.data.shape} does not match {self.shape}"
            )
        if not np.array_equal(v.base.data, x.data):
            raise ValidationError("tangent vector is based at a different point")


def karcher_stochastic_gradient(
    ops: Manifold, m: ManifoldPoint, x: ManifoldPoint
) -> TangentVector:
    """Stochastic gradient of the half squared-distance cost: -log_m(x).

    Its norm at ``m`` equals distance(m, x).  Raises DegeneratePairError when
    the log map is undefined for the pair.
    """
    v = ops.log(m, x)
    return TangentVector(-v.data, m)
