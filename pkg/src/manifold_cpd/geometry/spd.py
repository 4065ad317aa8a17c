"""Symmetric positive definite matrices under the affine-invariant metric.

All spectral operations route through one primitive (symmetric
eigendecomposition, or a Cholesky factor where that is cheaper); every
update output is symmetrized to suppress round-off drift over long streams.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg.lapack import dtrtrs

from .base import (
    EIG_FLOOR,
    SYM_TOL,
    Manifold,
    ManifoldPoint,
    TangentVector,
    ValidationError,
)

logger = logging.getLogger(__name__)

RETRACT_REPAIR_FLOOR = 1e-10


def sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _check_symmetric(m: np.ndarray, what: str, tol: float = SYM_TOL) -> None:
    if np.max(np.abs(m - m.T)) > tol:
        raise ValidationError(f"{what} is not symmetric within {tol:g}")


class SpdManifold(Manifold):
    """p x p SPD matrices with the affine-invariant geometry.

    distance(a, b) = ||logm(a^{-1/2} b a^{-1/2})||_F
    inner(a, v, w) = trace(a^{-1} v a^{-1} w)
    """

    tag = "spd"

    def __init__(self, p: int):
        if p < 1:
            raise ValueError("p must be at least 1")
        self.p = p
        self.shape = (p, p)

    # -- raw kernels (trusted ndarray inputs) -------------------------------
    def _chol(self, a: np.ndarray) -> np.ndarray:
        try:
            return np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            raise ValidationError("matrix is not positive definite") from None

    def _whiten(self, chol_a: np.ndarray, b: np.ndarray) -> np.ndarray:
        # L^{-1} b L^{-T} for L = chol(a); similar to a^{-1/2} b a^{-1/2}
        t, _ = dtrtrs(chol_a, b, lower=1)
        s, _ = dtrtrs(chol_a, t.T, lower=1)
        return sym(s)

    def _log_raw(self, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
        """Log map together with the geodesic distance it implies."""
        la = self._chol(a)
        w, q = np.linalg.eigh(self._whiten(la, b))
        if w[0] <= 0.0:
            raise ValidationError("second argument is not positive definite")
        lw = np.log(w)
        inner = (q * lw) @ q.T
        v = la @ inner @ la.T
        return sym(v), float(np.linalg.norm(lw))

    def _dist_raw(self, a: np.ndarray, b: np.ndarray) -> float:
        la = self._chol(a)
        w = np.linalg.eigvalsh(self._whiten(la, b))
        if w[0] <= 0.0:
            raise ValidationError("second argument is not positive definite")
        return float(np.linalg.norm(np.log(w)))

    def _exp_raw(self, a: np.ndarray, v: np.ndarray) -> np.ndarray:
        w, q = np.linalg.eigh(a)
        if w[0] <= EIG_FLOOR:
            raise ValidationError("base point is not positive definite")
        s = np.sqrt(w)
        sq = (q * s) @ q.T
        isq = (q / s) @ q.T
        w2, q2 = np.linalg.eigh(sym(isq @ v @ isq))
        e = (q2 * np.exp(w2)) @ q2.T
        return sym(sq @ e @ sq)

    def _retract_raw(self, a: np.ndarray, v: np.ndarray) -> np.ndarray:
        # a + v + 1/2 v a^{-1} v; second-order Taylor of the exponential map.
        # The symmetrized result is PD in exact arithmetic for any symmetric v.
        r = sym(a + v + 0.5 * (v @ np.linalg.solve(a, v)))
        try:
            np.linalg.cholesky(r)
        except np.linalg.LinAlgError:
            w, q = np.linalg.eigh(r)
            r = sym((q * np.maximum(w, RETRACT_REPAIR_FLOOR)) @ q.T)
            logger.warning(
                "retraction left the SPD cone; eigenvalues floored at %g",
                RETRACT_REPAIR_FLOOR,
            )
        return r

    # -- contract ------------------------------------------------------------
    def distance(self, x: ManifoldPoint, y: ManifoldPoint) -> float:
        self._check_pair(x, y)
        _check_symmetric(x.data, "first argument")
        _check_symmetric(y.data, "second argument")
        return self._dist_raw(x.data, y.data)

    def log(self, x: ManifoldPoint, y: ManifoldPoint) -> TangentVector:
        self._check_pair(x, y)
        _check_symmetric(x.data, "first argument")
        _check_symmetric(y.data, "second argument")
        v, _ = self._log_raw(x.data, y.data)
        return TangentVector(v, x)

    def exp(self, x: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
        self._check_tangent(x, v)
        _check_symmetric(v.data, "tangent vector")
        return self.point(self._exp_raw(x.data, v.data))

    def retract(self, x: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
        self._check_tangent(x, v)
        _check_symmetric(v.data, "tangent vector")
        return self.point(self._retract_raw(x.data, v.data))

    def inner(self, x: ManifoldPoint, v: TangentVector, w: TangentVector) -> float:
        self._check_tangent(x, v)
        self._check_tangent(x, w)
        av = np.linalg.solve(x.data, v.data)
        aw = av if w.data is v.data else np.linalg.solve(x.data, w.data)
        return float(np.sum(av * aw.T))

    def validate(self, x: ManifoldPoint) -> None:
        self._check_point(x)
        _check_symmetric(x.data, "point")
        w = np.linalg.eigvalsh(x.data)
        if w[0] <= EIG_FLOOR:
            raise ValidationError(
                f"matrix is not positive definite (min eigenvalue {w[0]:.3e})"
            )

    # -- sampling helpers ------------------------------------------------------
    def random_point(self, rng: np.random.Generator) -> ManifoldPoint:
        q, _ = np.linalg.qr(rng.standard_normal((self.p, self.p)))
        d = np.exp(rng.uniform(-1.0, 1.0, self.p))
        return self.point(sym((q * d) @ q.T))

    def random_tangent(
        self, rng: np.random.Generator, x: ManifoldPoint, scale: float = 1.0
    ) -> TangentVector:
        v = sym(rng.standard_normal((self.p, self.p)))
        t = TangentVector(v, x)
        n = self.norm(x, t)
        return TangentVector(v * (scale / n), x) if n > 0 else t
