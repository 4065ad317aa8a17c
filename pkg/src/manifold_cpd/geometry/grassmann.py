"""k-dimensional subspaces of R^p represented by orthonormal p x k matrices.

Distances come from principal angles; log/exp use the thin-SVD closed forms;
the retraction is the polar map.  All outputs are re-orthonormalized with a
sign-fixed QR so representatives stay stable over long streams.
"""

from __future__ import annotations

import numpy as np

from .base import (
    CUT_LOCUS_TOL,
    HORIZONTAL_TOL,
    ORTHO_TOL,
    DegeneratePairError,
    Manifold,
    ManifoldPoint,
    TangentVector,
    ValidationError,
)

# singular values this close to 1 map to a principal angle of exactly 0
ANGLE_SNAP_TOL = 1e-12


def qr_fixed(m: np.ndarray) -> np.ndarray:
    """Thin QR factor with the R diagonal forced positive (deterministic)."""
    q, r = np.linalg.qr(m)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def principal_angles(cross_singular_values: np.ndarray) -> np.ndarray:
    s = np.clip(cross_singular_values, 0.0, 1.0)
    theta = np.arccos(s)
    theta[s >= 1.0 - ANGLE_SNAP_TOL] = 0.0
    return theta


class GrassmannManifold(Manifold):
    """Gr(p, k) with the canonical (Frobenius) metric on horizontal vectors."""

    tag = "grassmann"

    def __init__(self, p: int, k: int):
        if not 1 <= k < p:
            raise ValueError("need 1 <= k < p")
        self.p = p
        self.k = k
        self.shape = (p, k)

    # -- raw kernels ---------------------------------------------------------
    def _dist_raw(self, a: np.ndarray, b: np.ndarray) -> float:
        s = np.linalg.svd(a.T @ b, compute_uv=False)
        return float(np.linalg.norm(principal_angles(s)))

    def _log_raw(self, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
        m = a.T @ b
        smin = np.linalg.svd(m, compute_uv=False)[-1]
        if smin < CUT_LOCUS_TOL:
            raise DegeneratePairError(
                f"subspaces contain orthogonal directions (min cross singular "
                f"value {smin:.3e}); log map undefined"
            )
        # B = (I - a a^T) b m^{-1}, then v = W atan(S) V^T from B = W S V^T
        bmat = np.linalg.solve(m.T, (b - a @ m).T).T
        w, s, vt = np.linalg.svd(bmat, full_matrices=False)
        theta = np.arctan(s)
        v = (w * theta) @ vt
        return v, float(np.linalg.norm(theta))

    def _exp_raw(self, a: np.ndarray, v: np.ndarray) -> np.ndarray:
        w, s, vt = np.linalg.svd(v, full_matrices=False)
        r = (a @ vt.T) * np.cos(s) @ vt + (w * np.sin(s)) @ vt
        return qr_fixed(r)

    def _retract_raw(self, a: np.ndarray, v: np.ndarray) -> np.ndarray:
        # polar retraction: (a + v)(I + v^T v)^{-1/2}
        w, q = np.linalg.eigh(v.T @ v)
        inv_sqrt = (q / np.sqrt(1.0 + np.maximum(w, 0.0))) @ q.T
        return qr_fixed((a + v) @ inv_sqrt)

    def _check_horizontal(self, a: np.ndarray, v: np.ndarray) -> None:
        if np.linalg.norm(a.T @ v) > HORIZONTAL_TOL:
            raise ValidationError(
                f"tangent vector is not horizontal (||U^T v|| > {HORIZONTAL_TOL:g})"
            )

    # -- contract ------------------------------------------------------------
    def distance(self, x: ManifoldPoint, y: ManifoldPoint) -> float:
        self._check_pair(x, y)
        self._check_orthonormal(x.data)
        self._check_orthonormal(y.data)
        return self._dist_raw(x.data, y.data)

    def log(self, x: ManifoldPoint, y: ManifoldPoint) -> TangentVector:
        self._check_pair(x, y)
        self._check_orthonormal(x.data)
        self._check_orthonormal(y.data)
        v, _ = self._log_raw(x.data, y.data)
        return TangentVector(v, x)

    def exp(self, x: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
        self._check_tangent(x, v)
        self._check_horizontal(x.data, v.data)
        return self.point(self._exp_raw(x.data, v.data))

    def retract(self, x: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
        self._check_tangent(x, v)
        self._check_horizontal(x.data, v.data)
        return self.point(self._retract_raw(x.data, v.data))

    def inner(self, x: ManifoldPoint, v: TangentVector, w: TangentVector) -> float:
        self._check_tangent(x, v)
        self._check_tangent(x, w)
        return float(np.sum(v.data * w.data))

    def validate(self, x: ManifoldPoint) -> None:
        self._check_point(x)
        self._check_orthonormal(x.data)

    def _check_orthonormal(self, u: np.ndarray) -> None:
        gram_defect = np.linalg.norm(u.T @ u - np.eye(self.k))
        if gram_defect > ORTHO_TOL:
            raise ValidationError(
                f"columns are not orthonormal (||U^T U - I|| = {gram_defect:.3e})"
            )

    # -- sampling helpers ------------------------------------------------------
    def random_point(self, rng: np.random.Generator) -> ManifoldPoint:
        return self.point(qr_fixed(rng.standard_normal(self.shape)))

    def random_tangent(
        self, rng: np.random.Generator, x: ManifoldPoint, scale: float = 1.0
    ) -> TangentVector:
        g = rng.standard_normal(self.shape)
        h = g - x.data @ (x.data.T @ g)
        n = np.linalg.norm(h)
        return TangentVector(h * (scale / n) if n > 0 else h, x)
