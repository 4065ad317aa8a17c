"""Independent oracles used by the tests.

These deliberately route through different algorithms than the package
(scipy's Schur-based matrix functions, scipy's principal-angle routine) so
round-trip and distance checks do not share a code path with what they test.
"""

import numpy as np
import scipy.linalg

from manifold_cpd.geometry.base import TangentVector


def spd_distance_oracle(a: np.ndarray, b: np.ndarray) -> float:
    """Affine-invariant distance from the eigenvalues of a^{-1/2} b a^{-1/2}."""
    isq = np.linalg.inv(scipy.linalg.sqrtm(a))
    w = np.linalg.eigvalsh(isq @ b @ isq)
    return float(np.linalg.norm(np.log(w)))


def spd_log_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    sq = scipy.linalg.sqrtm(a)
    isq = np.linalg.inv(sq)
    return sq @ scipy.linalg.logm(isq @ b @ isq) @ sq


def spd_exp_oracle(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    sq = scipy.linalg.sqrtm(a)
    isq = np.linalg.inv(sq)
    return sq @ scipy.linalg.expm(isq @ v @ isq) @ sq


def spd_midpoint_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return spd_exp_oracle(a, 0.5 * spd_log_oracle(a, b))


def gr_distance_oracle(a: np.ndarray, b: np.ndarray) -> float:
    """Principal-angle distance via scipy (accurate for tiny angles)."""
    return float(np.linalg.norm(scipy.linalg.subspace_angles(a, b)))


def fine_distance(manifold, x, y) -> float:
    """Distance measure able to resolve far-below-tolerance separations.

    The packaged Grassmann distance snaps near-identical subspaces to exactly
    zero, which is correct for detection but floors the retraction-order
    measurement; use scipy's small-angle-accurate routine there instead.
    """
    if manifold.tag == "grassmann":
        return gr_distance_oracle(x.data, y.data)
    return manifold.distance(x, y)


def retraction_slope(manifold, x, v, ts=None) -> float:
    """Log-log slope of distance(retract(x, tv), exp(x, tv)) against t."""
    if ts is None:
        ts = np.geomspace(1e-3, 1e-1, 6)
    ds = []
    for t in ts:
        tv = TangentVector(t * v.data, x)
        ds.append(fine_distance(manifold, manifold.retract(x, tv), manifold.exp(x, tv)))
    return float(np.polyfit(np.log(ts), np.log(ds), 1)[0])


def directional_derivative_gap(manifold, m, x, v, t=1e-6):
    """Forward difference of 1/2 d^2(., x) along retract(m, tv) vs the
    gradient pairing inner(m, grad, v).

    Returns (gap, scale): the check passes when gap <= rel * scale, where the
    scale is max(|inner|, ||grad|| ||v||) so 'relative' stays meaningful when
    the directional derivative is near zero.
    """
    from manifold_cpd.geometry import karcher_stochastic_gradient

    grad = karcher_stochastic_gradient(manifold, m, x)
    ip = manifold.inner(m, grad, v)
    stepped = manifold.retract(m, TangentVector(t * v.data, m))
    fd = (
        0.5 * manifold.distance(stepped, x) ** 2
        - 0.5 * manifold.distance(m, x) ** 2
    ) / t
    scale = max(abs(ip), manifold.norm(m, grad) * manifold.norm(m, v))
    return abs(fd - ip), scale
