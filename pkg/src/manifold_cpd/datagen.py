"""Synthetic stream generators for both geometries.

SPD streams are normalized Wishart draws (expected value equals the scale
matrix); Grassmann streams are dominant subspaces of a noisy low-rank matrix.
A change point swaps the distribution parameters at a given index: samples
with index >= change_at come from the post-change parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .geometry.base import ManifoldPoint, _frozen_array
from .geometry.grassmann import GrassmannManifold, qr_fixed
from .geometry.spd import SpdManifold, sym

DEGENERATE_SVD_TOL = 1e-12


@dataclass(frozen=True)
class WishartParams:
    """Scale matrix and degrees of freedom of the covariance sampler."""

    scale: np.ndarray
    dof: int

    def __post_init__(self):
        object.__setattr__(self, "scale", _frozen_array(self.scale))
        if self.scale.ndim != 2 or self.scale.shape[0] != self.scale.shape[1]:
            raise ValueError("scale must be a square matrix")
        if self.dof < self.scale.shape[0]:
            raise ValueError("dof must be at least the matrix dimension")


@dataclass(frozen=True)
class SubspaceParams:
    """Mean of the noisy matrix whose dominant subspace is observed."""

    mean: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen_array(self.mean))
        if self.mean.ndim != 2:
            raise ValueError("mean must be a p x k matrix")


StreamParams = Union[WishartParams, SubspaceParams]


@dataclass(frozen=True)
class StreamSpec:
    """Declarative description of one synthetic stream.

    When pre/post parameters are omitted they are drawn deterministically from
    the seed (random well-conditioned Wishart scales; random scaled orthonormal
    means), so a (spec, seed) pair fully determines the stream.
    """

    manifold: str
    p: int
    k: int = 0
    length: int = 2000
    change_at: Optional[int] = None
    seed: int = 0
    pre: Optional[StreamParams] = None
    post: Optional[StreamParams] = None
    normalize: bool = True
    mean_scale: float = 3.0

    def __post_init__(self):
        if self.manifold not in ("spd", "grassmann"):
            raise ValueError(f"unknown manifold {self.manifold!r}")
        if self.p < 1:
            raise ValueError("p must be positive")
        if self.manifold == "grassmann" and not 1 <= self.k < self.p:
            raise ValueError("grassmann streams need 1 <= k < p")
        if self.length < 1:
            raise ValueError("length must be positive")
        if self.change_at is not None and not 0 < self.change_at < self.length:
            raise ValueError("change_at must satisfy 0 < change_at < length")
        for params in (self.pre, self.post):
            if params is None:
                continue
            if self.manifold == "spd":
                if not isinstance(params, WishartParams):
                    raise ValueError("spd streams take WishartParams")
                if params.scale.shape != (self.p, self.p):
                    raise ValueError("scale matrix dimension mismatch")
            else:
                if not isinstance(params, SubspaceParams):
                    raise ValueError("grassmann streams take SubspaceParams")
                if params.mean.shape != (self.p, self.k):
                    raise ValueError("mean matrix dimension mismatch")


def manifold_for(spec: StreamSpec):
    if spec.manifold == "spd":
        return SpdManifold(spec.p)
    return GrassmannManifold(spec.p, spec.k)


def random_orthogonal(rng: np.random.Generator, p: int) -> np.ndarray:
    return qr_fixed(rng.standard_normal((p, p)))


def default_wishart_params(rng: np.random.Generator, p: int) -> WishartParams:
    """Well-conditioned random scale: rotated log-uniform eigenvalues in [1/2, 2]."""
    q = random_orthogonal(rng, p)
    d = np.exp(rng.uniform(np.log(0.5), np.log(2.0), p))
    return WishartParams(scale=sym((q * d) @ q.T), dof=p + 2)


def default_subspace_params(
    rng: np.random.Generator, p: int, k: int, scale: float
) -> SubspaceParams:
    return SubspaceParams(mean=qr_fixed(rng.standard_normal((p, k))) * scale)


def sample_wishart(
    rng: np.random.Generator,
    scale: np.ndarray,
    dof: int,
    normalize: bool = True,
) -> ManifoldPoint:
    """One Wishart draw: sum of dof outer products of N(0, scale) vectors.

    With normalize=True the draw is divided by dof so its expected value is
    the scale matrix itself.
    """
    p = scale.shape[0]
    if dof < p:
        raise ValueError("dof must be >= matrix dimension (rank deficiency)")
    z = rng.standard_normal((dof, p)) @ np.linalg.cholesky(scale).T
    s = z.T @ z
    if normalize:
        s = s / dof
    return ManifoldPoint(sym(s), "spd")


def _wishart_block(
    rng: np.random.Generator, params: WishartParams, n: int, normalize: bool
) -> list[np.ndarray]:
    p = params.scale.shape[0]
    chol = np.linalg.cholesky(params.scale)
    z = rng.standard_normal((n, params.dof, p)) @ chol.T
    s = np.einsum("tdi,tdj->tij", z, z)
    if normalize:
        s /= params.dof
    return [sym(s[i]) for i in range(n)]


def gen_spd_stream(spec: StreamSpec) -> list[ManifoldPoint]:
    if spec.manifold != "spd":
        raise ValueError("spec does not describe an spd stream")
    rng = np.random.default_rng(spec.seed)
    pre = spec.pre or default_wishart_params(rng, spec.p)
    mats: list[np.ndarray]
    if spec.change_at is None:
        mats = _wishart_block(rng, pre, spec.length, spec.normalize)
    else:
        post = spec.post or default_wishart_params(rng, spec.p)
        mats = _wishart_block(rng, pre, spec.change_at, spec.normalize)
        mats += _wishart_block(
            rng, post, spec.length - spec.change_at, spec.normalize
        )
    return [ManifoldPoint(m, "spd") for m in mats]


def _subspace_block(
    rng: np.random.Generator,
    params: SubspaceParams,
    n: int,
    degenerate_budget: int,
) -> list[np.ndarray]:
    z = params.mean[None, :, :] + rng.standard_normal((n,) + params.mean.shape)
    u, s, _ = np.linalg.svd(z, full_matrices=False)
    out = []
    resamples = 0
    for i in range(n):
        ui, si = u[i], s[i]
        while si[-1] <= DEGENERATE_SVD_TOL * max(si[0], 1.0):
            resamples += 1
            if resamples > degenerate_budget:
                raise RuntimeError(
                    "too many rank-deficient draws (> 0.1% of the stream)"
                )
            zi = params.mean + rng.standard_normal(params.mean.shape)
            ui, si, _ = np.linalg.svd(zi, full_matrices=False)
        out.append(ui)
    return out


def gen_grassmann_stream(spec: StreamSpec) -> list[ManifoldPoint]:
    if spec.manifold != "grassmann":
        raise ValueError("spec does not describe a grassmann stream")
    rng = np.random.default_rng(spec.seed)
    pre = spec.pre or default_subspace_params(rng, spec.p, spec.k, spec.mean_scale)
    budget = max(2, int(0.001 * spec.length))
    if spec.change_at is None:
        mats = _subspace_block(rng, pre, spec.length, budget)
    else:
        post = spec.post or default_subspace_params(
            rng, spec.p, spec.k, spec.mean_scale
        )
        mats = _subspace_block(rng, pre, spec.change_at, budget)
        mats += _subspace_block(rng, post, spec.length - spec.change_at, budget)
    return [ManifoldPoint(u, "grassmann") for u in mats]


def gen_stream(spec: StreamSpec) -> list[ManifoldPoint]:
    if spec.manifold == "spd":
        return gen_spd_stream(spec)
    return gen_grassmann_stream(spec)


def resolve_params(spec: StreamSpec) -> StreamSpec:
    """Pin the spec's distribution parameters, drawing any defaults once.

    Monte Carlo sweeps re-seed the returned spec per run so every run sees the
    same pre/post distributions and only the sampling noise varies.
    """
    from dataclasses import replace

    rng = np.random.default_rng(spec.seed)
    if spec.manifold == "spd":
        pre = spec.pre or default_wishart_params(rng, spec.p)
        post = spec.post
        if spec.change_at is not None and post is None:
            post = default_wishart_params(rng, spec.p)
    else:
        pre = spec.pre or default_subspace_params(
            rng, spec.p, spec.k, spec.mean_scale
        )
        post = spec.post
        if spec.change_at is not None and post is None:
            post = default_subspace_params(rng, spec.p, spec.k, spec.mean_scale)
    return replace(spec, pre=pre, post=post)


def stream_stack(points: list[ManifoldPoint]) -> np.ndarray:
    """Stack a stream into one (T, ...) array for the batched engines."""
    return np.stack([pt.data for pt in points])


def spd_change_pair(
    seed: int, p: int, delta: float, dof: Optional[int] = None
) -> tuple[WishartParams, WishartParams]:
    """Wishart scale pair at a controlled geodesic distance.

    The post-change scale sits exactly ``delta`` away from the pre-change one
    along a random geodesic, so the change magnitude is a benchmark knob
    instead of a draw (an independent redraw gives an uncontrolled, usually
    large, change).  delta = 0 falls back to an independent redraw.
    """
    rng = np.random.default_rng(seed)
    pre = default_wishart_params(rng, p)
    dof = dof if dof is not None else p + 2
    pre = WishartParams(scale=pre.scale, dof=dof)
    if delta <= 0:
        post = default_wishart_params(rng, p)
        return pre, WishartParams(scale=post.scale, dof=dof)
    man = SpdManifold(p)
    base = man.point(pre.scale)
    v = man.random_tangent(rng, base, scale=delta)
    return pre, WishartParams(scale=man.exp(base, v).data, dof=dof)


def grassmann_change_pair(
    seed: int, p: int, k: int, delta: float, mean_scale: float
) -> tuple[SubspaceParams, SubspaceParams]:
    """Subspace mean pair with the post-change subspace rotated by ``delta``
    (principal-angle norm); delta = 0 redraws independently."""
    rng = np.random.default_rng(seed)
    pre = default_subspace_params(rng, p, k, mean_scale)
    if delta <= 0:
        return pre, default_subspace_params(rng, p, k, mean_scale)
    man = GrassmannManifold(p, k)
    base = man.point(pre.mean / mean_scale)
    v = man.random_tangent(rng, base, scale=delta)
    return pre, SubspaceParams(mean=man.exp(base, v).data * mean_scale)
