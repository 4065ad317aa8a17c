from .base import (
    DegeneratePairError,
    Manifold,
    ManifoldPoint,
    TangentVector,
    ValidationError,
    karcher_stochastic_gradient,
)
from .grassmann import GrassmannManifold
from .spd import SpdManifold

__all__ = [
    "DegeneratePairError",
    "GrassmannManifold",
    "Manifold",
    "ManifoldPoint",
    "SpdManifold",
    "TangentVector",
    "ValidationError",
    "karcher_stochastic_gradient",
]
