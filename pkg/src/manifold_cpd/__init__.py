"""Online change-point detection for manifold-valued data streams."""

from .centroid import (
    HuberConfig,
    batch_frechet_mean,
    huber_weight,
    robust_stochastic_gradient,
    sgd_step,
)
from .detector import (
    BaselineConfig,
    BaselineState,
    DetectorConfig,
    DetectorState,
    baseline_init,
    baseline_update,
    detector_init,
    detector_update,
    run_baseline,
    run_detector,
)
from .geometry import (
    DegeneratePairError,
    GrassmannManifold,
    Manifold,
    ManifoldPoint,
    SpdManifold,
    TangentVector,
    ValidationError,
    karcher_stochastic_gradient,
)

__version__ = "0.1.0"
