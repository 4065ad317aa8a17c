import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from manifold_cpd.geometry import GrassmannManifold, SpdManifold

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


MANIFOLDS = {
    "spd3": SpdManifold(3),
    "spd5": SpdManifold(5),
    "gr52": GrassmannManifold(5, 2),
    "gr62": GrassmannManifold(6, 2),
}


@pytest.fixture(params=sorted(MANIFOLDS), ids=sorted(MANIFOLDS))
def manifold(request):
    return MANIFOLDS[request.param]
