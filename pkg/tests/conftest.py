import numpy as np
import pytest

from thintube import kernels
from thintube.geometry import build_circle, build_flat, build_parametric, validate_tube

TWO_PI = 2 * np.pi


@pytest.fixture(scope="session")
def circle():
    return build_circle(1.0)


@pytest.fixture(scope="session")
def flat():
    return build_flat(TWO_PI)


@pytest.fixture(scope="session")
def ellipse():
    return build_parametric({"cos_x": [0.0, 2.0], "sin_y": [1.0]}, 1024)


@pytest.fixture(scope="session")
def circle_tube(circle):
    return validate_tube(circle, 0.1)


@pytest.fixture(scope="session")
def flat_tube(flat):
    return validate_tube(flat, 0.1)


BACKENDS = [pytest.param(kernels.python_backend, id="python")]
if kernels.compiled_backend is not None:
    BACKENDS.append(pytest.param(kernels.compiled_backend, id="compiled"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param
