import numpy as np
import pytest

from thintube.errors import ValidationError
from thintube.expr import Expression


def test_power_and_vectorization():
    e = Expression("1+x^2", ("x", "y"))
    assert e(x=2.0, y=0.0) == 5.0
    assert np.allclose(e(x=np.array([0.0, 1.0, 3.0]), y=0.0), [1, 2, 10])


def test_functions_and_unary():
    e = Expression("-sin(x) + cos(y) * exp(0)", ("x", "y"))
    assert e(x=np.pi / 2, y=0.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("src", ["__import__('os')", "x.real", "open(x)", "z + 1", "x if x else 1", "[x]", "sin(x, x)"])
def test_rejects_unsafe_or_unknown(src):
    with pytest.raises(ValidationError):
        Expression(src, ("x", "y"))


def test_syntax_error_is_validation_error():
    with pytest.raises(ValidationError):
        Expression("1 +", ("x",))
