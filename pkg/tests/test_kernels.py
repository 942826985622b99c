import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thintube import kernels
from thintube.geometry import build_circle

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")


def _reference_q1(css, ctt, cm, hs, ht):
    gp = np.array([(1 - 1 / np.sqrt(3)) / 2, (1 + 1 / np.sqrt(3)) / 2])
    out = np.zeros((len(css), 16))
    for c in range(len(css)):
        K = np.zeros((4, 4))
        for gi in range(2):
            for gj in range(2):
                x, y = gp[gi], gp[gj]
                phi = np.array([(1 - x) * (1 - y), x * (1 - y), (1 - x) * y, x * y])
                ds = np.array([-(1 - y), 1 - y, -y, y]) / hs
                dt = np.array([-(1 - x), -x, 1 - x, x]) / ht
                g = 2 * gi + gj
                w = hs * ht / 4
                K += w * (css[c, g] * np.outer(ds, ds) + ctt[c, g] * np.outer(dt, dt) + cm[c, g] * np.outer(phi, phi))
        out[c] = K.ravel()
    return out


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")


def test_q1_matches_reference(backend):
    rng = np.random.default_rng(1)
    css, ctt, cm = (rng.uniform(0.1, 3, (7, 4)) for _ in range(3))
    got = kernels.q1_cell_values(css, ctt, cm, 0.3, 0.2, backend=backend)
    assert np.allclose(got, _reference_q1(css, ctt, cm, 0.3, 0.2), rtol=1e-13, atol=1e-13)


def test_q1_constant_mass_total(backend):
    one = np.ones((5, 4))
    zero = np.zeros((5, 4))
    vals = kernels.q1_cell_values(zero, zero, one, 0.5, 0.25, backend=backend)
    assert vals.sum(axis=1) == pytest.approx(np.full(5, 0.125), rel=1e-14)
    stiff = kernels.q1_cell_values(one, one, zero, 0.5, 0.25, backend=backend)
    assert np.abs(stiff.reshape(5, 4, 4).sum(axis=2)).max() < 1e-13


def test_segment_contact_examples(backend):
    p = np.array([[0.0, 0.0], [0.0, 1.0], [5.0, 5.0]])
    q = np.array([[1.0, 0.0], [1.0, 1.0], [6.0, 5.0]])
    assert kernels.first_segment_contact(p, q, 0, 0.5, cyclic=False, backend=backend) == (-1, -1)
    assert kernels.first_segment_contact(p, q, 0, 1.0, cyclic=False, backend=backend) == (0, 1)
    cross_p = np.array([[0.0, 0.0], [0.0, 1.0]])
    cross_q = np.array([[1.0, 1.0], [1.0, 0.0]])
    assert kernels.first_segment_contact(cross_p, cross_q, 0, 0.0, cyclic=False, backend=backend) == (0, 1)


def test_circle_cross_sections_disjoint(backend):
    g = build_circle(1.0, 256)
    a = g.points - 0.95 * g.normal
    b = g.points + 0.95 * g.normal
    assert kernels.first_segment_contact(a, b, 3, 1e-12, backend=backend) == (-1, -1)


def test_min_distant_gap_circle(backend):
    g = build_circle(1.0, 128)
    d, i, j = kernels.min_distant_gap(g.points, g.s, g.length, np.pi * 0.99, backend=backend)
    assert d == pytest.approx(2.0, abs=1e-3)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 30), tol=st.floats(0.0, 0.3))
def test_backends_agree_on_random_segments(seed, n, tol):
    if kernels.compiled_backend is None:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(seed)
    p = rng.uniform(0, 4, (n, 2))
    q = p + rng.normal(0, 0.5, (n, 2))
    args = (p, q, 1, tol)
    assert kernels.first_segment_contact(*args, backend=kernels.python_backend) == \
        kernels.first_segment_contact(*args, backend=kernels.compiled_backend)
    s = np.sort(rng.uniform(0, 10, n))
    a = kernels.min_distant_gap(p, s, 10.0, 2.0, backend=kernels.python_backend)
    b = kernels.min_distant_gap(p, s, 10.0, 2.0, backend=kernels.compiled_backend)
    assert a[1:] == b[1:] and a[0] == pytest.approx(b[0], rel=1e-14)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), hs=st.floats(0.01, 1), ht=st.floats(0.01, 1))
def test_backends_agree_on_q1(seed, hs, ht):
    if kernels.compiled_backend is None:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(seed)
    css, ctt, cm = (rng.uniform(0, 5, (9, 4)) for _ in range(3))
    a = kernels.q1_cell_values(css, ctt, cm, hs, ht, backend=kernels.python_backend)
    b = kernels.q1_cell_values(css, ctt, cm, hs, ht, backend=kernels.compiled_backend)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-12 * np.abs(a).max())
