import numpy as np
import pytest
import scipy.sparse as sp

from thintube import coefficient as C
from thintube.assembly import assemble_effective, assemble_thin, build_mesh
from thintube.eigensolve import (
    EigenResult,
    ShiftedFactor,
    dense_eigenvalues,
    group_multiplets,
    residual_report,
    smallest_eigenpairs,
)
from thintube.errors import ConvergenceError, NumericalError, ValidationError
from thintube.geometry import validate_tube

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def flat_forms(flat_tube):
    return assemble_thin(flat_tube, C.constant(1.0), build_mesh(TWO_PI, 128, 8))


def test_flat_strip_spectrum(flat_forms):
    res = smallest_eigenpairs(flat_forms.K_eps, flat_forms.M_eps, 4, tol=1e-9)
    assert np.allclose(res.values, [0, 1, 1, 4], atol=5e-3 * 4)
    assert np.all(np.diff(res.values) >= 0)
    assert res.residuals.max() <= 1e-9
    assert residual_report(flat_forms.K_eps, flat_forms.M_eps, res) <= 1e-9
    G = res.vectors.T @ (flat_forms.M_eps @ res.vectors)
    assert np.abs(G - np.eye(4)).max() <= 1e-10


def test_circle_small_epsilon(circle):
    tube = validate_tube(circle, 0.05)
    F = assemble_thin(tube, C.constant(1.0), build_mesh(TWO_PI, 128, 8))
    res = smallest_eigenpairs(F.K_eps, F.M_eps, 3)
    assert np.allclose(res.values, [0, 1, 1], atol=0.1)


def test_effective_constant_coefficient(circle):
    vals = {}
    for n in (256, 512):
        E = assemble_effective(circle, lambda s: np.full_like(s, 1.5), n)
        vals[n] = smallest_eigenpairs(E.K_eff, E.M_eff, 3, tol=1e-10).values
        h = TWO_PI / n
        # closed-form eigenvalue of the periodic P1 pencil for mode m = 1
        discrete = 1.5 * 6 * (1 - np.cos(h)) / (h**2 * (2 + np.cos(h)))
        assert np.allclose(vals[n], [0, discrete, discrete], atol=1e-10)
    extrapolated = (4 * vals[512] - vals[256]) / 3
    assert np.allclose(extrapolated, [0, 1.5, 1.5], atol=1e-6)


@pytest.mark.parametrize("model", [C.constant(1.0), C.piecewise_transverse(1.0, 2.0)], ids=["const", "piecewise"])
def test_sparse_matches_dense_64x16(circle, model, ellipse):
    for geom in (circle, ellipse):
        tube = validate_tube(geom, 0.2)
        F = assemble_thin(tube, model, build_mesh(geom.length, 64, 16))
        sparse = smallest_eigenpairs(F.K_eps, F.M_eps, 5, tol=1e-10).values
        dense = dense_eigenvalues(F.K_eps, F.M_eps, 5)
        scale = np.maximum(np.abs(dense), 1.0)
        assert np.abs(sparse - dense).max() <= 1e-8 * scale.max()


def test_shift_invariance(flat_forms):
    K, M = flat_forms.K_eps, flat_forms.M_eps
    base = smallest_eigenpairs(K, M, 4, tol=1e-10).values
    shifted = smallest_eigenpairs(K + 3.0 * M, M, 4, tol=1e-10).values
    assert np.abs(shifted - base - 3.0).max() <= 1e-10 * 4


def test_residual_report_examples():
    K = sp.diags([1.0, 3.0])
    M = sp.identity(2)
    exact = EigenResult(np.array([1.0]), np.array([[1.0], [0.0]]), np.zeros(1))
    assert residual_report(K, M, exact) == 0.0
    r = []
    for d in (1e-3, 2e-3, 4e-3):
        pert = EigenResult(np.array([1.0]), np.array([[1.0], [d]]), np.zeros(1))
        r.append(residual_report(K, M, pert))
    assert r[1] / r[0] == pytest.approx(2.0, rel=1e-3) and r[2] / r[1] == pytest.approx(2.0, rel=1e-3)
    with pytest.raises(ValidationError):
        residual_report(sp.identity(3), sp.identity(3), exact)


def test_convergence_error_carries_best(flat_forms):
    with pytest.raises(ConvergenceError) as info:
        smallest_eigenpairs(flat_forms.K_eps, flat_forms.M_eps, 4, tol=1e-30, max_iter=2)
    assert info.value.best is not None and len(info.value.best.values) == 4


def test_input_validation(flat_forms):
    with pytest.raises(ValidationError):
        smallest_eigenpairs(flat_forms.K_eps, flat_forms.M_eps, 0)
    with pytest.raises(ValidationError):
        smallest_eigenpairs(flat_forms.K_eps, sp.identity(3), 2)


def test_singular_factor_rejected():
    with pytest.raises(NumericalError):
        ShiftedFactor(sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 1.0]])))


def test_group_multiplets():
    assert group_multiplets([0.0, 1.0, 1.0 + 1e-9, 4.0, 4.0]) == [[0], [1, 2], [3, 4]]
