"""Reference values built from closed forms and dense 1D solves.

Nothing here touches the 2D assembly; these functions exist so that the main
pipeline can be checked against independently computed numbers.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import ValidationError


@dataclass(frozen=True)
class NeumannIntervalBasis:
    """Eigenfunctions of ``-d^2/dt^2`` on ``(-1, 1)`` with Neumann ends, normalized in L2."""

    def mu(self, n):
        """Eigenvalue ``(n pi / 2)^2``."""
        return (np.asarray(n) * np.pi / 2) ** 2

    def chi(self, n, t):
        """Normalized eigenfunction: ``1/sqrt 2`` for n = 0, then ``cos`` (even n) or ``sin`` (odd n) of ``n pi t / 2``."""
        t = np.asarray(t, dtype=float)
        if n < 0:
            raise ValidationError("mode index must be non-negative")
        if n == 0:
            return np.full_like(t, 1 / np.sqrt(2))
        arg = n * np.pi * t / 2
        return np.cos(arg) if n % 2 == 0 else np.sin(arg)

    def gram(self, n_max, n_quad=64):
        """Gram matrix of ``chi_0 .. chi_{n_max}`` by Gauss-Legendre quadrature."""
        x, w = np.polynomial.legendre.leggauss(n_quad)
        B = np.array([self.chi(n, x) for n in range(n_max + 1)])
        return (B * w) @ B.T


NEUMANN = NeumannIntervalBasis()
MU1 = float(NEUMANN.mu(1))


def flat_strip_eigen(length, epsilon, a_const, m, n):
    """Exact eigenvalue ``a [(2 pi m / L)^2 + mu_n / eps^2]`` of the flat periodic strip."""
    if m < 0 or n < 0:
        raise ValidationError("mode indices must be non-negative")
    return a_const * ((2 * np.pi * m / length) ** 2 + NEUMANN.mu(n) / epsilon**2)


def flat_strip_spectrum(length, epsilon, a_const, count, m_max=64, n_max=8):
    """The ``count`` smallest flat-strip eigenvalues with multiplicity (m and -m both counted)."""
    vals = []
    for m in range(m_max + 1):
        for n in range(n_max + 1):
            lam = flat_strip_eigen(length, epsilon, a_const, m, n)
            vals.extend([lam] if m == 0 else [lam, lam])
    return np.sort(vals)[:count]


def separable_circle_eigen(radius, epsilon, a_profile, m, n_dense=2048, count=1):
    """Lowest eigenvalue(s) of the Fourier sector ``e^{i m s / R}`` on a circle tube.

    The reduced pencil on ``t in (-1, 1)`` is
    ``int a(t) [m^2/R^2 (1 - eps t/R)^-2 |u|^2 + eps^-2 |u'|^2] (1 - eps t/R) dt``
    against ``int |u|^2 (1 - eps t/R) dt``, discretized by dense P1 elements
    with two-point Gauss quadrature. ``n_dense`` is rounded up to even so that
    t = 0 is a node.

    Parameters
    ----------
    a_profile : callable or float
        Coefficient as a function of t (vectorized), or a constant.
    count : int
        Number of sector eigenvalues to return; a float when 1.
    """
    if n_dense < 64:
        raise ValidationError("n_dense must be >= 64")
    if not 0 < epsilon < radius:
        raise ValidationError("need 0 < epsilon < radius")
    n = n_dense + (n_dense % 2)
    h = 2.0 / n
    left = -1.0 + h * np.arange(n)
    xi = np.array([0.5 - 0.5 / np.sqrt(3), 0.5 + 0.5 / np.sqrt(3)])
    tq = left[:, None] + h * xi[None, :]
    if callable(a_profile):
        aq = np.broadcast_to(np.asarray(a_profile(tq), dtype=float), tq.shape)
    else:
        aq = np.full(tq.shape, float(a_profile))
    f = 1.0 - epsilon * tq / radius
    phi = np.stack([1 - xi, xi])  # phi[a, q]
    w = h / 2
    kq = w * aq * (m / radius) ** 2 / f  # coefficient of phi_a phi_b
    dq = w * aq * f / epsilon**2 / h**2  # coefficient of phi_a' phi_b' (signs below)
    mq = w * f
    # tridiagonal pencil stored as (diagonal, superdiagonal); the stiffness is
    # D^T diag(dsum) D + Kmass so energies of nearly constant vectors come from
    # differences rather than cancellation
    dsum = dq.sum(axis=1)
    km = np.einsum("eq,aq,bq->eab", kq, phi, phi)
    mm = np.einsum("eq,aq,bq->eab", mq, phi, phi)

    def tridiag(loc):
        diag = np.zeros(n + 1)
        diag[:-1] += loc[:, 0, 0]
        diag[1:] += loc[:, 1, 1]
        return diag, loc[:, 0, 1].copy()

    kd, ku = tridiag(km)
    md, mu = tridiag(mm)

    def apply(diag, up, V):
        out = diag[:, None] * V
        out[:-1] += up[:, None] * V[1:]
        out[1:] += up[:, None] * V[:-1]
        return out

    ab = np.zeros((2, n + 1))
    ab[1] = kd + md
    ab[1, :-1] += dsum
    ab[1, 1:] += dsum
    ab[0, 1:] = ku + mu - dsum
    # block inverse iteration on K + M from smooth transverse modes
    nb = count + 2
    V = np.cos(np.pi * np.arange(nb)[None, :] * (np.linspace(-1, 1, n + 1)[:, None] + 1) / 2)
    for _ in range(12):
        V = la.solveh_banded(ab, apply(md, mu, V))
        V, _ = np.linalg.qr(V)
    DV = np.diff(V, axis=0)
    Kr = DV.T @ (dsum[:, None] * DV) + V.T @ apply(kd, ku, V)
    Mr = V.T @ apply(md, mu, V)
    vals = la.eigh((Kr + Kr.T) / 2, (Mr + Mr.T) / 2, eigvals_only=True)[:count]
    return float(vals[0]) if count == 1 else vals
