"""Smallest eigenpairs of symmetric pencils ``K x = lambda M x``.

The solver is a restarted block Krylov method applied to the shift-invert
operator ``(K + M)^{-1} M`` (shift -1), with Rayleigh-Ritz extraction on
the pencil itself. ``K + M`` is factored once and can be shared with the
resolvent solves.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .errors import ConvergenceError, NumericalError, ValidationError


class ShiftedFactor:
    """Sparse LU factorization of a shifted pencil matrix; immutable after construction."""

    def __init__(self, A):
        A = sp.csc_matrix(A)
        try:
            self._lu = sla.splu(A, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise NumericalError(f"factorization of the shifted pencil failed: {exc}") from exc
        d = self._lu.U.diagonal()
        if not np.all(np.isfinite(d)) or np.min(np.abs(d)) <= 1e-14 * np.max(np.abs(d)):
            raise NumericalError("shifted pencil is numerically singular")
        self.shape = A.shape

    def solve(self, b):
        return self._lu.solve(np.asarray(b, dtype=float))


def shifted_factor(K, M, cache=None, key="K+M"):
    """Factor ``K + M``, memoized in ``cache`` when given."""
    if cache is not None and key in cache:
        return cache[key]
    fac = ShiftedFactor(K + M)
    if cache is not None:
        cache[key] = fac
    return fac


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    iterations: int = 0

    def __len__(self):
        return len(self.values)


def _residuals(K, M, values, vectors):
    R = K @ vectors - (M @ vectors) * values[None, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(vectors, axis=0)


def _m_orthonormalize(V, M, drop=1e-12):
    """SVQB: M-orthonormal basis of span(V), dropping near-dependent directions."""
    for _ in range(2):
        MV = M @ V
        G = V.T @ MV
        G = (G + G.T) / 2
        d = np.sqrt(np.abs(np.diag(G)))
        d[d == 0] = 1.0
        Gs = G / np.outer(d, d)
        w, U = np.linalg.eigh(Gs)
        keep = w > drop * w.max()
        V = (V / d) @ (U[:, keep] / np.sqrt(w[keep]))
    return V


def smallest_eigenpairs(K, M, k, tol=1e-8, factor=None, block=None, krylov_steps=3,
                        max_iter=None, seed=0):
    """The ``k`` smallest eigenpairs of ``K x = lambda M x``.

    Parameters
    ----------
    K, M : sparse matrices
        Symmetric, K positive semidefinite, M positive definite.
    k : int
        Number of pairs.
    tol : float
        Required residual ``||K x - lambda M x|| / ||x||`` for every pair.
    factor : ShiftedFactor, optional
        Precomputed factorization of ``K + M``.
    block : int, optional
        Block size, default ``k + 3``.
    max_iter : int, optional
        Restart cap, default ``100 * k``.

    Returns
    -------
    EigenResult
        Ascending values, M-orthonormal vectors, residuals.

    Raises
    ------
    ConvergenceError
        If some residual stays above ``tol``; ``best`` holds the last iterate.
    """
    n = K.shape[0]
    if K.shape != (n, n) or M.shape != (n, n):
        raise ValidationError("K and M must be square and of equal size")
    if not 1 <= k < n:
        raise ValidationError(f"need 1 <= k < {n}, got {k}")
    block = block or k + 3
    max_iter = max_iter or 100 * k
    if n <= max(4 * block * krylov_steps, 200):
        return _dense(K, M, k)
    fac = factor if factor is not None else ShiftedFactor(K + M)
    rng = np.random.default_rng(seed)
    X = _m_orthonormalize(rng.standard_normal((n, block)), M)
    res = None
    for it in range(1, max_iter + 1):
        blocks = [X]
        for _ in range(krylov_steps - 1):
            blocks.append(fac.solve(M @ blocks[-1]))
        V = _m_orthonormalize(np.hstack(blocks), M)
        KV = K @ V
        H = V.T @ KV
        H = (H + H.T) / 2
        w, Y = np.linalg.eigh(H)
        X = V @ Y[:, :block]
        vals = w[:k]
        res = _residuals(K, M, vals, X[:, :k])
        if np.all(res <= tol):
            return EigenResult(vals.copy(), X[:, :k].copy(), res, it)
    best = EigenResult(vals.copy(), X[:, :k].copy(), res, max_iter)
    raise ConvergenceError(f"eigensolver did not reach tol={tol:g} in {max_iter} restarts "
                           f"(max residual {res.max():.3e})", best=best)


def _dense(K, M, k):
    Kd = K.toarray() if sp.issparse(K) else np.asarray(K)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M)
    w, V = la.eigh(Kd, Md, subset_by_index=[0, k - 1])
    return EigenResult(w, V, _residuals(Kd, Md, w, V), 0)


def dense_eigenvalues(K, M, k=None):
    """Reference eigenvalues from a dense generalized solver."""
    Kd = K.toarray() if sp.issparse(K) else np.asarray(K)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M)
    idx = None if k is None else [0, k - 1]
    return la.eigh(Kd, Md, eigvals_only=True, subset_by_index=idx)


def residual_report(K, M, result):
    """Maximum residual of ``result`` recomputed from the pencil."""
    V = np.asarray(result.vectors)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[0] != K.shape[0] or M.shape != K.shape or V.shape[1] != len(result.values):
        raise ValidationError("result does not match the pencil size")
    return float(_residuals(K, M, np.asarray(result.values, dtype=float), V).max())


def group_multiplets(values, rtol=1e-6, atol=1e-10):
    """Index runs of sorted values whose neighbours agree within ``rtol`` relative."""
    values = np.asarray(values, dtype=float)
    groups = []
    for i, v in enumerate(values):
        if groups and abs(v - values[i - 1]) <= rtol * max(abs(v), abs(values[i - 1])) + atol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups
