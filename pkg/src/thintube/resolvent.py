"""Thin and effective resolvents and the norm of their difference.

Everything is compared in the flat reference space ``L2(Sigma x I)`` whose
discrete inner product is ``M_flat``. The transform ``U_eps v = f^(1/2) v``
enters the sandwich in Galerkin form ``M_flat^-1 B_half``, which keeps the
discrete sandwich exactly self-adjoint in that inner product.
"""
from dataclasses import dataclass

import numpy as np

from .assembly import embed, transverse_mean
from .eigensolve import ShiftedFactor, shifted_factor
from .errors import ConvergenceError, ValidationError
from .oracle import NEUMANN


@dataclass
class ResolventPair:
    psi_eps: np.ndarray
    psi_eff: np.ndarray
    input_G: np.ndarray
    input_F: np.ndarray


@dataclass
class DifferenceNormEstimate:
    norm: float
    iterations: int
    rel_change: float
    converged: bool = True
    ritz_residual: float = 0.0


def _check(forms, v, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.shape[0] != forms.mesh.n_nodes:
        raise ValidationError(f"{name} has {v.shape[0]} entries, mesh has {forms.mesh.n_nodes} nodes")
    return v


def thin_factor(forms):
    """Factorization of ``K_eps + M_eps`` shared with the eigensolver."""
    return shifted_factor(forms.K_eps, forms.M_eps, forms.cache, "K+M")


def flat_mass_factor(forms):
    if "M_flat" not in forms.cache:
        forms.cache["M_flat"] = ShiftedFactor(forms.M_flat)
    return forms.cache["M_flat"]


def effective_factor(forms):
    if "eff" not in forms.cache:
        forms.cache["eff"] = ShiftedFactor(forms.K_eff + forms.M_eff)
    return forms.cache["eff"]


def effective_mass_factor(forms):
    if "M_eff" not in forms.cache:
        forms.cache["M_eff"] = ShiftedFactor(forms.M_eff)
    return forms.cache["M_eff"]


def solve_thin_resolvent(forms, tube, G):
    """Solve ``(K_eps + M_eps) psi = B_half G``, the weak thin equation with load ``f^(1/2) G``."""
    G = _check(forms, G, "G")
    if tube is not None and tube is not forms.tube:
        if tube.epsilon != forms.tube.epsilon or tube.geometry is not forms.tube.geometry:
            raise ValidationError("forms were assembled for a different tube")
    return thin_factor(forms).solve(forms.B_half @ G)


def solve_effective_1d(forms, g):
    """Solve ``(K_eff + M_eff) u = M_eff g`` on the s-mesh."""
    return effective_factor(forms).solve(forms.M_eff @ g)


def solve_effective_resolvent(forms, F):
    """Project ``F`` onto t-constant fields, solve the effective equation, embed back."""
    F = _check(forms, F, "F")
    return embed(forms.mesh, solve_effective_1d(forms, transverse_mean(forms.mesh, F)))


def resolvent_pair(forms, tube, G, F=None):
    F = G if F is None else F
    return ResolventPair(solve_thin_resolvent(forms, tube, G), solve_effective_resolvent(forms, F), G, F)


def apply_Ueps_galerkin(forms, v):
    """``L2`` projection of ``f^(1/2) v`` onto the finite element space."""
    return flat_mass_factor(forms).solve(forms.B_half @ v)


def thin_sandwich(forms, G):
    """``U_eps (H_eps + 1)^-1 U_eps^-1 G`` in the flat space."""
    return apply_Ueps_galerkin(forms, thin_factor(forms).solve(forms.B_half @ G))


def difference_map(forms, G):
    """``D G = U (H_eps+1)^-1 U^-1 G - (H_eff+1)^-1 P0 G``."""
    G = _check(forms, G, "G")
    return thin_sandwich(forms, G) - solve_effective_resolvent(forms, G)


def flat_norm(forms, v):
    return float(np.sqrt(max(v @ (forms.M_flat @ v), 0.0)))


def difference_operator_norm(forms, tube=None, tol=1e-8, max_iter=500, seed=0):
    """Operator norm of the difference map in the ``M_flat`` inner product.

    Lanczos on ``D* D`` with full reorthogonalization; since ``D`` is
    self-adjoint, ``D* D = D^2``. Converges when the largest Ritz value has
    changed by at most ``tol`` (relative) and its residual bound is below
    ``sqrt(tol)`` relative.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` steps; ``best`` carries the last estimate.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    n = forms.mesh.n_nodes
    M = forms.M_flat
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(n)
    q /= flat_norm(forms, q)
    Q, alpha, beta = [q], [], []
    prev = None
    rel = np.inf
    for it in range(1, min(max_iter, n) + 1):
        w = difference_map(forms, difference_map(forms, Q[-1]))
        a = float(Q[-1] @ (M @ w))
        alpha.append(a)
        w = w - a * Q[-1] - (beta[-1] * Q[-2] if beta else 0.0)
        for _ in range(2):
            Qa = np.array(Q)
            w = w - Qa.T @ (Qa @ (M @ w))
        b = flat_norm(forms, w)
        T = np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
        theta, Y = np.linalg.eigh(T)
        est = float(np.sqrt(max(theta[-1], 0.0)))
        ritz_res = abs(b * Y[-1, -1]) / max(theta[-1], 1e-300)
        if prev is not None:
            rel = abs(est - prev) / max(est, 1e-300)
            if rel <= tol and ritz_res <= np.sqrt(tol):
                return DifferenceNormEstimate(est, it, rel, True, ritz_res)
        prev = est
        if b <= 1e-14 * max(abs(theta[-1]), 1e-300):
            return DifferenceNormEstimate(est, it, 0.0, True, 0.0)
        beta.append(b)
        Q.append(w / b)
    best = DifferenceNormEstimate(prev, max_iter, rel, False, ritz_res)
    raise ConvergenceError(f"norm estimate did not converge in {max_iter} steps", best=best)


def band_limited_field(mesh, seed=0, s_modes=None, t_modes=None):
    """Random smooth node field with s-Fourier modes up to ``s_modes`` and Neumann t-modes up to ``t_modes``.

    Coefficients are independent standard normals; defaults are ``n_s // 4`` and ``n_t // 4``.
    """
    s_modes = mesh.n_s // 4 if s_modes is None else s_modes
    t_modes = max(mesh.n_t // 4, 1) if t_modes is None else t_modes
    rng = np.random.default_rng(seed)
    S, T = mesh.node_grid()
    s = S[:, 0]
    t = T[0]
    ms = np.arange(s_modes + 1)
    c = rng.standard_normal((s_modes + 1, t_modes + 1))
    d = rng.standard_normal((s_modes + 1, t_modes + 1))
    d[0] = 0.0
    arg = 2 * np.pi * np.outer(s, ms) / mesh.length
    chi = np.array([NEUMANN.chi(n, t) for n in range(t_modes + 1)])
    return (np.cos(arg) @ c @ chi + np.sin(arg) @ d @ chi).ravel()


def lemma_ratio_probe(forms, tube, G):
    """Transverse-derivative, perpendicular-part and gradient ratios of the thin solve.

    Returns
    -------
    dict
        ``r_transverse = |d_t psi| / (eps |G|)``, ``r_perp = |P0perp psi| / (eps |G|)``,
        ``r_grad = |d_s psi| / |G|`` in flat norms, plus ``r_lap`` for the
        effective solve: ``|K_eff u|_{M_eff^-1} / |G|``.
    """
    G = _check(forms, G, "G")
    gnorm = flat_norm(forms, G)
    if gnorm == 0:
        raise ValidationError("G must be nonzero")
    eps = forms.tube.epsilon
    psi = solve_thin_resolvent(forms, tube, G)
    perp = psi - embed(forms.mesh, transverse_mean(forms.mesh, psi))
    u = solve_effective_1d(forms, transverse_mean(forms.mesh, G))
    Ku = forms.K_eff @ u
    lap = np.sqrt(max(Ku @ effective_mass_factor(forms).solve(Ku), 0.0))
    return {
        "r_transverse": float(np.sqrt(max(psi @ (forms.G_t @ psi), 0.0))) / (eps * gnorm),
        "r_perp": flat_norm(forms, perp) / (eps * gnorm),
        "r_grad": float(np.sqrt(max(psi @ (forms.G_s @ psi), 0.0))) / gnorm,
        "r_lap": float(lap) / gnorm,
    }
