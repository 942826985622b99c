"""Epsilon sweeps, mesh refinement studies and log-log rate fits."""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble_all, assemble_effective, build_mesh
from .coefficient import d_epsilon, effective_abar
from .eigensolve import smallest_eigenpairs
from .errors import ConvergenceError, ValidationError
from .geometry import validate_tube
from .resolvent import band_limited_field, difference_operator_norm, lemma_ratio_probe, thin_factor

GUARD_FRACTION = 0.1
CLEAN_R2 = 0.95
MAX_NODES = 2_000_000


@dataclass
class RateFit:
    slope: float
    intercept: float
    r2: float
    n_points: int
    note: str = ""

    @property
    def clean(self):
        return self.r2 >= CLEAN_R2

    def as_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "n_points": self.n_points, "clean": self.clean, "note": self.note}


def fit_rate(points):
    """Least-squares line through ``(log eps, log error)``.

    Non-positive errors are dropped and noted; fewer than three usable points
    is an error.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    keep = (pts[:, 0] > 0) & (pts[:, 1] > 0) & np.all(np.isfinite(pts), axis=1)
    note = f"dropped {int((~keep).sum())} non-positive point(s)" if not keep.all() else ""
    pts = pts[keep]
    if len(pts) < 3:
        raise ValidationError(f"need at least 3 positive points for a rate fit, got {len(pts)}")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_res = float(np.sum((y - A @ [slope, intercept]) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), float(r2), len(pts), note)


def mesh_for_epsilon(length, epsilon, n_s, n_t, scale=True):
    """Base mesh widened in s so that ``h_s <= eps / 4`` (power-of-two counts)."""
    if scale:
        n_s = max(n_s, 2 ** math.ceil(math.log2(4 * length / epsilon)))
    return n_s, n_t


def effective_reference(geom, abar, k, n_fine=4096):
    """The ``k`` smallest effective eigenvalues, Richardson-extrapolated from two P1 meshes."""
    vals = []
    for n in (n_fine // 2, n_fine):
        E = assemble_effective(geom, abar, n)
        vals.append(smallest_eigenpairs(E.K_eff, E.M_eff, k, tol=1e-9).values)
    return (4 * vals[1] - vals[0]) / 3


def thin_eigenvalues(geom, model, abar, epsilon, n_s, n_t, k, tol, seed=0, keep_forms=False):
    tube = validate_tube(geom, epsilon)
    forms = assemble_all(tube, model, abar, build_mesh(geom.length, n_s, n_t))
    res = smallest_eigenpairs(forms.K_eps, forms.M_eps, k, tol, factor=thin_factor(forms), seed=seed)
    return (res, forms) if keep_forms else res


@dataclass
class SweepRow:
    epsilon: float
    n_s: int
    n_t: int
    d_eps: float
    lambda_eps: np.ndarray = None
    lambda_fine: np.ndarray = None
    lambda_coarse: np.ndarray = None
    eigen_errors: np.ndarray = None
    disc_estimate: np.ndarray = None
    guard_ok: np.ndarray = None
    diff_norm: float = float("nan")
    norm_iterations: int = 0
    norm_converged: bool = True
    ratios: dict = field(default_factory=dict)
    flagged: str = ""

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class SweepReport:
    epsilons: list
    rows: list
    lambda_eff: np.ndarray
    eigen_fits: dict
    norm_fit: object
    empirical_C: float
    C_spread: float
    mesh: dict

    def as_dict(self):
        return {
            "schema": 1,
            "epsilons": self.epsilons,
            "lambda_eff": self.lambda_eff,
            "mesh": self.mesh,
            "rows": [r.as_dict() for r in self.rows],
            "fits": {
                "eigen": {str(k): (f.as_dict() if isinstance(f, RateFit) else {"note": f})
                          for k, f in self.eigen_fits.items()},
                "norm": self.norm_fit.as_dict() if isinstance(self.norm_fit, RateFit) else {"note": self.norm_fit},
            },
            "empirical_C": self.empirical_C,
            "C_spread": self.C_spread,
            "zero_mode": [float(r.lambda_eps[0]) if r.lambda_eps is not None else None for r in self.rows],
        }


def _row(cfg, geom, model, abar, lam_eff, epsilon):
    sw = cfg.sweep
    k = sw["k_eigen"]
    n_s, n_t = mesh_for_epsilon(geom.length, epsilon, cfg.n_s, cfg.n_t, cfg.discretization["scale_with_epsilon"])
    tube = validate_tube(geom, epsilon)
    row = SweepRow(epsilon, n_s, n_t, d_epsilon(model, tube, abar))
    try:
        fine, forms = thin_eigenvalues(geom, model, abar, epsilon, n_s, n_t, k, sw["tol"], cfg.seed, True)
        coarse = thin_eigenvalues(geom, model, abar, epsilon, n_s // 2, max(n_t // 2, 2), k, sw["tol"], cfg.seed)
    except ConvergenceError as exc:
        row.flagged = f"eigensolver: {exc}"
        return row
    lf, lc = fine.values, coarse.values
    row.lambda_fine, row.lambda_coarse = lf, lc
    row.lambda_eps = (4 * lf - lc) / 3
    row.disc_estimate = np.abs(lf - lc) / 3
    row.eigen_errors = np.abs(row.lambda_eps - lam_eff)
    row.guard_ok = row.disc_estimate <= GUARD_FRACTION * row.eigen_errors
    try:
        est = difference_operator_norm(forms, tube, sw["norm_tol"], sw["norm_max_iter"], cfg.seed)
    except ConvergenceError as exc:
        est = exc.best
        row.flagged = "norm estimate not converged"
    row.diff_norm, row.norm_iterations, row.norm_converged = est.norm, est.iterations, est.converged
    if sw["probe"]:
        base = build_mesh(geom.length, cfg.n_s, cfg.n_t)
        G = band_limited_field(forms.mesh, cfg.seed, s_modes=base.n_s // 4, t_modes=max(base.n_t // 4, 1))
        row.ratios = lemma_ratio_probe(forms, tube, G)
    return row


def run_sweep(cfg, threads=None):
    """Eigenvalue errors, difference norms and ratio probes over ``cfg.sweep['epsilons']``.

    Eigenvalues are Richardson-extrapolated from the row mesh and its
    halving; their discretization error estimate is ``|fine - coarse| / 3``.
    Rows whose estimate exceeds 10% of the eigen error are excluded from the
    rate fit of that eigenvalue.
    """
    eps_list = sorted(cfg.epsilons, reverse=True)
    if not eps_list:
        raise ValidationError("empty epsilon list")
    geom = cfg.load_geometry()
    model = cfg.load_coefficient()
    for e in eps_list:
        validate_tube(geom, e)
    abar = effective_abar(model, geom)
    k = cfg.sweep["k_eigen"]
    lam_eff = effective_reference(geom, abar, k)
    with ThreadPoolExecutor(max_workers=threads or 1) as pool:
        rows = list(pool.map(lambda e: _row(cfg, geom, model, abar, lam_eff, e), eps_list))

    fits = {}
    for j in range(1, k):
        pts = [(r.epsilon, r.eigen_errors[j]) for r in rows
               if r.eigen_errors is not None and not r.flagged.startswith("eigen") and r.guard_ok[j]]
        try:
            fits[j + 1] = fit_rate(pts)
        except ValidationError as exc:
            fits[j + 1] = str(exc)
    good = [r for r in rows if np.isfinite(r.diff_norm) and r.norm_converged]
    try:
        norm_fit = fit_rate([(r.epsilon, r.diff_norm) for r in good])
    except ValidationError as exc:
        norm_fit = str(exc)
    Cs = np.array([r.diff_norm / max(r.epsilon, r.d_eps) for r in good])
    return SweepReport(
        epsilons=eps_list,
        rows=rows,
        lambda_eff=lam_eff,
        eigen_fits=fits,
        norm_fit=norm_fit,
        empirical_C=float(Cs.max()) if len(Cs) else float("nan"),
        C_spread=float(Cs.max() / Cs.min()) if len(Cs) else float("nan"),
        mesh={"n_s": [r.n_s for r in rows], "n_t": [r.n_t for r in rows], "coarse_factor": 2},
    )


@dataclass
class RefinementTable:
    epsilon: float
    n_s: list
    n_t: list
    h_s: list
    values: np.ndarray
    observed_order: np.ndarray
    extrapolated: np.ndarray

    def as_dict(self):
        return {"schema": 1, **{k: getattr(self, k) for k in self.__dataclass_fields__}}


def mesh_refinement_study(cfg, levels=None, epsilon=None, k=None, max_nodes=MAX_NODES):
    """Halve ``h_s`` and ``h_t`` per level at fixed epsilon.

    The observed order per eigenvalue comes from the last three levels,
    ``log2(|l1 - l0| / |l2 - l1|)``; extrapolation assumes order 2.
    """
    levels = cfg.sweep["refine_levels"] if levels is None else levels
    if levels < 3:
        raise ValidationError(f"refinement needs at least 3 levels, got {levels}")
    epsilon = epsilon or cfg.sweep["refine_epsilon"] or cfg.epsilons[0]
    k = k or cfg.sweep["k_eigen"]
    geom = cfg.load_geometry()
    model = cfg.load_coefficient()
    abar = effective_abar(model, geom)
    sizes = [(cfg.n_s * 2**i, cfg.n_t * 2**i) for i in range(levels)]
    finest = sizes[-1][0] * (sizes[-1][1] + 1)
    if finest > max_nodes:
        raise ValidationError(f"finest refinement mesh has {finest} nodes, above the guard of {max_nodes}")
    vals = np.array([thin_eigenvalues(geom, model, abar, epsilon, ns, nt, k, cfg.sweep["tol"], cfg.seed).values
                     for ns, nt in sizes])
    d1 = np.abs(vals[-2] - vals[-3])
    d2 = np.abs(vals[-1] - vals[-2])
    with np.errstate(divide="ignore", invalid="ignore"):
        order = np.where((d1 > 0) & (d2 > 0), np.log2(d1 / d2), np.nan)
    # the constant mode has no discretization error to measure
    order[np.abs(vals[-1]) <= 1e-8 * max(1.0, float(np.abs(vals[-1]).max()))] = np.nan
    extrap = vals[-1] + (vals[-1] - vals[-2]) / 3
    return RefinementTable(float(epsilon), [s[0] for s in sizes], [s[1] for s in sizes],
                           [geom.length / s[0] for s in sizes], vals, order, extrap)
