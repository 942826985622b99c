"""The diffusion coefficient ``a`` on the tube and its transverse averages."""
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from .errors import NumericalError, ValidationError
from .expr import Expression
from .geometry import TubeDescriptor, tube_map, validate_tube

KINDS = ("constant", "piecewise_transverse", "surface_times_profile", "cartesian_field", "tabulated")


@dataclass(frozen=True, eq=False)
class CoefficientModel:
    """Non-homogeneity ``a`` in one of the supported parametrizations.

    ``lower_bound`` (c) and ``gradient_bound`` (D) are the declared constants of
    ``c <= a <= 1/c`` and ``|d a_eps / ds| <= D``; ``None`` means undeclared.
    """

    kind: str
    payload: dict = field(default_factory=dict)
    lower_bound: float | None = None
    gradient_bound: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown coefficient kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class EffectiveCoefficient:
    """Limit coefficient ``abar`` sampled on the curve's arclength grid."""

    s: np.ndarray
    values: np.ndarray
    length: float
    provenance: str
    func: object = None

    def __call__(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.length)
        if self.func is not None:
            return np.broadcast_to(np.asarray(self.func(s), dtype=float), s.shape).copy()
        ss = np.append(self.s, self.length)
        vv = np.append(self.values, self.values[0])
        return CubicSpline(ss, vv, bc_type="periodic")(s)


@dataclass(frozen=True)
class BoundsReport:
    c_observed: float
    D_observed: float
    a_min: float
    a_max: float
    passed: bool


def _as_callable(f, variables):
    if isinstance(f, str):
        return Expression(f, variables)
    if not callable(f):
        raise ValidationError(f"expected an expression string or callable, got {f!r}")
    names = variables
    return lambda **kw: f(*(kw[n] for n in names))


def constant(value, lower_bound=None, gradient_bound=None):
    if not value > 0:
        raise ValidationError(f"constant coefficient must be positive, got {value}")
    return CoefficientModel("constant", {"value": float(value)}, lower_bound, gradient_bound)


def piecewise_transverse(a_minus, a_plus, lower_bound=None, gradient_bound=None):
    """``a_minus`` for t < 0 and ``a_plus`` for t > 0 (constant on each half-tube)."""
    if not (a_minus > 0 and a_plus > 0):
        raise ValidationError("piecewise constants must be positive")
    payload = {"a_minus": float(a_minus), "a_plus": float(a_plus)}
    return CoefficientModel("piecewise_transverse", payload, lower_bound, gradient_bound)


def surface_times_profile(surface, profile, lower_bound=None, gradient_bound=None):
    """``a(s, t) = surface(s) * profile(t)`` in reference coordinates (eps-independent)."""
    payload = {
        "surface": _as_callable(surface, ("s",)),
        "profile": _as_callable(profile, ("t",)),
        "source": (str(surface), str(profile)),
    }
    return CoefficientModel("surface_times_profile", payload, lower_bound, gradient_bound)


def cartesian_field(fieldfunc, lower_bound=None, gradient_bound=None):
    """Plane field ``a(x, y)`` composed with the tube map."""
    payload = {"field": _as_callable(fieldfunc, ("x", "y")), "source": str(fieldfunc)}
    return CoefficientModel("cartesian_field", payload, lower_bound, gradient_bound)


def tabulated(x, y, values, lower_bound=None, gradient_bound=None, eps0=None):
    """Plane field sampled on a rectangular ``x`` by ``y`` grid (``values[i, j]`` at ``(x[i], y[j])``)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (len(x), len(y)):
        raise ValidationError(f"tabulated values shape {values.shape} does not match grid {(len(x), len(y))}")
    if np.any(values <= 0):
        raise ValidationError("tabulated coefficient must be positive")
    method = "cubic" if min(len(x), len(y)) >= 4 else "linear"
    interp = RegularGridInterpolator((x, y), values, method=method, bounds_error=True)
    payload = {"interp": interp, "x": x, "y": y, "values": values, "eps0": eps0}
    return CoefficientModel("tabulated", payload, lower_bound, gradient_bound)


def read_tabulated_csv(path, **kw):
    """Load a long-format CSV with header ``x,y,a`` covering a full grid."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(row for row in fh if not row.startswith("#"))]
    try:
        data = np.array([[float(r["x"]), float(r["y"]), float(r["a"])] for r in rows])
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"{path}: expected numeric columns x, y, a ({exc})") from None
    xs, ys = np.unique(data[:, 0]), np.unique(data[:, 1])
    if len(data) != len(xs) * len(ys):
        raise ValidationError(f"{path}: points do not form a full rectangular grid")
    grid = np.full((len(xs), len(ys)), np.nan)
    grid[np.searchsorted(xs, data[:, 0]), np.searchsorted(ys, data[:, 1])] = data[:, 2]
    return tabulated(xs, ys, grid, **kw)


def from_spec(spec, base_dir="."):
    """Build a model from a config entry such as ``{"type": "piecewise_t", ...}``."""
    spec = dict(spec)
    kind = spec.pop("type", None)
    bounds = {"lower_bound": spec.pop("c", None), "gradient_bound": spec.pop("D", None)}
    allowed = {
        "constant": {"value"},
        "piecewise_t": {"a_minus", "a_plus"},
        "cartesian": {"expr"},
        "surface_profile": {"surface", "profile"},
        "tabulated": {"file", "eps0"},
    }
    if kind not in allowed:
        raise ValidationError(f"coefficient.type: unknown value {kind!r}; expected one of {sorted(allowed)}")
    extra = set(spec) - allowed[kind]
    if extra:
        raise ValidationError(f"coefficient: unknown keys {sorted(extra)} for type {kind!r}")
    missing = allowed[kind] - set(spec) - {"eps0"}
    if missing:
        raise ValidationError(f"coefficient: missing keys {sorted(missing)} for type {kind!r}")
    if kind == "constant":
        return constant(spec["value"], **bounds)
    if kind == "piecewise_t":
        return piecewise_transverse(spec["a_minus"], spec["a_plus"], **bounds)
    if kind == "cartesian":
        return cartesian_field(spec["expr"], **bounds)
    if kind == "surface_profile":
        return surface_times_profile(spec["surface"], spec["profile"], **bounds)
    return read_tabulated_csv(Path(base_dir) / spec["file"], eps0=spec.get("eps0"), **bounds)


def eval_a(model, tube, s, t):
    """``a_eps(s, t) = a(c(s) + eps t n(s))`` on the reference domain.

    Piecewise kinds take the mean of the two constants exactly at ``t = 0``.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1 + 1e-12):
        raise ValidationError("evaluation outside the tube: |t| > 1")
    s, t = np.broadcast_arrays(s, t)
    p = model.payload
    if model.kind == "constant":
        return np.full(s.shape, p["value"])
    if model.kind == "piecewise_transverse":
        mid = 0.5 * (p["a_minus"] + p["a_plus"])
        return np.where(t < 0, p["a_minus"], np.where(t > 0, p["a_plus"], mid))
    if model.kind == "surface_times_profile":
        return np.asarray(p["surface"](s=s) * p["profile"](t=t), dtype=float)
    xy = tube_map(tube.geometry, tube.epsilon, s, t)
    if model.kind == "cartesian_field":
        return np.broadcast_to(np.asarray(p["field"](x=xy[..., 0], y=xy[..., 1]), dtype=float), s.shape).copy()
    try:
        return p["interp"](xy)
    except ValueError:
        raise ValidationError("tube leaves the tabulated grid") from None


def _gauss_halves(order, cells=2):
    if order < 2:
        raise ValidationError(f"quadrature_order must be >= 2, got {order}")
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-1.0, 1.0, cells + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + (x[None, :] + 1) * h[:, None] / 2).ravel()
    weights = (w[None, :] * h[:, None] / 2).ravel()
    return nodes, weights


def average_profile(model, tube, s, quadrature_order=8, cells=2):
    """``<a_eps>(s) = int_{-1}^{1} a_eps(s, t) f_eps(s, t) dt``.

    Composite Gauss-Legendre with ``cells`` equal transverse cells (even, so
    t = 0 is always a cell edge).
    """
    if cells % 2:
        raise ValidationError("cells must be even so the integral splits at t = 0")
    nodes, weights = _gauss_halves(quadrature_order, cells)
    s = np.asarray(s, dtype=float)
    ss = s[..., None]
    a = eval_a(model, tube, ss, nodes)
    f = 1.0 - tube.epsilon * nodes * tube.geometry.curvature_at(ss)
    return (a * f) @ weights


def _raw_mean_profile(model, geom):
    p = model.payload
    if model.kind == "constant":
        return lambda s: np.full(np.shape(s), p["value"])
    if model.kind == "piecewise_transverse":
        m = 0.5 * (p["a_minus"] + p["a_plus"])
        return lambda s: np.full(np.shape(s), m)
    if model.kind == "surface_times_profile":
        nodes, weights = _gauss_halves(32, 4)
        pbar = 0.5 * float(np.asarray(p["profile"](t=nodes)) @ weights)
        return lambda s: np.asarray(p["surface"](s=np.asarray(s, dtype=float)), dtype=float) * pbar
    if model.kind == "cartesian_field":
        def trace(s):
            xy = geom.point_at(s)
            return np.broadcast_to(np.asarray(p["field"](x=xy[..., 0], y=xy[..., 1]), dtype=float), np.shape(s))
        return trace
    return None


def effective_abar(model, geom, eps0=None, gate=1e-3):
    """The limit ``abar = lim <a_eps> / 2`` sampled on ``geom.s``.

    Closed forms for the built-in analytic kinds; tabulated data uses a
    three-level Richardson ladder ``eps0, eps0/2, eps0/4``.
    """
    func = _raw_mean_profile(model, geom)
    if func is not None:
        vals = np.asarray(func(geom.s), dtype=float)
        if np.any(vals <= 0):
            raise ValidationError("effective coefficient is not positive")
        return EffectiveCoefficient(geom.s, vals, geom.length, "analytic", func)

    if eps0 is None:
        eps0 = model.payload.get("eps0") or min(0.05, 0.25 * geom.rho)
    validate_tube(geom, eps0)
    ladder = [average_profile(model, TubeDescriptor(geom, eps0 / 2**k), geom.s) / 2 for k in range(3)]
    e1 = 2 * ladder[1] - ladder[0]
    e2 = 2 * ladder[2] - ladder[1]
    change = np.max(np.abs(e2 - e1)) / np.max(np.abs(e2))
    if change > gate:
        raise NumericalError(f"abar extrapolation not converged: relative change {change:.2e} > {gate:g}")
    vals = (4 * e2 - e1) / 3
    return EffectiveCoefficient(geom.s, vals, geom.length, "richardson-extrapolated")


def d_epsilon(model, tube, abar=None, quadrature_order=8):
    """``d(eps) = max_s |<a_eps>(s) - 2 abar(s)|`` over the curve samples."""
    geom = tube.geometry
    if abar is None:
        abar = effective_abar(model, geom)
    avg = average_profile(model, tube, geom.s, quadrature_order)
    return float(np.max(np.abs(avg - 2 * abar(geom.s))))


def verify_bounds(model, tube, grid=(256, 32)):
    """Scan ``a_eps`` on an ``(n_s, n_t)`` grid against the declared ``c`` and ``D``.

    Failures are reported through ``BoundsReport.passed``, never raised.
    """
    n_s, n_t = grid
    if n_s < 3 or n_t < 1:
        raise ValidationError("grid must have n_s >= 3 and n_t >= 1")
    geom = tube.geometry
    h = geom.length / n_s
    s = np.arange(n_s) * h
    t = np.linspace(-1.0, 1.0, n_t + 1)
    a = eval_a(model, tube, s[:, None], t[None, :])
    da = (np.roll(a, -1, axis=0) - np.roll(a, 1, axis=0)) / (2 * h)
    a_min, a_max = float(a.min()), float(a.max())
    c_obs = min(a_min, 1.0 / a_max)
    d_obs = float(np.max(np.abs(da)))
    ok = True
    if model.lower_bound is not None:
        ok &= c_obs >= model.lower_bound
    if model.gradient_bound is not None:
        ok &= d_obs <= model.gradient_bound
    return BoundsReport(c_obs, d_obs, a_min, a_max, bool(ok))


def abar_table(abar):
    """Columns s, abar for CSV dumps."""
    return np.column_stack([abar.s, abar.values])
