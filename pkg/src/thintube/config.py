"""Run configuration: JSON parsing, defaults and semantic validation."""
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import coefficient
from .errors import ValidationError
from .geometry import build_circle, build_flat, build_parametric, validate_tube

DEFAULTS = {
    "discretization": {"n_s": 256, "n_t": 32, "scale_with_epsilon": True},
    "sweep": {
        "epsilons": [0.2, 0.1, 0.05, 0.025],
        "k_eigen": 5,
        "tol": 1e-8,
        "norm_tol": 1e-8,
        "norm_max_iter": 500,
        "refine_levels": 3,
        "refine_epsilon": None,
        "probe": True,
    },
    "outputs": {"dir": "out", "formats": ["csv", "json"], "dump_matrices": False},
    "seed": 0,
}
_TOP = {"geometry", "coefficient", "discretization", "sweep", "outputs", "seed"}
_GEOMETRY = {
    "circle": {"radius", "n_samples"},
    "flat": {"length", "n_samples"},
    "fourier": {"cos_x", "sin_x", "cos_y", "sin_y", "n_samples"},
}
_FORMATS = {"csv", "json", "svg"}


@dataclass
class RunConfig:
    geometry: dict
    coefficient: dict
    discretization: dict
    sweep: dict
    outputs: dict
    seed: int = 0
    base_dir: Path = field(default=Path("."), repr=False)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def n_s(self):
        return self.discretization["n_s"]

    @property
    def n_t(self):
        return self.discretization["n_t"]

    @property
    def epsilons(self):
        return list(self.sweep["epsilons"])

    def as_dict(self):
        return {
            "geometry": self.geometry,
            "coefficient": self.coefficient,
            "discretization": self.discretization,
            "sweep": self.sweep,
            "outputs": self.outputs,
            "seed": self.seed,
        }

    def load_geometry(self):
        return geometry_from_spec(self.geometry)

    def load_coefficient(self):
        return coefficient.from_spec(self.coefficient, self.base_dir)


def geometry_from_spec(spec):
    """Build a curve from ``{"type": "circle" | "flat" | "fourier", ...}``."""
    spec = dict(spec)
    kind = spec.pop("type", None)
    if kind not in _GEOMETRY:
        raise ValidationError(f"geometry.type: unknown value {kind!r}; expected one of {sorted(_GEOMETRY)}")
    extra = set(spec) - _GEOMETRY[kind]
    if extra:
        raise ValidationError(f"geometry: unknown keys {sorted(extra)} for type {kind!r}")
    if kind == "circle":
        if "radius" not in spec:
            raise ValidationError("geometry.radius is required for a circle")
        return build_circle(float(spec["radius"]), int(spec.get("n_samples", 256)))
    if kind == "flat":
        if "length" not in spec:
            raise ValidationError("geometry.length is required for a flat strip")
        return build_flat(float(spec["length"]), int(spec.get("n_samples", 256)))
    n = int(spec.pop("n_samples", 1024))
    return build_parametric(spec, n)


def _merge(section, given, defaults):
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ValidationError(f"{section}: expected an object")
    extra = set(given) - set(defaults)
    if extra:
        raise ValidationError(f"{section}: unknown keys {sorted(extra)}")
    out = dict(defaults)
    out.update(given)
    return out


def _positive_int(name, v, minimum=1):
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {v!r}")
    return v


def build_config(data, base_dir=".", check_admissible=True):
    """Validate a parsed config mapping and fill defaults."""
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    extra = set(data) - _TOP
    if extra:
        raise ValidationError(f"unknown top-level keys {sorted(extra)}")
    if "geometry" not in data:
        raise ValidationError("geometry is required")
    geom = data["geometry"]
    if not isinstance(geom, dict):
        raise ValidationError("geometry: expected an object")
    coef = data.get("coefficient", {"type": "constant", "value": 1.0})
    disc = _merge("discretization", data.get("discretization"), DEFAULTS["discretization"])
    sweep = _merge("sweep", data.get("sweep"), DEFAULTS["sweep"])
    outputs = _merge("outputs", data.get("outputs"), DEFAULTS["outputs"])
    seed = data.get("seed", DEFAULTS["seed"])

    _positive_int("discretization.n_s", disc["n_s"], 8)
    _positive_int("discretization.n_t", disc["n_t"], 2)
    if disc["n_t"] % 2:
        raise ValidationError(f"discretization.n_t must be even, got {disc['n_t']}")
    eps = sweep["epsilons"]
    if not isinstance(eps, list) or not eps:
        raise ValidationError("sweep.epsilons must be a non-empty list")
    for e in eps:
        if isinstance(e, bool) or not isinstance(e, (int, float)) or not e > 0:
            raise ValidationError(f"sweep.epsilons entries must be positive numbers, got {e!r}")
    if len(set(eps)) != len(eps):
        raise ValidationError("sweep.epsilons contains duplicates")
    sweep["epsilons"] = sorted((float(e) for e in eps), reverse=True)
    _positive_int("sweep.k_eigen", sweep["k_eigen"], 1)
    _positive_int("sweep.refine_levels", sweep["refine_levels"], 1)
    _positive_int("sweep.norm_max_iter", sweep["norm_max_iter"], 1)
    for key in ("tol", "norm_tol"):
        if not isinstance(sweep[key], (int, float)) or not sweep[key] > 0:
            raise ValidationError(f"sweep.{key} must be positive, got {sweep[key]!r}")
    fmts = outputs["formats"]
    if not isinstance(fmts, list) or set(fmts) - _FORMATS:
        raise ValidationError(f"outputs.formats must be a subset of {sorted(_FORMATS)}")
    _positive_int("seed", seed, 0)

    cfg = RunConfig(geom, coef, disc, sweep, outputs, seed, Path(base_dir), data)
    g = cfg.load_geometry()
    cfg.load_coefficient()
    if check_admissible:
        for e in sweep["epsilons"]:
            validate_tube(g, e)
        if sweep["refine_epsilon"] is not None:
            validate_tube(g, sweep["refine_epsilon"])
    return cfg


def parse_config(path, check_admissible=True):
    """Read, validate and default a JSON config file.

    Raises
    ------
    ValidationError
        On malformed JSON (with line and column) or any semantic problem.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: JSON parse error: {exc.msg}") from None
    return build_config(data, path.parent, check_admissible)


def check_output_dir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise ValidationError(f"output directory {path} is not writable")
    return path
