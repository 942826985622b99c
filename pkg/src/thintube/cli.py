"""Command-line entry point: ``thintube <subcommand> --config run.json``."""
import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import config_digest, provenance_line, write_csv, write_json
from .assembly import assemble_all, build_mesh, write_coo
from .coefficient import abar_table, d_epsilon, effective_abar
from .config import check_output_dir, parse_config
from .errors import NumericalError, ValidationError
from .geometry import geometry_table, validate_tube
from .resolvent import band_limited_field, difference_operator_norm, lemma_ratio_probe
from .sweep import mesh_for_epsilon, mesh_refinement_study, run_sweep, thin_eigenvalues

SUBCOMMANDS = ("geometry-check", "eigen", "resolvent", "sweep", "refine")
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2, 64
NORM_COLUMNS = ["epsilon", "d_eps", "diff_norm", "r_perp", "r_transverse", "empirical_C"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="thintube", description="Thin-tube spectral lab.")
    p.add_argument("--version", action="version", version=f"thintube {__version__}")
    p.add_argument("subcommand", help="one of: " + ", ".join(SUBCOMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides outputs.dir)")
    p.add_argument("--seed", type=int, help="random seed (overrides config seed)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="parallel width for sweeps")
    return p


class _Run:
    """Per-invocation context: config, output directory and provenance."""

    def __init__(self, cfg, out):
        self.cfg = cfg
        self.out = out
        self.header = provenance_line(config_digest(cfg.as_dict()), cfg.seed)

    def csv(self, name, columns, rows):
        path = write_csv(self.out / name, columns, rows, self.header)
        print(f"wrote {path}")

    def json(self, name, payload):
        path = write_json(self.out / name, payload, self.header)
        print(f"wrote {path}")

    def wants(self, fmt):
        return fmt in self.cfg.outputs["formats"]


def _geometry_check(run):
    cfg = run.cfg
    geom = cfg.load_geometry()
    model = cfg.load_coefficient()
    run.csv("geometry.csv", ["s", "x", "y", "nx", "ny", "kappa"], geometry_table(geom))
    print(f"length={geom.length:.12e} rho={geom.rho:.12e}")
    for e in cfg.epsilons:
        validate_tube(geom, e)
        print(f"epsilon={e:g}: admissible")
    abar = effective_abar(model, geom)
    run.csv("abar.csv", ["s", "abar"], abar_table(abar))
    return EXIT_OK


def _eigen(run):
    cfg = run.cfg
    geom, model = cfg.load_geometry(), cfg.load_coefficient()
    abar = effective_abar(model, geom)
    eps = cfg.sweep["refine_epsilon"] or cfg.epsilons[0]
    n_s, n_t = mesh_for_epsilon(geom.length, eps, cfg.n_s, cfg.n_t, cfg.discretization["scale_with_epsilon"])
    res, forms = thin_eigenvalues(geom, model, abar, eps, n_s, n_t, cfg.sweep["k_eigen"], cfg.sweep["tol"],
                                  cfg.seed, keep_forms=True)
    run.csv("eigen.csv", ["k", "lambda", "residual"],
            [(i + 1, v, r) for i, (v, r) in enumerate(zip(res.values, res.residuals))])
    for i, v in enumerate(res.values):
        print(f"lambda_{i + 1} = {v:.12e}")
    if cfg.outputs["dump_matrices"]:
        for name in ("K_eps", "M_eps", "M_flat", "K_eff", "M_eff"):
            write_coo(run.out / f"{name}.coo", getattr(forms, name), run.header)
    return EXIT_OK


def _resolvent(run):
    cfg = run.cfg
    geom, model = cfg.load_geometry(), cfg.load_coefficient()
    abar = effective_abar(model, geom)
    rows = []
    for eps in cfg.epsilons:
        tube = validate_tube(geom, eps)
        n_s, n_t = mesh_for_epsilon(geom.length, eps, cfg.n_s, cfg.n_t, cfg.discretization["scale_with_epsilon"])
        forms = assemble_all(tube, model, abar, build_mesh(geom.length, n_s, n_t))
        est = difference_operator_norm(forms, tube, cfg.sweep["norm_tol"], cfg.sweep["norm_max_iter"], cfg.seed)
        G = band_limited_field(forms.mesh, cfg.seed, s_modes=cfg.n_s // 4, t_modes=max(cfg.n_t // 4, 1))
        r = lemma_ratio_probe(forms, tube, G)
        d = d_epsilon(model, tube, abar)
        rows.append((eps, d, est.norm, r["r_perp"], r["r_transverse"], est.norm / max(eps, d)))
        print(f"epsilon={eps:g} diff_norm={est.norm:.6e} iterations={est.iterations}")
    run.csv("resolvent.csv", NORM_COLUMNS, rows)
    return EXIT_OK


def _sweep(run, threads):
    rep = run_sweep(run.cfg, threads=threads)
    k = run.cfg.sweep["k_eigen"]
    eig_rows, norm_rows = [], []
    for r in rep.rows:
        if r.eigen_errors is not None:
            for j in range(k):
                eig_rows.append((r.epsilon, j + 1, r.lambda_eps[j], rep.lambda_eff[j], r.eigen_errors[j],
                                 r.disc_estimate[j], bool(r.guard_ok[j])))
        norm_rows.append((r.epsilon, r.d_eps, r.diff_norm, r.ratios.get("r_perp"), r.ratios.get("r_transverse"),
                          r.diff_norm / max(r.epsilon, r.d_eps)))
    if run.wants("csv"):
        run.csv("sweep_eigen.csv", ["epsilon", "k", "lambda_eps", "lambda_eff", "error", "disc_estimate",
                                    "guard_ok"], eig_rows)
        run.csv("sweep_norms.csv", NORM_COLUMNS, norm_rows)
    if run.wants("json"):
        run.json("sweep.json", rep.as_dict())
    if run.wants("svg"):
        _plot(run, rep)
    for kk, fit in rep.eigen_fits.items():
        print(f"k={kk}: " + (f"slope={fit.slope:.4f} r2={fit.r2:.4f}" if hasattr(fit, "slope") else fit))
    flagged = [r for r in rep.rows if r.flagged]
    for r in flagged:
        print(f"epsilon={r.epsilon:g} flagged: {r.flagged}", file=sys.stderr)
    return EXIT_NUMERICAL if len(flagged) == len(rep.rows) else EXIT_OK


def _plot(run, rep):
    try:
        import matplotlib
        matplotlib.use("Agg")
        matplotlib.rcParams["svg.hashsalt"] = "thintube"
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping svg", file=sys.stderr)
        return
    eps = np.array(rep.epsilons)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for kk, fit in rep.eigen_fits.items():
        err = [r.eigen_errors[kk - 1] if r.eigen_errors is not None else np.nan for r in rep.rows]
        ax.loglog(eps, err, "o", label=f"|lambda_{kk} error|")
        if hasattr(fit, "slope"):
            ax.loglog(eps, np.exp(fit.intercept) * eps**fit.slope, "-", lw=0.8)
    ax.loglog(eps, [r.diff_norm for r in rep.rows], "s", label="resolvent difference norm")
    ax.set_xlabel("epsilon")
    ax.legend(fontsize=7)
    path = run.out / "sweep.svg"
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    head, _, body = path.read_text().partition("\n")
    path.write_text(f"{head}\n<!-- {run.header.lstrip('# ')} -->\n{body}")
    print(f"wrote {run.out / 'sweep.svg'}")


def _refine(run):
    tab = mesh_refinement_study(run.cfg)
    k = tab.values.shape[1]
    rows = [(i, ns, nt, h, *tab.values[i]) for i, (ns, nt, h) in enumerate(zip(tab.n_s, tab.n_t, tab.h_s))]
    run.csv("refinement.csv", ["level", "n_s", "n_t", "h_s"] + [f"lambda_{j + 1}" for j in range(k)], rows)
    if run.wants("json"):
        run.json("refinement.json", tab.as_dict())
    for j in range(k):
        print(f"lambda_{j + 1}: extrapolated={tab.extrapolated[j]:.12e} order={tab.observed_order[j]:.3f}")
    return EXIT_OK


def dispatch(subcommand, cfg, out=None, threads=1):
    """Run one subcommand; returns the process exit status."""
    if subcommand not in SUBCOMMANDS:
        print(f"unknown subcommand {subcommand!r}; expected one of {', '.join(SUBCOMMANDS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        run = _Run(cfg, check_output_dir(out or cfg.outputs["dir"]))
        if subcommand == "geometry-check":
            return _geometry_check(run)
        if subcommand == "eigen":
            return _eigen(run)
        if subcommand == "resolvent":
            return _resolvent(run)
        if subcommand == "sweep":
            return _sweep(run, threads)
        return _refine(run)
    except ValidationError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.subcommand not in SUBCOMMANDS:
        print(f"unknown subcommand {args.subcommand!r}; expected one of {', '.join(SUBCOMMANDS)}", file=sys.stderr)
        return EXIT_USAGE
    check = args.subcommand != "geometry-check"
    try:
        cfg = parse_config(args.config, check_admissible=check)
    except ValidationError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    return dispatch(args.subcommand, cfg, Path(args.out) if args.out else None, args.threads)


if __name__ == "__main__":
    sys.exit(main())
