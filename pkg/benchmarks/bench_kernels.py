"""Time the compiled and numpy kernel backends on representative inputs.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``
"""
import argparse
import timeit

import numpy as np

from thintube import kernels
from thintube.geometry import build_circle, build_parametric


def _cases():
    rng = np.random.default_rng(0)
    ncell = 1024 * 32
    css, ctt, cm = (rng.uniform(0.5, 2.0, (ncell, 4)) for _ in range(3))
    circle = build_circle(1.0, 1024)
    a = circle.points - 0.5 * circle.normal
    b = circle.points + 0.5 * circle.normal
    ellipse = build_parametric({"cos_x": [0.0, 2.0], "sin_y": [1.0]}, 1024)
    return {
        "q1_cell_values 1024x32": lambda be: kernels.q1_cell_values(css, ctt, cm, 0.01, 0.0625, backend=be),
        "first_segment_contact n=1024": lambda be: kernels.first_segment_contact(a, b, 3, 1e-12, backend=be),
        "min_distant_gap n=1024": lambda be: kernels.min_distant_gap(
            ellipse.points, ellipse.s, ellipse.length, 0.5 * ellipse.length / 2, backend=be),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        print("compiled backend not available; build with `pip install -e . --no-build-isolation`")
    print(f"{'kernel':32s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for name, fn in _cases().items():
        t_py = min(timeit.repeat(lambda: fn(kernels.python_backend), number=1, repeat=args.repeat))
        if kernels.compiled_backend is not None:
            t_c = min(timeit.repeat(lambda: fn(kernels.compiled_backend), number=1, repeat=args.repeat))
            print(f"{name:32s} {1e3 * t_py:12.2f} {1e3 * t_c:14.2f} {t_py / t_c:8.1f}")
        else:
            print(f"{name:32s} {1e3 * t_py:12.2f} {'-':>14s} {'-':>8s}")


if __name__ == "__main__":
    main()
