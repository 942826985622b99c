"""Backend selection for the hot kernels.

The compiled extension is used when importable; setting the environment
variable ``THINTUBE_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

import numpy as np

from . import _kernels_py

python_backend = _kernels_py
compiled_backend = None

if not os.environ.get("THINTUBE_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if _active is compiled_backend else "python"


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def q1_cell_values(css, ctt, cm, hs, ht, backend=None):
    """Symmetric 4x4 Q1 element matrices (flattened) for every cell.

    ``css``, ``ctt``, ``cm`` hold the coefficients of the s-gradient, t-gradient
    and mass terms at the 2x2 Gauss points, shape ``(ncell, 4)``.
    """
    mod = backend or _active
    return np.asarray(mod.q1_cell_values(_c(css), _c(ctt), _c(cm), float(hs), float(ht)))


def first_segment_contact(p, q, window, tol, cyclic=True, backend=None):
    """First pair ``(i, j)`` of segments ``p[k]-q[k]`` closer than ``tol``.

    Pairs whose (cyclic) index distance is at most ``window`` are skipped.
    Returns ``(-1, -1)`` when all remaining pairs are disjoint.
    """
    mod = backend or _active
    i, j = mod.first_segment_contact(_c(p), _c(q), int(window), float(tol), bool(cyclic))
    return int(i), int(j)


def min_distant_gap(points, s, length, min_sep, backend=None):
    """Smallest distance between samples at least ``min_sep`` apart in arclength."""
    mod = backend or _active
    d, i, j = mod.min_distant_gap(_c(points), _c(s), float(length), float(min_sep))
    return float(d), int(i), int(j)
