"""Pure numpy implementations of the compiled kernels.

Same signatures and results as ``_kernels``; used when the extension is not
built or ``THINTUBE_PURE_PYTHON`` is set.
"""
import numpy as np

_GP = np.array([(1 - 1 / np.sqrt(3)) / 2, (1 + 1 / np.sqrt(3)) / 2])


def _tables(hs, ht):
    ns = np.stack([1 - _GP, _GP], axis=1)  # ns[gauss, local]
    phi = np.zeros((4, 4))
    dps = np.zeros((4, 4))
    dpt = np.zeros((4, 4))
    for gi in range(2):
        for gj in range(2):
            g = 2 * gi + gj
            for a in range(4):
                asi, ati = a % 2, a // 2
                phi[g, a] = ns[gi, asi] * ns[gj, ati]
                dps[g, a] = (2 * asi - 1) / hs * ns[gj, ati]
                dpt[g, a] = ns[gi, asi] * (2 * ati - 1) / ht
    return phi, dps, dpt


def q1_cell_values(css, ctt, cm, hs, ht):
    phi, dps, dpt = _tables(hs, ht)
    w = 0.25 * hs * ht
    out = (np.einsum("cg,ga,gb->cab", css, dps, dps)
           + np.einsum("cg,ga,gb->cab", ctt, dpt, dpt)
           + np.einsum("cg,ga,gb->cab", cm, phi, phi))
    return w * out.reshape(len(css), 16)


def _seg_seg(a, b, c, d):
    """Distances between segment a-b (single) and segments c-d (arrays)."""
    def cross(o, p, q):
        return (p[..., 0] - o[..., 0]) * (q[..., 1] - o[..., 1]) - (p[..., 1] - o[..., 1]) * (q[..., 0] - o[..., 0])

    def pt_seg(p, u, v):
        dv = v - u
        l2 = np.einsum("...i,...i->...", dv, dv)
        lam = np.where(l2 > 0, np.einsum("...i,...i->...", p - u, dv) / np.where(l2 > 0, l2, 1), 0.0)
        lam = np.clip(lam, 0.0, 1.0)
        return np.linalg.norm(u + lam[..., None] * dv - p, axis=-1)

    a = np.broadcast_to(a, c.shape)
    b = np.broadcast_to(b, c.shape)
    tiny = 1e-12 * (np.sum((b - a) ** 2, axis=-1) + np.sum((d - c) ** 2, axis=-1))
    d1, d2 = cross(a, b, c), cross(a, b, d)
    d3, d4 = cross(c, d, a), cross(c, d, b)
    proper = (((d1 > tiny) & (d2 < -tiny)) | ((d1 < -tiny) & (d2 > tiny))) & (
        ((d3 > tiny) & (d4 < -tiny)) | ((d3 < -tiny) & (d4 > tiny))
    )
    m = np.minimum.reduce([pt_seg(a, c, d), pt_seg(b, c, d), pt_seg(c, a, b), pt_seg(d, a, b)])
    return np.where(proper, 0.0, m)


def first_segment_contact(p, q, window, tol, cyclic=True):
    n = len(p)
    for i in range(n):
        j = np.arange(i + window + 1, n)
        if cyclic:
            j = j[n - (j - i) > window]
        if len(j) == 0:
            continue
        hit = np.nonzero(_seg_seg(p[i], q[i], p[j], q[j]) <= tol)[0]
        if len(hit):
            return i, int(j[hit[0]])
    return -1, -1


def min_distant_gap(pts, s, length, min_sep):
    n = len(pts)
    best, bi, bj = np.inf, -1, -1
    for i in range(n - 1):
        sep = np.abs(s[i + 1:] - s[i])
        sep = np.minimum(sep, length - sep)
        ok = sep >= min_sep
        if not ok.any():
            continue
        d2 = np.sum((pts[i + 1:] - pts[i]) ** 2, axis=1)
        d2 = np.where(ok, d2, np.inf)
        k = int(np.argmin(d2))
        if d2[k] < best:
            best, bi, bj = d2[k], i, i + 1 + k
    return float(np.sqrt(best)), bi, bj
