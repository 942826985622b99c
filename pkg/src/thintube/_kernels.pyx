# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Q1 element values and O(n^2) segment scans."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()

cdef double _G0 = 0.21132486540518713  # (1 - 1/sqrt 3) / 2
cdef double _G1 = 0.7886751345948129


def q1_cell_values(double[:, ::1] css, double[:, ::1] ctt, double[:, ::1] cm,
                   double hs, double ht):
    cdef Py_ssize_t ncell = css.shape[0]
    cdef double[:, ::1] out = np.zeros((ncell, 16))
    cdef double gp[2]
    cdef double ns[2][2]
    cdef double phi[4][4]
    cdef double dps[4][4]
    cdef double dpt[4][4]
    cdef double w = 0.25 * hs * ht
    cdef Py_ssize_t c, g, a, b, gi, gj, asi, ati
    gp[0] = _G0
    gp[1] = _G1
    for gi in range(2):
        ns[gi][0] = 1.0 - gp[gi]
        ns[gi][1] = gp[gi]
    for gi in range(2):
        for gj in range(2):
            g = 2 * gi + gj
            for a in range(4):
                asi = a % 2
                ati = a // 2
                phi[g][a] = ns[gi][asi] * ns[gj][ati]
                dps[g][a] = (2.0 * asi - 1.0) / hs * ns[gj][ati]
                dpt[g][a] = ns[gi][asi] * (2.0 * ati - 1.0) / ht
    cdef double s_, t_, m_
    for c in range(ncell):
        for g in range(4):
            s_ = w * css[c, g]
            t_ = w * ctt[c, g]
            m_ = w * cm[c, g]
            for a in range(4):
                for b in range(a, 4):
                    out[c, 4 * a + b] += (s_ * dps[g][a] * dps[g][b]
                                          + t_ * dpt[g][a] * dpt[g][b]
                                          + m_ * phi[g][a] * phi[g][b])
        for a in range(4):
            for b in range(a):
                out[c, 4 * a + b] = out[c, 4 * b + a]
    return np.asarray(out)


cdef inline double _cross(double ax, double ay, double bx, double by,
                          double cx, double cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


cdef inline double _pt_seg(double px, double py, double ax, double ay,
                           double bx, double by):
    cdef double dx = bx - ax, dy = by - ay
    cdef double l2 = dx * dx + dy * dy
    cdef double u = 0.0
    if l2 > 0.0:
        u = ((px - ax) * dx + (py - ay) * dy) / l2
        if u < 0.0:
            u = 0.0
        elif u > 1.0:
            u = 1.0
    dx = ax + u * dx - px
    dy = ay + u * dy - py
    return sqrt(dx * dx + dy * dy)


cdef double _seg_seg(double ax, double ay, double bx, double by,
                     double cx, double cy, double dx, double dy):
    # orientations below `tiny` count as collinear, not as a proper crossing
    cdef double tiny = 1e-12 * ((bx - ax) * (bx - ax) + (by - ay) * (by - ay)
                                + (dx - cx) * (dx - cx) + (dy - cy) * (dy - cy))
    cdef double d1 = _cross(ax, ay, bx, by, cx, cy)
    cdef double d2 = _cross(ax, ay, bx, by, dx, dy)
    cdef double d3 = _cross(cx, cy, dx, dy, ax, ay)
    cdef double d4 = _cross(cx, cy, dx, dy, bx, by)
    if ((d1 > tiny and d2 < -tiny) or (d1 < -tiny and d2 > tiny)) and \
       ((d3 > tiny and d4 < -tiny) or (d3 < -tiny and d4 > tiny)):
        return 0.0
    cdef double m = _pt_seg(ax, ay, cx, cy, dx, dy)
    m = min(m, _pt_seg(bx, by, cx, cy, dx, dy))
    m = min(m, _pt_seg(cx, cy, ax, ay, bx, by))
    m = min(m, _pt_seg(dx, dy, ax, ay, bx, by))
    return m


def first_segment_contact(double[:, ::1] p, double[:, ::1] q, Py_ssize_t window,
                          double tol, bint cyclic=True):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t i, j, d
    for i in range(n):
        for j in range(i + window + 1, n):
            d = j - i
            if cyclic and n - d <= window:
                continue
            if _seg_seg(p[i, 0], p[i, 1], q[i, 0], q[i, 1],
                        p[j, 0], p[j, 1], q[j, 0], q[j, 1]) <= tol:
                return i, j
    return -1, -1


def min_distant_gap(double[:, ::1] pts, double[::1] s, double length, double min_sep):
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t i, j, bi = -1, bj = -1
    cdef double best = INFINITY, sep, dx, dy, d2
    for i in range(n):
        for j in range(i + 1, n):
            sep = fabs(s[j] - s[i])
            if length - sep < sep:
                sep = length - sep
            if sep < min_sep:
                continue
            dx = pts[j, 0] - pts[i, 0]
            dy = pts[j, 1] - pts[i, 1]
            d2 = dx * dx + dy * dy
            if d2 < best:
                best = d2
                bi = i
                bj = j
    return sqrt(best), bi, bj
