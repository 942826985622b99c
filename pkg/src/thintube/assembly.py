"""Tensor-product finite elements on the reference domain ``Sigma x (-1, 1)``.

Nodes are numbered s-major: node ``(i, j)`` has index ``i * (n_t + 1) + j``
with ``i`` periodic in ``0 .. n_s - 1`` and ``j`` in ``0 .. n_t`` (both
``t = -1`` and ``t = 1`` are nodes; Neumann conditions need no elimination).
"""
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import kernels
from .coefficient import eval_a
from .errors import NumericalError, ValidationError

_GP = np.array([(1 - 1 / np.sqrt(3)) / 2, (1 + 1 / np.sqrt(3)) / 2])


@dataclass(frozen=True)
class TensorMesh:
    length: float
    n_s: int
    n_t: int

    @property
    def h_s(self):
        return self.length / self.n_s

    @property
    def h_t(self):
        return 2.0 / self.n_t

    @property
    def n_nodes(self):
        return self.n_s * (self.n_t + 1)

    @property
    def s_nodes(self):
        return np.arange(self.n_s) * self.h_s

    @property
    def t_nodes(self):
        return np.linspace(-1.0, 1.0, self.n_t + 1)

    def node_grid(self):
        """``(S, T)`` arrays of shape ``(n_s, n_t + 1)``."""
        return np.meshgrid(self.s_nodes, self.t_nodes, indexing="ij")

    def t_weights(self):
        """Row sums of the 1D transverse mass matrix (exact integrals of the hat functions)."""
        w = np.full(self.n_t + 1, self.h_t)
        w[[0, -1]] = self.h_t / 2
        return w

    def gauss_points(self):
        """Gauss points per cell, each of shape ``(n_s * n_t, 4)``, cell-major."""
        i = np.arange(self.n_s)[:, None, None]
        j = np.arange(self.n_t)[None, :, None]
        gi = np.repeat(_GP, 2)[None, None, :]
        gj = np.tile(_GP, 2)[None, None, :]
        s = np.broadcast_to((i + gi) * self.h_s, (self.n_s, self.n_t, 4))
        t = np.broadcast_to(-1.0 + (j + gj) * self.h_t, (self.n_s, self.n_t, 4))
        return s.reshape(-1, 4), t.reshape(-1, 4)

    def cell_nodes(self):
        """Global indices of the 4 local nodes of every cell, shape ``(n_s * n_t, 4)``."""
        i = np.arange(self.n_s)[:, None]
        j = np.arange(self.n_t)[None, :]
        m = self.n_t + 1
        ip = (i + 1) % self.n_s
        loc = [i * m + j, ip * m + j, i * m + j + 1, ip * m + j + 1]
        return np.stack([np.broadcast_to(x, (self.n_s, self.n_t)) for x in loc], axis=-1).reshape(-1, 4)


def build_mesh(length, n_s, n_t):
    """Uniform periodic-in-s mesh; ``n_t`` must be even so t = 0 is a mesh line."""
    if n_s < 8:
        raise ValidationError(f"n_s must be >= 8, got {n_s}")
    if n_t < 2 or n_t % 2:
        raise ValidationError(f"n_t must be even and >= 2, got {n_t}")
    if not length > 0:
        raise ValidationError(f"length must be positive, got {length}")
    return TensorMesh(float(length), int(n_s), int(n_t))


@dataclass(eq=False)
class DiscreteForms:
    """Assembled sparse matrices (CSR) for one tube, coefficient and mesh.

    Thin part: ``K_eps`` (form Q_eps), ``M_eps`` (weight f_eps), ``M_flat``
    (weight 1), ``B_half`` (weight f_eps^(1/2), the load of the resolvent
    sandwich), ``G_s``/``G_t`` (flat squared s- and t-gradient norms).
    Effective part: ``K_eff``, ``M_eff`` on the periodic s-mesh.
    """

    mesh: TensorMesh
    tube: object = None
    model: object = None
    abar: object = None
    K_eps: sp.csr_matrix = None
    M_eps: sp.csr_matrix = None
    M_flat: sp.csr_matrix = None
    B_half: sp.csr_matrix = None
    G_s: sp.csr_matrix = None
    G_t: sp.csr_matrix = None
    K_eff: sp.csr_matrix = None
    M_eff: sp.csr_matrix = None
    cache: dict = field(default_factory=dict, repr=False)

    def merged(self, other):
        """Fill this object's empty slots from ``other``."""
        upd = {k: getattr(other, k) for k in ("tube", "model", "abar", "K_eps", "M_eps", "M_flat",
                                              "B_half", "G_s", "G_t", "K_eff", "M_eff")
               if getattr(self, k) is None and getattr(other, k) is not None}
        return replace(self, cache={}, **upd)


def _q1_matrix(mesh, conn, rows, cols, css, ctt, cm):
    vals = kernels.q1_cell_values(css, ctt, cm, mesh.h_s, mesh.h_t)
    a = sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes)).tocsr()
    a.sum_duplicates()
    return a


def assemble_thin(tube, model, mesh):
    """Q1 matrices of the thin form on the reference domain.

    ``Q_eps[u] = int a_eps [ f^-2 |d_s u|^2 + eps^-2 |d_t u|^2 ] f ds dt`` with
    ``f = 1 - eps t kappa``, evaluated at 2x2 Gauss points per cell.
    """
    geom = tube.geometry
    if abs(mesh.length - geom.length) > 1e-12 * geom.length:
        raise ValidationError("mesh length does not match the curve length")
    eps = tube.epsilon
    s, t = mesh.gauss_points()
    f = 1.0 - eps * t * geom.curvature_at(s)
    if np.any(f <= 0):
        raise NumericalError("non-positive Jacobian at a quadrature point")
    a = eval_a(model, tube, s, t)
    conn = mesh.cell_nodes()
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    zero = np.zeros_like(f)
    one = np.ones_like(f)
    q = lambda css, ctt, cm: _q1_matrix(mesh, conn, rows, cols, css, ctt, cm)  # noqa: E731
    return DiscreteForms(
        mesh=mesh,
        tube=tube,
        model=model,
        K_eps=q(a / f, a * f / eps**2, zero),
        M_eps=q(zero, zero, f),
        M_flat=q(zero, zero, one),
        B_half=q(zero, zero, np.sqrt(f)),
        G_s=q(one, zero, zero),
        G_t=q(zero, one, zero),
    )


def periodic_p1(n, h, coef_mid):
    """Stiffness (with cell coefficients) and consistent mass of periodic P1 on n cells."""
    i = np.arange(n)
    ip = (i + 1) % n
    rows = np.concatenate([i, i, ip, ip])
    cols = np.concatenate([i, ip, i, ip])
    k = coef_mid / h
    kv = np.concatenate([k, -k, -k, k])
    mv = np.concatenate([np.full(n, h / 3), np.full(n, h / 6), np.full(n, h / 6), np.full(n, h / 3)])
    K = sp.coo_matrix((kv, (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((mv, (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def assemble_effective(geom, abar, mesh):
    """Periodic P1 matrices of ``int abar |phi'|^2 ds`` and ``int |phi|^2 ds``.

    ``mesh`` is a TensorMesh (its s-grid is used) or a cell count.
    ``abar`` is evaluated at cell midpoints.
    """
    if not isinstance(mesh, TensorMesh):
        mesh = TensorMesh(geom.length, int(mesh), 2)
    h = mesh.h_s
    mid = (np.arange(mesh.n_s) + 0.5) * h
    am = np.asarray(abar(mid), dtype=float)
    if np.any(am <= 0):
        raise ValidationError("effective coefficient must be positive")
    K, M = periodic_p1(mesh.n_s, h, am)
    return DiscreteForms(mesh=mesh, abar=abar, K_eff=K, M_eff=M)


def assemble_all(tube, model, abar, mesh):
    """Thin and effective matrices on one mesh."""
    return assemble_thin(tube, model, mesh).merged(assemble_effective(tube.geometry, abar, mesh))


def _grid(mesh, v):
    v = np.asarray(v)
    if v.shape[0] != mesh.n_nodes:
        raise ValidationError(f"vector of length {v.shape[0]} does not match mesh with {mesh.n_nodes} nodes")
    return v.reshape((mesh.n_s, mesh.n_t + 1) + v.shape[1:])


def transverse_mean(mesh, v):
    """``(1/2) int v(s_i, t) dt`` per s-node, integrated exactly for P1 in t."""
    V = _grid(mesh, v)
    return np.tensordot(V, mesh.t_weights(), axes=([1], [0])) / 2


def embed(mesh, u):
    """Spread a per-s-node vector to a t-constant node vector."""
    u = np.asarray(u)
    return np.repeat(u, mesh.n_t + 1, axis=0)


def apply_projection_P0(mesh, v):
    """Projection onto t-constant fields, orthogonal in the flat mass inner product."""
    return embed(mesh, transverse_mean(mesh, v))


def apply_Ueps(tube, mesh, v, direction="forward"):
    """Multiply by ``f_eps^(1/2)`` (forward) or ``f_eps^(-1/2)`` (inverse) at the nodes."""
    if direction not in ("forward", "inverse"):
        raise ValidationError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    S, T = mesh.node_grid()
    f = 1.0 - tube.epsilon * T * tube.geometry.curvature_at(S)
    fac = np.sqrt(f) if direction == "forward" else 1.0 / np.sqrt(f)
    V = _grid(mesh, v)
    return (V * fac.reshape(fac.shape + (1,) * (V.ndim - 2))).reshape(np.shape(v))


def write_coo(path, matrix, header=None):
    """Dump a sparse matrix as ``row col value`` lines."""
    m = sp.coo_matrix(matrix)
    with open(path, "w") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        fh.write(f"# shape {m.shape[0]} {m.shape[1]} nnz {m.nnz}\n")
        for r, c, v in zip(m.row, m.col, m.data):
            fh.write(f"{r} {c} {v:.12e}\n")
