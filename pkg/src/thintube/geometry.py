"""Closed plane curves, their curvature, and the tube chart around them.

Orientation convention: curves are stored counter-clockwise and the normal
is the Frenet (left) normal ``n = J t`` with ``J`` the rotation by +90
degrees. With this choice the signed curvature is ``kappa = <t', n>``, the
unit circle has ``kappa = +1``, the normal points to the inside, and the
Jacobian of ``(s, t) -> c(s) + eps t n(s)`` is ``1 - eps t kappa(s)``.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .errors import CurvatureOverlap, GeometryError, SelfIntersection, ValidationError

_T_SLACK = 1e-12


def _rot90(v):
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


@dataclass(frozen=True, eq=False)
class CurveGeometry:
    """Arclength-sampled closed plane curve.

    ``s[k] = k * length / n``; the sample at ``s = length`` is identified with
    ``s = 0``. ``kind == "flat"`` marks the synthetic periodic strip with
    zero curvature, which is not an embedded closed curve.
    """

    s: np.ndarray
    points: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray
    length: float
    kind: str = "curve"
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self):
        return len(self.s)

    @property
    def rho(self):
        kmax = float(np.max(np.abs(self.curvature)))
        return np.inf if kmax == 0.0 else 1.0 / kmax

    @property
    def closed(self):
        return self.kind != "flat"

    def _periodic(self, values):
        s = np.append(self.s, self.length)
        v = np.concatenate([values, values[:1]], axis=0)
        return CubicSpline(s, v, bc_type="periodic", axis=0)

    @cached_property
    def _kappa_spline(self):
        return self._periodic(self.curvature)

    @cached_property
    def _point_spline(self):
        return self._periodic(self.points)

    @cached_property
    def _normal_spline(self):
        return self._periodic(self.normal)

    def curvature_at(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.length)
        if self.kind in ("circle", "flat"):
            return np.full(np.shape(s), self.curvature[0])
        return self._kappa_spline(s)

    def point_at(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "flat":
            return np.stack([s, np.zeros_like(s)], axis=-1)
        return self._point_spline(np.mod(s, self.length))

    def normal_at(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "flat":
            return np.broadcast_to(np.array([0.0, 1.0]), s.shape + (2,)).copy()
        n = self._normal_spline(np.mod(s, self.length))
        return n / np.linalg.norm(n, axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class TubeDescriptor:
    """A curve together with an admissible half-width scale ``epsilon``.

    Only ``validate_tube`` should construct these.
    """

    geometry: CurveGeometry
    epsilon: float


def build_circle(radius, n_samples=256):
    """Circle of the given radius centred at the origin, starting at (radius, 0)."""
    if not radius > 0:
        raise ValidationError(f"radius must be positive, got {radius}")
    if n_samples < 16:
        raise ValidationError(f"n_samples must be >= 16, got {n_samples}")
    length = 2 * np.pi * radius
    s = np.arange(n_samples) * (length / n_samples)
    theta = s / radius
    c, sn = np.cos(theta), np.sin(theta)
    tangent = np.stack([-sn, c], axis=1)
    return CurveGeometry(
        s=s,
        points=radius * np.stack([c, sn], axis=1),
        tangent=tangent,
        normal=_rot90(tangent),
        curvature=np.full(n_samples, 1.0 / radius),
        length=float(length),
        kind="circle",
        meta={"radius": float(radius)},
    )


def build_flat(length, n_samples=256):
    """Synthetic periodic strip of the given length with zero curvature."""
    if not length > 0:
        raise ValidationError(f"length must be positive, got {length}")
    if n_samples < 16:
        raise ValidationError(f"n_samples must be >= 16, got {n_samples}")
    s = np.arange(n_samples) * (length / n_samples)
    ones = np.ones(n_samples)
    zeros = np.zeros(n_samples)
    return CurveGeometry(
        s=s,
        points=np.stack([s, zeros], axis=1),
        tangent=np.stack([ones, zeros], axis=1),
        normal=np.stack([zeros, ones], axis=1),
        curvature=zeros,
        length=float(length),
        kind="flat",
    )


@dataclass(frozen=True)
class FourierDescriptor:
    """Closed curve ``x(theta), y(theta)`` as truncated Fourier series.

    ``cos_x[k]`` multiplies ``cos(k theta)`` for ``k = 0, 1, ...``;
    ``sin_x[k]`` multiplies ``sin((k + 1) theta)``. Same for ``y``.
    """

    cos_x: tuple = ()
    sin_x: tuple = ()
    cos_y: tuple = ()
    sin_y: tuple = ()

    @classmethod
    def from_dict(cls, d):
        return cls(*(tuple(float(v) for v in d.get(k, ())) for k in ("cos_x", "sin_x", "cos_y", "sin_y")))

    def evaluate(self, theta, order=0):
        """Return the ``order``-th theta-derivative of the curve, shape (..., 2)."""
        theta = np.asarray(theta, dtype=float)
        out = []
        for ca, sa in ((self.cos_x, self.sin_x), (self.cos_y, self.sin_y)):
            v = np.zeros_like(theta)
            for k, a in enumerate(ca):
                v = v + a * k**order * np.cos(k * theta + order * np.pi / 2)
            for k, b in enumerate(sa, start=1):
                v = v + b * k**order * np.sin(k * theta + order * np.pi / 2)
            out.append(v)
        return np.stack(out, axis=-1)

    def reversed(self):
        neg = lambda c: tuple(-v for v in c)  # noqa: E731
        return FourierDescriptor(self.cos_x, neg(self.sin_x), self.cos_y, neg(self.sin_y))


def _arclength_map(desc, n_fine):
    """Spectral representation of s(theta) for the descriptor."""
    theta = np.arange(n_fine) * (2 * np.pi / n_fine)
    speed = np.linalg.norm(desc.evaluate(theta, 1), axis=1)
    coef = np.fft.rfft(speed) / n_fine
    c0 = coef[0].real
    k = np.arange(1, len(coef))
    a = 2 * coef[1:].real
    b = -2 * coef[1:].imag
    if n_fine % 2 == 0:
        a[-1] /= 2
        b[-1] = 0.0
    keep = np.abs(a) + np.abs(b) > 1e-17 * c0
    k, a, b = k[keep], a[keep], b[keep]

    def s_of(th):
        out = c0 * th
        for lo in range(0, len(th), 1024):
            kt = np.multiply.outer(th[lo:lo + 1024], k)
            out[lo:lo + 1024] += np.sin(kt) @ (a / k) - (np.cos(kt) - 1) @ (b / k)
        return out

    return s_of, 2 * np.pi * c0, speed


def build_parametric(descriptor, n_samples=1024, newton_tol=1e-14):
    """Resample a Fourier-described closed curve uniformly in arclength.

    Derivatives come from the Fourier series itself; arclength is integrated
    spectrally and inverted by Newton's method. Clockwise descriptors are
    reversed so the stored curve is counter-clockwise.
    """
    if isinstance(descriptor, dict):
        descriptor = FourierDescriptor.from_dict(descriptor)
    if n_samples < 16:
        raise ValidationError(f"n_samples must be >= 16, got {n_samples}")
    n_fine = max(16 * n_samples, 8192)
    theta = np.arange(n_fine) * (2 * np.pi / n_fine)
    d1 = descriptor.evaluate(theta, 1)
    speed = np.linalg.norm(d1, axis=1)
    if speed.min() <= 1e-8 * max(speed.max(), 1e-300):
        raise GeometryError("parametrization has vanishing speed")
    r = descriptor.evaluate(theta)
    area = 0.5 * np.mean(r[:, 0] * d1[:, 1] - r[:, 1] * d1[:, 0]) * 2 * np.pi
    if area < 0:
        descriptor = descriptor.reversed()

    s_of, length, _ = _arclength_map(descriptor, n_fine)
    targets = np.arange(n_samples) * (length / n_samples)
    s_fine = s_of(theta)
    th = np.interp(targets, np.append(s_fine, length), np.append(theta, 2 * np.pi))
    for _ in range(50):
        sp = np.linalg.norm(descriptor.evaluate(th, 1), axis=1)
        step = (s_of(th) - targets) / sp
        th = th - step
        if np.max(np.abs(step)) <= newton_tol:
            break
    else:
        raise GeometryError("arclength inversion did not converge")
    resid = np.max(np.abs(s_of(th) - targets)) / length
    if resid > 1e-10:
        raise GeometryError(f"arclength resampling residual {resid:.2e} exceeds 1e-10")

    p = descriptor.evaluate(th)
    v1 = descriptor.evaluate(th, 1)
    v2 = descriptor.evaluate(th, 2)
    sp = np.linalg.norm(v1, axis=1)
    tangent = v1 / sp[:, None]
    kappa = (v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0]) / sp**3

    i, j = kernels.first_segment_contact(p, np.roll(p, -1, axis=0), window=1, tol=1e-12 * length)
    if i >= 0:
        raise SelfIntersection(f"curve self-intersects near samples {i} and {j}")
    return CurveGeometry(
        s=targets,
        points=p,
        tangent=tangent,
        normal=_rot90(tangent),
        curvature=kappa,
        length=float(length),
        kind="fourier",
        meta={"descriptor": descriptor},
    )


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1 + _T_SLACK):
        raise ValidationError("transverse coordinate t must lie in [-1, 1]")
    return t


def jacobian_f(geom, epsilon, s, t):
    """Volume distortion ``1 - eps t kappa(s)`` of the tube chart."""
    t = _check_t(t)
    return 1.0 - epsilon * t * geom.curvature_at(s)


def tube_map(geom, epsilon, s, t):
    """Point ``c(s) + eps t n(s)`` in the plane, shape (..., 2)."""
    t = _check_t(t)
    return geom.point_at(s) + epsilon * t[..., None] * geom.normal_at(s)


def validate_tube(geom, epsilon, window=3):
    """Check ``eps < rho`` and sampled injectivity; return a TubeDescriptor.

    Injectivity is certified on the sample grid: cross-sections
    ``{c(s_k) + eps t n(s_k): |t| <= 1}`` must be pairwise disjoint for index
    distance above ``window``, and samples further apart than ``pi * rho``
    in arclength must stay at least ``2 eps`` apart.
    """
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    rho = geom.rho
    if epsilon >= rho:
        raise CurvatureOverlap(f"epsilon={epsilon} violates eps < rho = {rho:.6g}")
    if geom.closed:
        a = geom.points - epsilon * geom.normal
        b = geom.points + epsilon * geom.normal
        i, j = kernels.first_segment_contact(a, b, window=window, tol=1e-12 * geom.length)
        if i >= 0:
            raise SelfIntersection(
                f"cross-sections at s={geom.s[i]:.6g} and s={geom.s[j]:.6g} meet (epsilon={epsilon})"
            )
        min_sep = np.pi * rho
        if min_sep < geom.length / 2:
            gap, i, j = kernels.min_distant_gap(geom.points, geom.s, geom.length, min_sep)
            if gap < 2 * epsilon:
                raise SelfIntersection(
                    f"arcs at s={geom.s[i]:.6g} and s={geom.s[j]:.6g} are {gap:.6g} apart, "
                    f"closer than 2*epsilon={2 * epsilon:.6g}"
                )
    return TubeDescriptor(geometry=geom, epsilon=float(epsilon))


def geometry_table(geom):
    """Columns s, x, y, nx, ny, kappa for CSV dumps."""
    return np.column_stack([geom.s, geom.points, geom.normal, geom.curvature])
