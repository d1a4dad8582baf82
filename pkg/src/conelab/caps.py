"""Spherical caps on the gauge sphere, the decay function Phi and related checks.

A cap ``B(xi0, s)`` collects the sphere points whose distance to the tangent
plane at ``xi0`` is below ``s``.  In the plane (d = 2) caps are arcs and are
measured exactly: the two endpoints come from bisection on the monotone
tangent-distance profile and the length from a composite Gauss-Legendre
arclength table.  In higher dimension caps are measured by summing surface
quadrature weights of member nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import geometry as geo
from .errors import DomainError, ResolutionError
from .geometry import DistanceFunction, SpherePoint

TWO_PI = 2 * np.pi


def default_r_grid() -> np.ndarray:
    """Log grid on [2^-10, 2^14] with 8 points per octave."""
    return 2.0 ** (np.arange(-80, 113) / 8.0)


@dataclass(frozen=True, eq=False)
class CapQuery:
    base: SpherePoint
    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError("cap height must be positive")


@dataclass(frozen=True, eq=False)
class PhiProfile:
    direction: np.ndarray
    value: float
    r_grid: np.ndarray
    argmax_r: float
    supremand: np.ndarray


class PlaneCurve:
    """Arclength bookkeeping for a gauge circle ``zeta(theta) = u(theta) / rho(u)``."""

    def __init__(self, df: DistanceFunction, panels: int = 512, order: int = 16):
        if df.d != 2:
            raise DomainError("PlaneCurve needs a planar gauge")
        self.df = df
        self.panels = panels
        self.h = TWO_PI / panels
        x, w = np.polynomial.legendre.leggauss(order)
        self._gl_x = 0.5 * (x + 1.0)
        self._gl_w = 0.5 * w
        edges = self.h * np.arange(panels)
        pts = edges[:, None] + self.h * self._gl_x[None, :]
        seg = self.h * (self.speed(pts) * self._gl_w).sum(axis=1)
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.perimeter = float(self._cum[-1])

    def speed(self, theta) -> np.ndarray:
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return np.linalg.norm(self.df.gradient(u), axis=-1) / self.df(u) ** 2

    def point(self, theta) -> np.ndarray:
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return u / self.df(u)[..., None]

    def arclength(self, theta) -> np.ndarray:
        """Arclength from angle 0 to (unwrapped) angle ``theta``."""
        theta = np.asarray(theta, dtype=float)
        wraps = np.floor(theta / TWO_PI)
        tr = theta - TWO_PI * wraps
        m = np.minimum((tr // self.h).astype(int), self.panels - 1)
        start = m * self.h
        width = tr - start
        pts = start[..., None] + width[..., None] * self._gl_x
        part = width * (self.speed(pts) * self._gl_w).sum(axis=-1)
        return wraps * self.perimeter + self._cum[m] + part


@lru_cache(maxsize=32)
def plane_curve(df: DistanceFunction) -> PlaneCurve:
    return PlaneCurve(df)


def _angle(p: np.ndarray) -> np.ndarray:
    return np.arctan2(p[..., 1], p[..., 0])


def _arc_caps(df: DistanceFunction, base: np.ndarray, normal: np.ndarray, s: np.ndarray,
              iterations: int = 64) -> np.ndarray:
    """Exact cap lengths for base points ``(m, 2)`` and heights ``(m, k)``."""
    curve = plane_curve(df)
    anti = geo.gauss_points(df, -normal)
    width = np.einsum("ij,ij->i", base - anti, normal)
    th0 = _angle(base)
    hi_end = th0 + np.mod(_angle(anti) - th0, TWO_PI)
    lo_end = hi_end - TWO_PI
    s = np.broadcast_to(s, (base.shape[0], np.shape(s)[-1])).astype(float)

    def profile(theta):
        pts = curve.point(theta)
        return np.einsum("mkj,mj->mk", base[:, None, :] - pts, normal)

    ends = []
    for far in (hi_end, lo_end):
        near = np.broadcast_to(th0[:, None], s.shape).copy()
        far_b = np.broadcast_to(far[:, None], s.shape).copy()
        for _ in range(iterations):
            mid = 0.5 * (near + far_b)
            inside = profile(mid) < s
            near = np.where(inside, mid, near)
            far_b = np.where(inside, far_b, mid)
        ends.append(0.5 * (near + far_b))
    length = curve.arclength(ends[0]) - curve.arclength(ends[1])
    return np.where(s >= width[:, None], curve.perimeter, length)


def _node_caps(df, base, normal, s, resolution):
    nodes = geo.parametrize_sphere(df, resolution)
    dist = np.einsum("mnj,mj->mn", base[:, None, :] - nodes.positions[None], normal)
    return np.stack([(nodes.weights * (dist < sk[:, None])).sum(axis=1) for sk in s.T], axis=1)


def cap_measures(df: DistanceFunction, base, s, resolution: int = 256) -> np.ndarray:
    """Cap measures for several base points and heights.

    ``base`` is a SpherePoint or an ``(m, d)`` array of sphere points; ``s`` has
    shape ``(k,)`` or ``(m, k)``.  Returns an ``(m, k)`` array (or ``(k,)`` for a
    single SpherePoint).
    """
    single = isinstance(base, SpherePoint)
    pos = np.atleast_2d(base.position if single else np.asarray(base, dtype=float))
    nrm = geo.unit_normals(df, pos)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if s.ndim == 1:
        s = np.broadcast_to(s, (pos.shape[0], s.size))
    if df.d == 2:
        out = _arc_caps(df, pos, nrm, s)
    else:
        out = _node_caps(df, pos, nrm, s, resolution)
    return out[0] if single else out


def cap_measure(df: DistanceFunction, q: CapQuery, resolution: int = 256) -> float:
    """Surface measure of ``{zeta : tangent_distance(zeta, q.base) < q.s}``."""
    return float(cap_measures(df, q.base, [q.s], resolution)[0])


def phi_values(df: DistanceFunction, directions, r_grid=None, chunk: int = 256):
    """Phi at many directions; returns ``(values, argmax_r, supremand)``."""
    r = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    base = geo.gauss_points(df, dirs)
    weight = (1 + r) ** ((df.d - 1) / 2)
    sup = np.empty((len(dirs), r.size))
    for i in range(0, len(dirs), chunk):
        sup[i:i + chunk] = cap_measures(df, base[i:i + chunk], 1.0 / r) * weight
    idx = np.argmax(sup, axis=1)
    return sup[np.arange(len(dirs)), idx], r[idx], sup


def phi(df: DistanceFunction, theta, r_grid=None) -> PhiProfile:
    """Discrete sup over r of ``cap(xi(r theta), 1/r) * (1 + r)^((d-1)/2)``."""
    r = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    val, arg, sup = phi_values(df, theta[None], r)
    return PhiProfile(theta, float(val[0]), r, float(arg[0]), sup[0])


class PhiTable:
    """Phi tabulated over directions, for cheap repeated evaluation.

    In the plane the table is on a uniform angle grid with periodic linear
    interpolation; in higher dimension the nearest tabulated direction is used.
    """

    def __init__(self, df: DistanceFunction, resolution: int = 512, r_grid=None):
        self.df = df
        self.directions, _ = geo.sphere_directions(df.d, resolution)
        self.values = phi_values(df, self.directions, r_grid)[0]

    def __call__(self, directions) -> np.ndarray:
        dirs = np.asarray(directions, dtype=float)
        if self.df.d == 2:
            n = len(self.values)
            a = np.mod(_angle(dirs), TWO_PI) * n / TWO_PI
            i0 = np.floor(a).astype(int) % n
            f = a - np.floor(a)
            return (1 - f) * self.values[i0] + f * self.values[(i0 + 1) % n]
        unit = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)
        return self.values[np.argmax(unit @ self.directions.T, axis=-1)]


@lru_cache(maxsize=16)
def phi_table(df: DistanceFunction, resolution: int = 512) -> PhiTable:
    return PhiTable(df, resolution)


def _max_stretch(df: DistanceFunction) -> float:
    nodes = geo.parametrize_sphere(df, 512)
    r = df(nodes.directions)
    g = np.linalg.norm(df.gradient(nodes.directions), axis=1)
    if df.d == 2:
        return float(np.max(g / r**2))
    zn = np.linalg.norm(nodes.positions, axis=1)
    return float(np.max((1 + zn * g) / r))


def required_fourier_resolution(df: DistanceFunction, x) -> int:
    """Nodes needed so that adjacent nodes differ in phase by at most 2 pi / 16."""
    xn = float(np.linalg.norm(x))
    n = int(np.ceil(16 * xn * _max_stretch(df)))
    return max(256, 64 * int(np.ceil(n / 64)))


def surface_fourier(df: DistanceFunction, x, resolution: int | None = None,
                    max_resolution: int = 1 << 16) -> complex:
    """Fourier transform of surface measure, ``int exp(-i <x, zeta>) dsigma``."""
    x = np.asarray(x, dtype=float)
    need = required_fourier_resolution(df, x)
    if resolution is None:
        if need > max_resolution:
            raise ResolutionError(f"|x| = {np.linalg.norm(x):.4g} exceeds the frequency limit", need)
        resolution = need
    elif resolution < need:
        raise ResolutionError("too few sphere nodes for this frequency", need)
    nodes = geo.parametrize_sphere(df, int(resolution))
    return complex(np.sum(nodes.weights * np.exp(-1j * (nodes.positions @ x))))


@dataclass(frozen=True, eq=False)
class DoublingReport:
    factors: np.ndarray
    ratios: np.ndarray  # (caps, factors)

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max())


def doubling_check(df: DistanceFunction, caps, factors, k: float = 2.0) -> DoublingReport:
    """Ratios ``cap(gs) / (g^e cap(s))`` with e = (d-1)/2 above 1 and (d-1)/k below."""
    factors = np.asarray(factors, dtype=float)
    exps = np.where(factors >= 1, (df.d - 1) / 2, (df.d - 1) / k)
    rows = []
    for c in caps:
        m = cap_measures(df, c.base, np.concatenate([[c.s], c.s * factors]))
        rows.append(m[1:] / (factors**exps * m[0]))
    return DoublingReport(factors, np.array(rows))


def comparability_check(df: DistanceFunction, cap: CapQuery, samples) -> float:
    """Worst two-sided ratio between caps of equal height at the base and at samples."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    m0 = cap_measure(df, cap)
    m = cap_measures(df, samples, [cap.s])[:, 0]
    return float(np.max(np.maximum(m0 / m, m / m0)))


def sample_in_cap(df: DistanceFunction, cap: CapQuery, n: int, rng: np.random.Generator):
    """Sphere points drawn from inside ``cap`` (planar: uniform in angle across the arc)."""
    if df.d == 2:
        curve = plane_curve(df)
        th0 = float(_angle(cap.base.position))
        span = np.linspace(-np.pi, np.pi, 4097)
        pts = curve.point(th0 + span)
        inside = (cap.base.position - pts) @ cap.base.normal < cap.s
        lo, hi = span[inside].min(), span[inside].max()
        return curve.point(th0 + rng.uniform(lo, hi, n) * (1 - 1e-9))
    nodes = geo.parametrize_sphere(df, 64)
    dist = (cap.base.position - nodes.positions) @ cap.base.normal
    pool = nodes.positions[dist < cap.s]
    return pool[rng.integers(0, len(pool), n)]


def lemma22_samples(rng: np.random.Generator, n: int, d: int, x_max: float = 64.0):
    """Pairs (x, y) with |y| < s <= 1 and |x| >= 2 s."""
    s = rng.uniform(1e-3, 1.0, n)
    y = rng.normal(size=(n, d))
    y *= (s * rng.uniform(0, 1, n) ** (1 / d) / np.linalg.norm(y, axis=1))[:, None]
    x = rng.normal(size=(n, d))
    xn = np.exp(rng.uniform(np.log(2 * s), np.log(x_max)))
    x *= (xn / np.linalg.norm(x, axis=1))[:, None]
    return x, y


def lemma22_check(df: DistanceFunction, x, y) -> float:
    """Smallest C with tangent_distance(xi(x - y), xi(x)) <= C / |x| over the samples."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    zx = geo.gauss_points(df, x)
    zxy = geo.gauss_points(df, x - y)
    nx = geo.unit_normals(df, zx)
    td = np.einsum("ij,ij->i", zx - zxy, nx)
    return float(np.max(np.linalg.norm(x, axis=1) * np.maximum(td, 0.0)))


def lemma23_samples(rng: np.random.Generator, n: int, d: int):
    """Pairs with |x| > 2|y| > 0."""
    x = rng.normal(size=(n, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y = rng.normal(size=(n, d))
    y *= (rng.uniform(1e-3, 0.5, n) / np.linalg.norm(y, axis=1) * (1 - 1e-9))[:, None]
    scale = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), n))[:, None]
    return x * scale, y * scale


def lemma23_check(df: DistanceFunction, x, y, r_grid=None) -> float:
    """Smallest C with Phi((x - y)/|x - y|) <= C Phi(x/|x|) over the samples."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    a = phi_values(df, x - y, r_grid)[0]
    b = phi_values(df, x, r_grid)[0]
    return float(np.max(a / b))


def phi_lp_norm(df: DistanceFunction, p: float, resolution: int = 512, r_grid=None) -> float:
    """Discrete L^p(S^{d-1}) norm of Phi.

    Uses the half-step shifted angle grid so that no node sits exactly on a
    flat direction, where Phi is infinite and the r grid would only report its
    truncated value.
    """
    if not 0 < p <= 2:
        raise DomainError("p must lie in (0, 2]")
    u, w = geo.sphere_directions(df.d, resolution, offset=0.5)
    vals = phi_values(df, u, r_grid)[0]
    return float(np.sum(w * vals**p) ** (1 / p))
