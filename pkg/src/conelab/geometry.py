"""Homogeneous distance functions and the geometry of their unit spheres.

A gauge ``rho`` is positive, 1-homogeneous and smooth away from the origin.
Its unit sphere ``{rho = 1}`` is parametrized by radial projection of the
Euclidean sphere: a direction ``u`` maps to ``zeta = u / rho(u)``.  Under this
map the surface measure is ``|grad rho(u)| / rho(u)**d du`` and the cone
measure ``<zeta, n(zeta)> dsigma`` is ``du / rho(u)**d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np
from scipy import optimize, special

from .errors import DomainError, EvaluationError, FitError, SolverError
from .fitting import loglog_fit


class GaugeKind(str, Enum):
    EUCLIDEAN = "euclidean"
    LQ = "lq"
    CUSTOM = "custom"


@dataclass(frozen=True)
class DistanceFunction:
    """A 1-homogeneous gauge on R^d.

    Use the constructors :func:`euclidean`, :func:`lq_gauge` and :func:`custom`
    rather than building instances directly.  Custom gauges take callables that
    act on arrays of shape ``(..., d)``.
    """

    kind: GaugeKind
    d: int
    q: int | None = None
    rho_fn: Callable | None = None
    grad_fn: Callable | None = None
    name: str = ""

    def __post_init__(self):
        if self.d < 2:
            raise DomainError("dimension must be at least 2")
        if self.kind is GaugeKind.LQ and (self.q is None or self.q < 4 or self.q % 2):
            raise DomainError("lq gauge needs an even exponent q >= 4")
        if self.kind is GaugeKind.CUSTOM and self.rho_fn is None:
            raise DomainError("custom gauge needs a rho callable")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind is GaugeKind.LQ:
            return f"lq{self.q}"
        return self.kind.value

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.kind is GaugeKind.EUCLIDEAN:
            return np.linalg.norm(xi, axis=-1)
        if self.kind is GaugeKind.LQ:
            a = np.abs(xi)
            m = a.max(axis=-1)
            safe = np.where(m > 0, m, 1.0)
            s = np.sum((a / safe[..., None]) ** self.q, axis=-1)
            return np.where(m > 0, safe * s ** (1.0 / self.q), 0.0)
        out = np.asarray(self.rho_fn(xi), dtype=float)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"gauge {self.label} returned a non-finite value")
        return out

    def gradient(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if np.any(np.all(xi == 0, axis=-1)):
            raise DomainError("gauge is not differentiable at the origin")
        if self.kind is GaugeKind.EUCLIDEAN:
            return xi / np.linalg.norm(xi, axis=-1, keepdims=True)
        if self.kind is GaugeKind.LQ:
            r = self(xi)[..., None]
            return np.sign(xi) * (np.abs(xi) / r) ** (self.q - 1)
        if self.grad_fn is not None:
            out = np.asarray(self.grad_fn(xi), dtype=float)
            if not np.all(np.isfinite(out)):
                raise EvaluationError(f"gradient of {self.label} is not finite")
            return out
        return _central_gradient(self, xi)


def _central_gradient(df: DistanceFunction, xi: np.ndarray) -> np.ndarray:
    h = 1e-6 * np.linalg.norm(xi, axis=-1, keepdims=True)
    eye = np.eye(df.d)
    cols = [(df(xi + h * e) - df(xi - h * e)) / (2 * h[..., 0]) for e in eye]
    return np.stack(cols, axis=-1)


def euclidean(d: int = 2) -> DistanceFunction:
    return DistanceFunction(GaugeKind.EUCLIDEAN, d)


def lq_gauge(q: int = 4, d: int = 2) -> DistanceFunction:
    """The l^q norm; its unit sphere has contact order q at axis points."""
    return DistanceFunction(GaugeKind.LQ, d, q=q)


def custom(rho: Callable, grad: Callable | None = None, d: int = 2, name: str = "custom"):
    return DistanceFunction(GaugeKind.CUSTOM, d, rho_fn=rho, grad_fn=grad, name=name)


def rho_eval(df: DistanceFunction, xi) -> float:
    return float(df(np.asarray(xi, dtype=float)))


def rho_gradient(df: DistanceFunction, xi) -> np.ndarray:
    return df.gradient(np.asarray(xi, dtype=float))


def unit_normals(df: DistanceFunction, xi) -> np.ndarray:
    g = df.gradient(xi)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class SpherePoint:
    position: np.ndarray
    normal: np.ndarray
    weight: float = 0.0


@dataclass(frozen=True, eq=False)
class SphereNodes:
    """Quadrature nodes on the unit sphere of a gauge.

    ``directions`` are the Euclidean unit vectors that project onto
    ``positions``; ``angle_weights`` integrate over S^{d-1} and ``weights``
    integrate surface measure on the gauge sphere.
    """

    positions: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    directions: np.ndarray
    angle_weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, i) -> SpherePoint:
        return SpherePoint(self.positions[i], self.normals[i], float(self.weights[i]))

    def __iter__(self) -> Iterator[SpherePoint]:
        return (self[i] for i in range(len(self)))

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    @property
    def cone_weights(self) -> np.ndarray:
        """Weights for ``<zeta, n> dsigma``, i.e. ``du / rho(u)**d``."""
        return self.weights * np.einsum("ij,ij->i", self.positions, self.normals)


@dataclass(frozen=True, eq=False)
class UnitBallData:
    gamma: float
    nodes: SphereNodes


def sphere_directions(d: int, resolution: int, offset: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Product quadrature on the Euclidean sphere S^{d-1}.

    d = 2 uses the periodic trapezoid rule in the angle.  For d >= 3 the first
    coordinate z gets Gauss-Jacobi nodes for the weight (1 - z^2)^((d-3)/2) and
    the remaining coordinates recurse on S^{d-2}.  ``offset`` shifts the planar
    angles by that fraction of a grid step (0.5 gives the midpoint rule).
    """
    if d == 2:
        theta = 2 * np.pi * (np.arange(resolution) + offset) / resolution
        u = np.column_stack([np.cos(theta), np.sin(theta)])
        return u, np.full(resolution, 2 * np.pi / resolution)
    nz = max(resolution // 2, 4)
    alpha = (d - 3) / 2
    z, wz = special.roots_jacobi(nz, alpha, alpha)
    v, wv = sphere_directions(d - 1, resolution, offset)
    s = np.sqrt(1 - z**2)
    u = np.concatenate(
        [np.repeat(z, len(wv))[:, None], (s[:, None, None] * v[None]).reshape(-1, d - 1)],
        axis=1,
    )
    return u, np.outer(wz, wv).ravel()


def project_to_sphere(df: DistanceFunction, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return u / df(u)[..., None]


@lru_cache(maxsize=64)
def parametrize_sphere(df: DistanceFunction, resolution: int = 1024) -> SphereNodes:
    """Surface quadrature on ``{rho = 1}`` by radial projection.

    For d = 2 the rule is the trapezoid rule in the polar angle and converges
    spectrally for smooth gauges.
    """
    if resolution < 8:
        raise DomainError("resolution must be at least 8")
    u, wu = sphere_directions(df.d, resolution)
    r = df(u)
    g = df.gradient(u)
    gn = np.linalg.norm(g, axis=-1)
    positions = u / r[:, None]
    weights = wu * gn / r**df.d
    return SphereNodes(positions, g / gn[:, None], weights, u, wu)


def sphere_point(df: DistanceFunction, zeta) -> SpherePoint:
    """Wrap a point on the sphere (re-projected for safety) with its normal."""
    z = project_to_sphere(df, zeta)
    return SpherePoint(z, unit_normals(df, z))


def _closed_form_gauss(df: DistanceFunction, x: np.ndarray) -> np.ndarray:
    if df.kind is GaugeKind.EUCLIDEAN:
        return x / np.linalg.norm(x, axis=-1, keepdims=True)
    z = np.sign(x) * np.abs(x) ** (1.0 / (df.q - 1))
    return z / df(z)[..., None]


def gauss_points(df: DistanceFunction, x) -> np.ndarray:
    """Vectorized Gauss map: the points of the sphere with outer normal along ``x``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.all(x == 0, axis=-1)):
        raise DomainError("the Gauss map is undefined for x = 0")
    if df.kind is not GaugeKind.CUSTOM:
        return _closed_form_gauss(df, x)
    flat = x.reshape(-1, df.d)
    out = np.array([_newton_gauss(df, xi) for xi in flat])
    return out.reshape(x.shape)


def gauss_point(df: DistanceFunction, x) -> SpherePoint:
    """The supporting point of the sphere in direction ``x``."""
    z = gauss_points(df, np.asarray(x, dtype=float))
    return SpherePoint(z, unit_normals(df, z))


def _newton_gauss(df, x, tol=1e-10, max_iter=200, seed_resolution=256):
    xh = x / np.linalg.norm(x)
    nodes = parametrize_sphere(df, seed_resolution)
    z = nodes.positions[np.argmax(nodes.positions @ xh)].copy()
    mu = float(np.linalg.norm(df.gradient(z)))
    d = df.d
    best = np.inf
    for _ in range(max_iter):
        g = df.gradient(z)
        F = np.concatenate([g - mu * xh, [df(z) - 1.0]])
        res = float(np.linalg.norm(F))
        best = min(best, res)
        if res < tol:
            break
        h = 1e-6
        H = np.stack([(df.gradient(z + h * e) - df.gradient(z - h * e)) / (2 * h) for e in np.eye(d)], axis=1)
        J = np.zeros((d + 1, d + 1))
        J[:d, :d] = H
        J[:d, d] = -xh
        J[d, :d] = g
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        z = z + step[:d]
        mu += step[d]
        z = z / df(z)
    else:
        raise SolverError("Gauss map Newton iteration did not converge", best)
    if mu <= 0:
        raise SolverError("Gauss map converged to the opposite supporting point", best)
    return z


def tangent_distance(df: DistanceFunction, xi, xi0) -> np.ndarray | float:
    """Distance from ``xi`` to the tangent plane of the sphere at ``xi0``.

    ``xi0`` may be a SpherePoint or a position.  Nonnegative for convex spheres.
    """
    if isinstance(xi0, SpherePoint):
        p0, n0 = xi0.position, xi0.normal
    else:
        p0 = np.asarray(xi0, dtype=float)
        n0 = unit_normals(df, p0)
    xi = np.asarray(xi.position if isinstance(xi, SpherePoint) else xi, dtype=float)
    out = (p0 - xi) @ n0
    return float(out) if np.ndim(out) == 0 else out


def gamma_sup(df: DistanceFunction, resolution: int = 1024) -> UnitBallData:
    """Circumradius of the unit ball: max of |zeta| over the sphere."""
    nodes = parametrize_sphere(df, resolution)
    norms = np.linalg.norm(nodes.positions, axis=1)
    i = int(np.argmax(norms))
    if df.d == 2:
        th0 = np.arctan2(*nodes.directions[i][::-1])
        dth = 2 * np.pi / resolution

        def neg(th):
            u = np.array([np.cos(th), np.sin(th)])
            return -1.0 / df(u)

        res = optimize.minimize_scalar(neg, bounds=(th0 - dth, th0 + dth), method="bounded",
                                       options={"xatol": 1e-12})
        gamma = max(-res.fun, norms[i])
    else:
        def neg(u):
            return -np.linalg.norm(u) / df(u)

        res = optimize.minimize(neg, nodes.directions[i], method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        gamma = max(-res.fun, norms[i])
    return UnitBallData(float(gamma), nodes)


@lru_cache(maxsize=64)
def gamma_of(df: DistanceFunction) -> float:
    return gamma_sup(df).gamma


def _tangent_basis(n0: np.ndarray) -> np.ndarray:
    if n0.size == 2:
        return np.array([[-n0[1], n0[0]]])
    q, _ = np.linalg.qr(np.column_stack([n0, np.eye(n0.size)]))
    return q[:, 1:n0.size].T


def type_order(df: DistanceFunction, zeta, radii=None, direction=None) -> float:
    """Fitted contact order of the tangent plane at ``zeta``.

    Points are pushed off ``zeta`` along a tangent direction by ``w`` and
    projected back to the sphere; the exponent k in
    ``tangent_distance ~ c * chord**k`` is fitted on both sides at once, which
    cancels the odd-order bias at asymmetric points.
    """
    pt = zeta if isinstance(zeta, SpherePoint) else sphere_point(df, zeta)
    radii = np.geomspace(1e-3, 1e-1, 21) if radii is None else np.asarray(radii, dtype=float)
    e = _tangent_basis(pt.normal)[0] if direction is None else np.asarray(direction, dtype=float)
    e = e - (e @ pt.normal) * pt.normal
    e = e / np.linalg.norm(e)
    chords, dists = [], []
    for sgn in (1.0, -1.0):
        probe = project_to_sphere(df, pt.position + sgn * radii[:, None] * e)
        chords.append(np.linalg.norm(probe - pt.position, axis=1))
        dists.append((pt.position - probe) @ pt.normal)
    chords = np.concatenate(chords)
    dists = np.concatenate(dists)
    if np.any(dists <= 0):
        raise FitError("tangent distances must be positive on a convex sphere")
    return loglog_fit(chords, dists).slope
