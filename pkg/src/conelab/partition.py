"""Smooth partition of unity on the unit sphere of a gauge, subordinate to small caps.

With h = 2^(-M/2), every piece equals 1 on the Euclidean ball of radius h about
its center and vanishes outside radius 2h.  Pieces are the normalized bumps
g_i / sum_m g_m with g_i(z) = chi(|z - z_i| / h), and they are extended to
R^d \\ {0} by 0-homogeneity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import geometry as geo
from .caps import plane_curve
from .errors import DomainError, SolverError


def smooth_step(s) -> np.ndarray:
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s > 0, np.exp(-1 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1 / np.where(s < 1, 1 - s, 1.0)), 0.0)
    return a / (a + b)


def plateau(u) -> np.ndarray:
    """1 on [0, 1], 0 on [2, inf), smooth in between."""
    return smooth_step(2 - np.asarray(u, dtype=float))


@dataclass(frozen=True)
class SpherePartition:
    df: geo.DistanceFunction
    M: int
    centers: np.ndarray  # (n, d) points on the unit sphere of the gauge

    @property
    def radius(self) -> float:
        return 2.0 ** (-self.M / 2)

    def __len__(self) -> int:
        return len(self.centers)

    def bumps(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        dist = np.linalg.norm(z[:, None, :] - self.centers[None], axis=-1)
        return plateau(dist / self.radius)

    def pieces(self, xi) -> np.ndarray:
        """All pieces at points xi, shape (m, n); each point is first projected to the sphere."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        z = geo.project_to_sphere(self.df, xi)
        g = self.bumps(z)
        total = g.sum(axis=1, keepdims=True)
        if np.any(total <= 0):
            raise SolverError("partition does not cover the sphere", float(total.min()))
        return g / total

    def piece(self, index: int):
        """Callable evaluating one piece, usable as an angular weight."""
        def weight(xi):
            return self.pieces(xi)[:, index]
        return weight


def _plane_centers(df: geo.DistanceFunction, h: float) -> np.ndarray:
    curve = plane_curve(df)
    total = curve.perimeter
    n = max(3, int(round(total / (3.5 * h))))
    targets = total * np.arange(n) / n
    theta = np.linspace(0, 2 * np.pi, 8193)
    s = curve.arclength(theta)
    th = np.interp(targets, s, theta)
    # polish the arclength inversion with a few Newton steps
    for _ in range(4):
        th = th - (curve.arclength(th) - targets) / curve.speed(th)
    return curve.point(th)


def _greedy_centers(df: geo.DistanceFunction, h: float) -> np.ndarray:
    res = max(64, int(math.ceil(16 / h)))
    nodes = geo.parametrize_sphere(df, res).positions
    tree = cKDTree(nodes)
    taken = np.zeros(len(nodes), dtype=bool)
    blocked = np.zeros(len(nodes), dtype=bool)
    for i in range(len(nodes)):
        if blocked[i]:
            continue
        taken[i] = True
        blocked[tree.query_ball_point(nodes[i], 2 * h)] = True
    return nodes[taken]


def partition_sphere(df: geo.DistanceFunction, M: int) -> SpherePartition:
    """Partition of unity with plateau radius 2^(-M/2) and support radius 2^(1-M/2).

    In the plane the centers are equally spaced in arclength with spacing
    close to 3.5 h, which keeps centers at least 3h apart (so each plateau is
    untouched by the other bumps) and every point within 2h of a center.  In
    higher dimension a greedy maximal 2h-separated set of sphere nodes is used;
    it covers the sphere but the plateaus may overlap neighbouring supports.
    """
    if M < 4 or M % 2:
        raise DomainError("M must be an even integer >= 4")
    h = 2.0 ** (-M / 2)
    if df.d == 2:
        centers = _plane_centers(df, h)
        gaps = np.linalg.norm(centers - np.roll(centers, 1, axis=0), axis=1)
        if gaps.min() < 3 * h:
            raise SolverError("centers closer than three plateau radii; increase M", gaps.min() / h)
    else:
        centers = _greedy_centers(df, h)
    return SpherePartition(df, M, centers)
