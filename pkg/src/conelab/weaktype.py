"""Atoms, weak-L^p quasinorms, weak-type summation checks and the atom experiment."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import geometry as geo
from .errors import ConelabError, DomainError, ResolutionError
from .fields import SampledField
from .geometry import DistanceFunction
from .operator import ConeSymbol, apply_T, delta_critical


# --- atoms ------------------------------------------------------------------------------


def min_moment_order(p: float, dim: int) -> int:
    return int(math.ceil(dim * (1 / p - 1) - 1e-12))


def multi_indices(dim: int, order: int) -> list:
    return [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) <= order]


@dataclass(eq=False)
class Atom:
    p: float
    nu: int
    center: np.ndarray
    diameter: float  # side length of the supporting cube
    field: SampledField

    @property
    def volume(self) -> float:
        return self.diameter ** self.field.data.ndim

    def size_ratio(self) -> float:
        """max|a| relative to the size bound |Q|^(-1/p)."""
        return float(np.abs(self.field.data).max() / self.volume ** (-1 / self.p))

    def moments(self) -> dict:
        grids = np.meshgrid(*self.field.axes(), indexing="ij")
        rel = [g - c for g, c in zip(grids, self.center)]
        out = {}
        for a in multi_indices(len(rel), self.nu):
            mono = np.prod([r**k for r, k in zip(rel, a)], axis=0)
            out[a] = complex(np.sum(self.field.data * mono) * self.field.cell_volume)
        return out

    def moment_defect(self) -> float:
        """Largest moment divided by its natural scale |Q|^(1 - 1/p + |alpha|/dim)."""
        dim = self.field.data.ndim
        worst = 0.0
        for a, m in self.moments().items():
            scale = self.volume ** (1 - 1 / self.p + sum(a) / dim)
            worst = max(worst, abs(m) / scale)
        return worst

    def is_valid(self, size_tol: float = 1e-12, moment_tol: float = 1e-10) -> bool:
        return self.size_ratio() <= 1 + size_tol and self.moment_defect() <= moment_tol


def make_atom(p: float, nu: int, template: SampledField, diameter: float, center=None,
              seed: int = 0) -> Atom:
    """Smooth bump on the cube times a random polynomial, with moments up to nu removed.

    The moments are removed by a weighted least-squares projection (Gram-Schmidt in
    the bump-weighted inner product) and the result is scaled so that max|a| equals
    |Q|^(-1/p).
    """
    dim = template.data.ndim
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)")
    if nu < min_moment_order(p, dim):
        raise DomainError(f"nu must be at least {min_moment_order(p, dim)}")
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    axes = template.axes()
    masks = [(ax - c >= -diameter / 2) & (ax - c < diameter / 2) for ax, c in zip(axes, center)]
    counts = [int(m.sum()) for m in masks]
    if min(counts) < 3:
        need = int(np.ceil(3 * max(template.extents) / diameter))
        raise ResolutionError("atom cube spans fewer than 3 cells", need)
    local = [2 * (ax[m] - c) / diameter for ax, m, c in zip(axes, masks, center)]
    grids = np.meshgrid(*local, indexing="ij")
    bump = np.prod([np.clip(1 - g**2, 0, None) ** 2 for g in grids], axis=0).ravel()
    flat = [g.ravel() for g in grids]
    basis = np.column_stack([np.prod([u**k for u, k in zip(flat, a)], axis=0)
                             for a in multi_indices(dim, nu)])
    rng = np.random.default_rng(seed)
    top = multi_indices(dim, nu + 1)
    poly = sum(rng.normal() * np.prod([u**k for u, k in zip(flat, a)], axis=0) for a in top)
    w = np.sqrt(bump)
    resid = poly.copy()
    for _ in range(2):
        c, *_ = np.linalg.lstsq(w[:, None] * basis, w * resid, rcond=None)
        resid = resid - basis @ c
    values = bump * resid
    peak = np.abs(values).max()
    if not peak > 1e-8 * np.abs(bump * poly).max():
        raise ConelabError("atom construction degenerated to zero; choose another seed")
    values *= diameter ** (-dim / p) / peak
    data = np.zeros(template.shape, dtype=complex)
    data[np.ix_(*[np.nonzero(m)[0] for m in masks])] = values.reshape(counts)
    return Atom(p, nu, center, diameter, template.like(data))


def rescale_atom(atom: Atom) -> Atom:
    """b(y) = diam^(dim/p) a(diam y + center): the same atom carried to a unit cube."""
    f = atom.field
    dim = f.data.ndim
    s = atom.diameter
    extents = tuple(e / s for e in f.extents)
    origin = tuple((o - c) / s for o, c in zip(f.origin, atom.center))
    return Atom(atom.p, atom.nu, np.zeros(dim), 1.0,
                SampledField(f.data * s ** (dim / atom.p), extents, origin))


# --- distribution function and quasinorm -------------------------------------------------


def distribution_function(g: SampledField, lam, mask=None) -> np.ndarray:
    """Volume of {|g| > lam} counted in grid cells."""
    vals = np.abs(g.data) if mask is None else np.abs(g.data)[mask]
    srt = np.sort(vals.ravel())
    lam = np.asarray(lam, dtype=float)
    count = srt.size - np.searchsorted(srt, lam, side="right")
    return count * g.cell_volume


@dataclass(frozen=True, eq=False)
class WeakLpReport:
    p: float
    lambdas: np.ndarray
    distribution: np.ndarray
    quasinorm: float
    lambda_argmax: float
    exact_quasinorm: float  # sup over all thresholds, not only the grid


def lambda_grid(peak: float, octaves: int = 12, per_octave: int = 8) -> np.ndarray:
    return peak * 2.0 ** (-np.arange(octaves * per_octave + 1) / per_octave)


def weak_quasinorm(g: SampledField, p: float, lambdas=None, mask=None, octaves: int = 12,
                   per_octave: int = 8) -> WeakLpReport:
    """sup over lambda of lambda |{|g| > lambda}|^(1/p) on a log grid anchored at max|g|."""
    vals = np.abs(g.data) if mask is None else np.abs(g.data)[mask]
    srt = np.sort(vals.ravel())
    if srt.size == 0 or srt[-1] == 0:
        lam = np.ones(1) if lambdas is None else np.asarray(lambdas, dtype=float)
        return WeakLpReport(p, lam, np.zeros(lam.size), 0.0, float(lam[0]), 0.0)
    lam = lambda_grid(srt[-1], octaves, per_octave) if lambdas is None else np.asarray(lambdas)
    dist = (srt.size - np.searchsorted(srt, lam, side="right")) * g.cell_volume
    q = lam * dist ** (1 / p)
    k = int(np.argmax(q))
    above = (srt.size - np.arange(srt.size)) * g.cell_volume
    exact = float(np.max(srt * above ** (1 / p)))
    return WeakLpReport(p, lam, dist, float(q[k]), float(lam[k]), exact)


# --- summation lemmas in one dimension -----------------------------------------------------


def power_sum_measure(centers, weights, p: float, lam: float) -> float:
    """Exact length of {x : sum_k w_k |x - c_k|^(-1/p) > lam} on the real line."""
    c = np.asarray(centers, dtype=float)
    w = np.asarray(weights, dtype=float)
    order = np.argsort(c)
    c, w = c[order], w[order]
    e = 1 / p

    def f(x):
        with np.errstate(over="ignore", divide="ignore"):
            return float(np.sum(w * np.abs(x - c) ** (-e))) - lam

    total = 0.0
    # outer half-lines: f decreases monotonically away from the extreme centers
    span = (w.sum() / lam) ** p + 1.0
    total += c[0] - optimize.brentq(f, c[0] - span, np.nextafter(c[0], -np.inf), xtol=1e-14)
    total += optimize.brentq(f, np.nextafter(c[-1], np.inf), c[-1] + span, xtol=1e-14) - c[-1]
    for a, b in zip(c[:-1], c[1:]):
        if b <= a:
            continue
        res = optimize.minimize_scalar(f, bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-13 * (b - a)})
        if res.fun >= 0:
            total += b - a
            continue
        left = optimize.brentq(f, np.nextafter(a, np.inf), res.x, xtol=1e-14)
        right = optimize.brentq(f, res.x, np.nextafter(b, -np.inf), xtol=1e-14)
        total += (left - a) + (b - right)
    return total


@dataclass(frozen=True, eq=False)
class SummationReport:
    lambdas: np.ndarray
    measures: np.ndarray
    bounds: np.ndarray

    @property
    def worst_ratio(self) -> float:
        return float(np.max(self.measures / self.bounds))

    @property
    def holds(self) -> bool:
        return self.worst_ratio <= 1.0


def stw_constant(p: float) -> float:
    return (2 - p) / (1 - p)


def stw_sum_check(p: float, centers, weights, lambdas, A: float = 2.0) -> SummationReport:
    """Check |{sum a_k h_k > lam}| <= ((2-p)/(1-p)) sum a_k^p A lam^-p.

    The pieces are h_k = |x - c_k|^(-1/p), each of weak constant A = 2.
    """
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)")
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise DomainError("weights must be positive")
    lam = np.asarray(lambdas, dtype=float)
    single = np.array([power_sum_measure([0.0], [1.0], p, x) for x in lam[:1]])
    if single[0] > A * lam[0] ** (-p) * (1 + 1e-9):
        raise DomainError("a piece violates its own weak-type bound")
    meas = np.array([power_sum_measure(centers, w, p, x) for x in lam])
    bound = stw_constant(p) * np.sum(w**p) * A * lam ** (-p)
    return SummationReport(lam, meas, bound)


@dataclass(frozen=True, eq=False)
class GeometricSumReport:
    p: float
    lambdas: np.ndarray
    measures: np.ndarray

    @property
    def constant(self) -> float:
        return float(np.max(self.measures * self.lambdas**self.p))


def lemma42_check(p: float, a: float, centers, lambdas, piece_constant: float = 1.0
                  ) -> GeometricSumReport:
    """Sum of g_l = 2^(-a l) |x - c_l|^(-1/p), l = 1..len(centers); reports sup lam^p |{sum > lam}|.

    Each piece has |{g_l > lam}| = 2 * 2^(-a l p) lam^-p exactly, so the reported constant
    is measured relative to the per-piece constant 2 * piece_constant.
    """
    centers = np.asarray(centers, dtype=float)
    w = piece_constant * 2.0 ** (-a * np.arange(1, centers.size + 1))
    lam = np.asarray(lambdas, dtype=float)
    meas = np.array([power_sum_measure(centers, w, p, x) for x in lam]) / 2.0
    return GeometricSumReport(p, lam, meas)


# --- weak-type experiment ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeakTypeRow:
    p: float
    delta: float
    j: int
    diameter: float
    quasinorm_cone: float
    quasinorm_full: float
    lambda_argmax: float


def cone_mask(f: SampledField, gamma: float, center=None) -> np.ndarray:
    """Cells with |t| >= gamma |x| relative to ``center``."""
    axes = f.axes()
    center = np.zeros(len(axes)) if center is None else center
    sq = 0.0
    for k, ax in enumerate(axes[:-1]):
        shape = [1] * len(axes)
        shape[k] = -1
        sq = sq + ((ax - center[k]) ** 2).reshape(shape)
    t = (axes[-1] - center[-1]).reshape([1] * (len(axes) - 1) + [-1])
    return np.abs(t) >= gamma * np.sqrt(sq)


def weak_type_experiment(df: DistanceFunction, p: float, delta: float | None = None,
                         scales=range(6), n: int = 256, box: float = 2.0, min_cells: int = 4,
                         nu: int | None = None, seed: int = 0, octaves: int = 40) -> list:
    """Quasinorms of T^delta applied to atoms of diameter 2^-j on one fixed periodic grid.

    The coarsest atom has diameter 1 inside a box of side ``box``; each finer atom sees a
    relatively larger box, so a weak-type failure shows as growth in j.  The far
    field that carries this growth sits many octaves below max|g|, hence the deep
    default lambda grid.
    """
    dim = df.d + 1
    if delta is None:
        delta = delta_critical(p, df.d)
    nu = min_moment_order(p, dim) if nu is None else nu
    scales = list(scales)
    h = box / n
    smallest = 2.0 ** (-max(scales))
    if smallest / h < min_cells:
        raise ResolutionError("finest atom is not resolved by the grid",
                              int(np.ceil(min_cells * box / smallest)))
    template = SampledField.zeros((n,) * dim, (box,) * dim)
    sym = ConeSymbol(float(delta), df)
    mask = cone_mask(template, geo.gamma_of(df))
    rows = []
    for j in scales:
        atom = make_atom(p, nu, template, 2.0 ** (-j), seed=seed)
        g = apply_T(sym, atom.field)
        q_full = weak_quasinorm(g, p, octaves=octaves)
        q_cone = weak_quasinorm(g, p, mask=mask, octaves=octaves)
        rows.append(WeakTypeRow(p, float(delta), j, 2.0 ** (-j), q_cone.quasinorm,
                                q_full.quasinorm, q_cone.lambda_argmax))
        del g
    return rows
