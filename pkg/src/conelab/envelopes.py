"""Envelope functions on the region families and the measures of their level sets.

Each envelope is a power of |x| (or |t|) times Phi(x/|x|), supported on one
region of :mod:`conelab.regions`.  Level-set measures are computed in polar
coordinates: the t-section of every region is a union of intervals whose length
is known exactly, so only the radial and angular variables are discretized.
The radial grid is geometric and anchored at the inner radius 4 2^-l / gamma,
so changing l shifts it by whole cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import geometry as geo
from .caps import phi_table, phi_values
from .errors import DomainError, ResolutionError
from .fitting import PowerLawFit, loglog_fit
from .operator import delta_critical
from .regions import region_masks

FAMILIES = ("A", "B", "C", "D", "E")


@dataclass(frozen=True)
class ExponentSet:
    case: str
    h: float
    a: float
    b: float
    c: float


def exponent_set(case: str, p: float, d: int, N: int) -> ExponentSet:
    """Level exponent h and envelope exponents a, b, c for case "i" or "ii"."""
    dp = delta_critical(p, d)
    if case == "i":
        return ExponentSet("i", (d + 1) * (p - 1), d + 1 - d / p, d + 1 - d / p - N, d - dp)
    if case == "ii":
        return ExponentSet("ii", (d + 1 + N) * p - (d + 1), d + 1 + N - d / p, d + 1 - d / p, d + N - dp)
    raise DomainError(f"unknown case {case!r}; use 'i' or 'ii'")


def min_tail_order(p: float, d: int) -> int:
    """Smallest integer N > max{(d+1)(1/p-1), 1/p}."""
    return int(math.floor(max((d + 1) * (1 / p - 1), 1 / p) + 1e-12)) + 1


@dataclass(frozen=True)
class Envelope:
    family: str
    df: geo.DistanceFunction
    p: float
    l: int
    N: int
    case: str = "i"
    j: int | None = None
    gamma: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"family must be one of {FAMILIES}")
        if self.family == "E" and (self.j is None or self.j < 1):
            raise DomainError("family E needs a shell index j >= 1")
        if self.gamma is None:
            object.__setattr__(self, "gamma", geo.gamma_of(self.df))

    @property
    def d(self) -> int:
        return self.df.d

    @property
    def exponents(self) -> ExponentSet:
        return exponent_set(self.case, self.p, self.d, self.N)

    @property
    def level_exponent(self) -> float:
        e = self.exponents
        return {"A": e.c, "B": e.b, "C": e.a, "D": e.b, "E": e.a}[self.family]

    @property
    def delta(self) -> float:
        return delta_critical(self.p, self.d)

    def profile(self, r, t, phi):
        """Envelope value ignoring the region indicator."""
        scale = 2.0 ** (self.l * self.level_exponent)
        r = np.asarray(r, dtype=float)
        at = np.abs(np.asarray(t, dtype=float))
        d, p = self.d, self.p
        with np.errstate(divide="ignore", over="ignore"):
            if self.family == "A":
                return scale * at ** (-self.delta - 1) * np.ones_like(r)
            if self.family == "B":
                return scale * r ** (-d / p - self.N) * phi
            if self.family == "C":
                return scale * r ** (-d / p) * phi
            if self.family == "D":
                return scale * r ** (-d / p) * phi * at ** (-float(self.N))
            return scale * 2.0 ** (-self.j * self.N) * r ** (-d / p) * phi


def envelope_eval(env: Envelope, x, t) -> np.ndarray:
    """Envelope at points x (shape (..., d)) and times t; zero off its region."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    masks = region_masks(r, t, env.l, env.gamma)
    inside = masks[env.family]
    if env.family == "E":
        inside = inside & (masks["j"] == env.j)
    out = np.zeros(np.broadcast(r, t).shape)
    if not np.any(inside):
        return out if out.ndim else float(out)
    rb, tb = np.broadcast_arrays(r, t)
    xb = np.broadcast_to(x, rb.shape + (x.shape[-1],))
    phi = phi_table(env.df)(xb[inside]) if env.family != "A" else 1.0
    out[inside] = env.profile(rb[inside], tb[inside], phi)
    return out if out.ndim else float(out)


def _overlap(lo, hi, a, b):
    """Length of (lo, hi) intersected with (a, b), elementwise."""
    return np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None)


def _section_length(env: Envelope, r):
    """Measure of the t-section of the region (both signs of t) at radius r."""
    g, s = env.gamma, 2.0 ** (-env.l)
    gr = g * r
    if env.family == "B":
        return np.full_like(r, 2 * 2 * s)
    if env.family == "C":
        return np.full_like(r, 2 * 2 * s)
    if env.family == "E":
        lo, hi = np.maximum(gr / 2, 2 * s), 2 * gr
        inner, outer = 2.0 ** (env.j - 1) * s, 2.0**env.j * s
        up = _overlap(lo, hi, gr + inner, gr + outer)
        down = _overlap(lo, hi, gr - outer, gr - inner)
        return 2 * (up + down)
    raise DomainError("section length is defined for B, C and E")


@lru_cache(maxsize=16)
def _phi_samples(df: geo.DistanceFunction, resolution: int):
    u, w = geo.sphere_directions(df.d, resolution, offset=0.5)
    return u, w, phi_values(df, u)[0]


@dataclass
class MeasureReport:
    """Level-set measures of one envelope over an aligned lambda grid."""

    env: Envelope
    lambdas: np.ndarray
    measures: np.ndarray
    normalizer: float  # 2^(l h), times 2^(-j(Np-1)) for a single E shell
    fit: PowerLawFit | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        return self.measures * self.lambdas**self.env.p / self.normalizer

    @property
    def constant(self) -> float:
        """Empirical constant: sup over lambda of |{env > lambda}| lambda^p / normalizer."""
        return float(np.max(self.ratios))


def aligned_lambdas(peak: float, octaves: int, per_octave: int = 8) -> np.ndarray:
    """Grid 2^(m/per_octave) from just below ``peak`` down ``octaves`` octaves."""
    top = math.floor(per_octave * math.log2(peak) - 1e-9)
    m = np.arange(top - octaves * per_octave, top + 1)
    return 2.0 ** (m / per_octave)


def _radial_cells(env: Envelope, per_octave: int, start: int, stop: int):
    r0 = 4 * 2.0 ** (-env.l) / env.gamma
    edges = r0 * 2.0 ** (np.arange(start, stop + 1) / per_octave)
    mid = np.sqrt(edges[:-1] * edges[1:])
    vol = (edges[1:] ** env.d - edges[:-1] ** env.d) / env.d
    return mid, vol, edges


def _static_measures(values, weights, lambdas):
    """sum of weights where values > lambda, for every lambda, via one sort."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    tail = np.concatenate([np.cumsum(weights[order][::-1])[::-1], [0.0]])
    return tail[np.searchsorted(v, lambdas, side="right")]


def _extent_octaves(env: Envelope, octaves: int) -> int:
    """Radial octaves needed for the envelope to fall ``octaves`` octaves below its peak."""
    power = env.d / env.p + (env.N if env.family == "B" else 0)
    shell = env.j + 2 if env.family == "E" else 2
    return shell + int(math.ceil(octaves / power)) + 4


def _family_a_measures(env: Envelope, lambdas) -> np.ndarray:
    r0 = 4 * 2.0 ** (-env.l) / env.gamma
    ball = math.pi ** (env.d / 2) / math.gamma(env.d / 2 + 1) * r0**env.d
    top = (2.0 ** (env.l * env.level_exponent) / lambdas) ** (1 / (env.delta + 1))
    return ball * 2 * np.clip(top - 2.0 ** (1 - env.l), 0.0, None)


def _family_d_measures(env, mid, vol, u, w, phi, lambdas) -> np.ndarray:
    base = (2.0 ** (env.l * env.level_exponent) * mid[:, None] ** (-env.d / env.p) * phi[None]).ravel()
    cellw = (vol[:, None] * w[None]).ravel()
    gr = np.repeat(env.gamma * mid, len(w))
    t0 = 2.0 ** (1 - env.l)
    out = np.empty(len(lambdas))
    for i, lam in enumerate(lambdas):
        top = (base / lam) ** (1 / env.N)
        inner = _overlap(t0, gr / 2, 0.0, top)
        outer = _overlap(2 * gr, np.inf, 0.0, top)
        out[i] = np.sum(cellw * 2 * (inner + outer))
    return out


def envelope_measures(env: Envelope, lambdas=None, octaves: int = 48, per_octave: int = 32,
                      angular_resolution: int = 256, lambda_per_octave: int = 8):
    """|{env > lambda}| on a lambda grid, exact in t and quadrature in (r, angle).

    Without an explicit grid, lambda runs over ``octaves`` octaves below the
    envelope's peak on the aligned grid 2^(m/8).  Raises ResolutionError when
    the level set reaches the outer radial edge of the integration window.
    """
    if env.family == "A":
        peak = 2.0 ** (env.l * env.level_exponent) * 2.0 ** ((env.l - 1) * (env.delta + 1))
        lams = aligned_lambdas(peak, octaves, lambda_per_octave) if lambdas is None else np.asarray(lambdas, float)
        return lams, _family_a_measures(env, lams)
    u, w, phi = _phi_samples(env.df, angular_resolution)
    start = per_octave * max(0, env.j - 4) if env.family == "E" else 0
    stop = per_octave * _extent_octaves(env, octaves)
    mid, vol, _ = _radial_cells(env, per_octave, start, stop)
    if env.family == "D":
        v0 = 2.0 ** (env.l * env.level_exponent) * mid[0] ** (-env.d / env.p) * phi.max()
        peak = v0 * 2.0 ** ((env.l - 1) * env.N)
        lams = aligned_lambdas(peak, octaves, lambda_per_octave) if lambdas is None else np.asarray(lambdas, float)
        edge = 2.0 ** (env.l * env.level_exponent) * mid[-1] ** (-env.d / env.p) * phi.max()
        if edge * 2.0 ** ((env.l - 1) * env.N) > lams.min():
            raise ResolutionError("radial window too small for the lambda range", required=stop * 2)
        return lams, _family_d_measures(env, mid, vol, u, w, phi, lams)
    length = _section_length(env, mid)
    values = env.profile(mid[:, None], 0.0, phi[None])
    weights = (vol * length)[:, None] * w[None]
    live = weights > 0
    if not np.any(live):
        lams = np.asarray(lambdas, float) if lambdas is not None else np.ones(1)
        return lams, np.zeros(len(lams))
    peak = float(values[live].max())
    lams = aligned_lambdas(peak, octaves, lambda_per_octave) if lambdas is None else np.asarray(lambdas, float)
    if np.any(values[-1][weights[-1] > 0] > lams.min()):
        raise ResolutionError("radial window too small for the lambda range", required=stop * 2)
    return lams, _static_measures(values[live], weights[live], lams)


def measure_report(env: Envelope, octaves: int = 48, fit_octaves: tuple = (24, 48), **kw) -> MeasureReport:
    """Measures, empirical constant and the lambda-slope over the low-lambda window.

    ``fit_octaves`` gives the window in octaves below the peak used for the
    log-log regression of measure against lambda.
    """
    lams, meas = envelope_measures(env, octaves=octaves, **kw)
    e = env.exponents
    norm = 2.0 ** (env.l * e.h)
    if env.family == "E":
        norm *= 2.0 ** (-env.j * (env.N * env.p - 1))
    depth = np.log2(lams.max() / lams)
    window = (depth >= fit_octaves[0]) & (depth <= fit_octaves[1]) & (meas > 0)
    fit = loglog_fit(lams[window], meas[window]) if np.count_nonzero(window) >= 2 else None
    return MeasureReport(env, lams, meas, norm, fit)


def e_sum_report(df, p: float, l: int, N: int, case: str = "i", shells: int = 32,
                 octaves: int = 48, fit_octaves: tuple = (24, 48), **kw) -> MeasureReport:
    """Level sets of the sum over j = 1..shells of the E-shell envelopes.

    The shells have disjoint supports, so the measure of the sum's level set is
    the sum of the shell measures on a common lambda grid.
    """
    first = Envelope("E", df, p, l, N, case, j=1)
    lams, total = envelope_measures(first, octaves=octaves, **kw)
    for j in range(2, shells + 1):
        env = Envelope("E", df, p, l, N, case, j=j, gamma=first.gamma)
        total = total + envelope_measures(env, lambdas=lams, octaves=octaves, **kw)[1]
    depth = np.log2(lams.max() / lams)
    window = (depth >= fit_octaves[0]) & (depth <= fit_octaves[1]) & (total > 0)
    fit = loglog_fit(lams[window], total[window]) if np.count_nonzero(window) >= 2 else None
    norm = 2.0 ** (l * first.exponents.h)
    return MeasureReport(first, lams, total, norm, fit, extra={"shells": shells})


@dataclass(frozen=True)
class EnvelopeRow:
    family: str
    case: str
    l: int
    constant: float
    slope: float | None


def lemma43_measure_check(df, p: float, families=("A", "C", "E"), cases=("i", "ii"),
                          levels=range(-2, 3), N: int | None = None, e_shell: int | None = None,
                          **kw) -> list:
    """Empirical constants and lambda-slopes for each family, case and level.

    For family E the j-summed envelope is used unless ``e_shell`` picks one shell.
    """
    N = min_tail_order(p, df.d) if N is None else N
    rows = []
    for case in cases:
        for fam in families:
            for l in levels:
                if fam == "E" and e_shell is None:
                    rep = e_sum_report(df, p, l, N, case, **kw)
                else:
                    env = Envelope(fam, df, p, l, N, case, j=e_shell if fam == "E" else None)
                    rep = measure_report(env, **kw)
                rows.append(EnvelopeRow(fam, case, l, rep.constant,
                                       None if rep.fit is None else rep.fit.slope))
    return rows


def constant_spread(rows, family: str, case: str) -> float:
    """max/min of the empirical constants over levels for one family and case."""
    c = np.array([r.constant for r in rows if r.family == family and r.case == case])
    return float(c.max() / c.min())
