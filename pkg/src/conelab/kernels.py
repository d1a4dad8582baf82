"""Frequency-localized cone multiplier kernels and their decay diagnostics.

The level-0 kernel is

    K_0(x, t) = (2 pi)^-(d+1) int int exp(i<x,xi> + i t tau) (1 - rho(xi)/|tau|)_+^delta psi(|tau|) dxi dtau.

In generalized polar coordinates ``xi = tau r zeta(u)`` with ``dxi = tau^d r^(d-1) dr
du / rho(u)^d`` this becomes

    K_0 = 2 (2 pi)^-(d+1) sum_tau psi(tau) tau^d cos(t tau) sum_j c_j F(tau <x, zeta_j>),

where ``F(a) = int_0^1 r^(d-1) profile(r) exp(i r a) dr`` depends only on the radial
profile.  F is tabulated once per profile and spline-interpolated.  Córdoba
pieces only change the profile: ``phi(2^(k+1) (1 - r)) (1 - r)^delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from . import geometry as geo
from .errors import DomainError, FitError, ResolutionError
from .fitting import PowerLawFit, loglog_fit
from .geometry import DistanceFunction
from .windows import make_windows

FULL = "full"
REMAINDER = "remainder"
TABLE_STEP = 0.01


def _norm_const(d: int) -> float:
    return 2.0 * (2 * np.pi) ** (-(d + 1))


@dataclass(frozen=True, eq=False)
class RadialRule:
    """Nodes and weights with ``F(a) = sum(weights * exp(1j * r * a))``."""

    r: np.ndarray
    weights: np.ndarray

    def __call__(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        out = np.empty(a.shape, dtype=complex)
        flat = a.ravel()
        res = out.ravel()
        for i in range(0, flat.size, 4096):
            res[i:i + 4096] = np.exp(1j * np.outer(flat[i:i + 4096], self.r)) @ self.weights
        return out


def full_rule(d: int, delta: float, a_max: float) -> RadialRule:
    """Gauss-Jacobi rule absorbing the (1 - r)^delta edge exactly."""
    n = int(np.ceil(a_max / 4 + 2 * a_max ** (1 / 3) + 20))
    x, w = special.roots_jacobi(n, delta, 0.0)
    r = 0.5 * (1 + x)
    return RadialRule(r, w * 2.0 ** (-delta) * 0.5 * r ** (d - 1))


def cordoba_rule(d: int, delta: float, k: int, a_max: float, phi) -> RadialRule:
    """Trapezoid rule in ``u`` with ``1 - r = 2^(u - k - 1)``, u in (-1, 1)."""
    if k < 1:
        raise DomainError("Córdoba index must be >= 1")
    band = phi.log_bandwidth(delta + 1) + a_max * 2.0 ** (-k) * math.log(2)
    n = int(np.ceil(band / np.pi)) + 8
    u = -1 + 2 * np.arange(1, n) / n
    v = 2.0 ** (u - k - 1)
    r = 1 - v
    w = (2 / n) * phi.log_profile(u) * v**delta * r ** (d - 1) * v * math.log(2)
    return RadialRule(r, w)


def remainder_rule(d: int, delta: float, a_max: float, phi) -> RadialRule:
    """Gauss-Legendre rule for ``(phi(v) + phi(2 v)) v^delta`` on r in [0, 3/4]."""
    n = int(np.ceil(3 * a_max / 16 + 2 * a_max ** (1 / 3) + 160))
    x, w = np.polynomial.legendre.leggauss(n)
    r = 0.375 * (1 + x)
    v = 1 - r
    prof = (phi(v) + phi(2 * v)) * v**delta
    return RadialRule(r, 0.375 * w * prof * r ** (d - 1))


def _bucket(a: float) -> float:
    return float(max(8.0, 2.0 ** math.ceil(math.log2(max(a, 1.0)))))


class KernelEngine:
    """Evaluates K_0 and its Córdoba pieces for one gauge, order delta and window pair."""

    def __init__(self, df: DistanceFunction, delta: float, sharpness: float = 1.0):
        if not delta > 0:
            raise DomainError("delta must be positive")
        self.df = df
        self.d = df.d
        self.delta = float(delta)
        self.psi, self.phi = make_windows(sharpness)
        self.gamma = geo.gamma_of(df)
        probe = geo.parametrize_sphere(df, 256)
        speed = probe.weights / np.maximum(probe.angle_weights, 1e-300)
        self.max_speed = float(max(speed.max(), self.gamma))
        self.tau_band = self.psi.bandwidth(self.d, 1e-13)
        self._tables = {}

    def rule(self, piece, a_max: float) -> RadialRule:
        if piece == FULL:
            return full_rule(self.d, self.delta, a_max)
        if piece == REMAINDER:
            return remainder_rule(self.d, self.delta, a_max, self.phi)
        return cordoba_rule(self.d, self.delta, int(piece), a_max, self.phi)

    def table(self, piece, a_max: float) -> CubicSpline:
        A = _bucket(a_max)
        key = (piece, A)
        if key not in self._tables:
            grid = np.linspace(-A, A, int(round(2 * A / TABLE_STEP)) + 1)
            self._tables[key] = CubicSpline(grid, self.rule(piece, A)(grid))
        return self._tables[key]

    def required_angles(self, xnorm: float) -> int:
        n = int(np.ceil(2.5 * xnorm * self.max_speed + 128))
        return 8 * int(np.ceil(n / 8))

    def required_taus(self, xnorm: float, tmax: float) -> int:
        return int(np.ceil(1.5 * (tmax + self.gamma * xnorm + self.tau_band) / (2 * np.pi))) + 8

    def tau_profile(self, x, piece=FULL, resolution: int | None = None, angular_weight=None,
                    tmax: float = 0.0):
        """``(tau nodes, weights * S(tau))`` so that K(x, t) = sum(w S cos(t tau))."""
        x = np.asarray(x, dtype=float)
        xn = float(np.linalg.norm(x))
        need = self.required_angles(xn)
        if resolution is None:
            resolution, scale = need, 1.0
        elif resolution < need:
            raise ResolutionError("angular resolution too small for |x|", need)
        else:
            scale = resolution / need
        nodes = geo.parametrize_sphere(self.df, int(resolution))
        c = nodes.cone_weights
        if angular_weight is not None:
            c = c * angular_weight(nodes.positions)
        s = nodes.positions @ x
        n_tau = int(np.ceil(self.required_taus(xn, tmax) * scale))
        tau = 0.5 + 1.5 * np.arange(1, n_tau) / n_tau
        spline = self.table(piece, 2 * float(np.max(np.abs(s), initial=0.0)))
        S = spline(np.outer(tau, s)) @ c
        w = _norm_const(self.d) * (1.5 / n_tau) * self.psi(tau) * tau**self.d
        return tau, w * S

    def evaluate(self, x, t, piece=FULL, resolution: int | None = None, angular_weight=None):
        """K_0 (or a piece of it) at one spatial point and an array of times."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tau, ws = self.tau_profile(x, piece, resolution, angular_weight, float(np.max(np.abs(t))))
        return np.cos(np.outer(t, tau)) @ ws

    def evaluate_level(self, l: int, x, t, piece=FULL, resolution=None, angular_weight=None):
        """Level-l kernel through the exact dilation identity."""
        scale = 2.0 ** l
        return scale ** (self.d + 1) * self.evaluate(scale * np.asarray(x, dtype=float),
                                                     scale * np.asarray(t), piece, resolution,
                                                     angular_weight)


@lru_cache(maxsize=32)
def kernel_engine(df: DistanceFunction, delta: float, sharpness: float = 1.0) -> KernelEngine:
    return KernelEngine(df, delta, sharpness)


def kernel_K0(df: DistanceFunction, delta: float, x, t, resolution: int | None = None) -> complex:
    return complex(kernel_engine(df, float(delta)).evaluate(x, [t], FULL, resolution)[0])


def kernel_Kl(df: DistanceFunction, delta: float, l: int, x, t,
              resolution: int | None = None) -> complex:
    return complex(kernel_engine(df, float(delta)).evaluate_level(l, x, [t], FULL, resolution)[0])


def kernel_Kkl(df: DistanceFunction, delta: float, k: int, l: int, x, t,
               resolution: int | None = None) -> complex:
    """Córdoba piece with ``1 - rho/|tau|`` localized near 2^-k; k = 0 gives the remainder."""
    piece = REMAINDER if k == 0 else int(k)
    return complex(kernel_engine(df, float(delta)).evaluate_level(l, x, [t], piece, resolution)[0])


def kernel_Kl_direct(df: DistanceFunction, delta: float, l: int, x, t, n_tau: int = 400,
                     n_radial: int | None = None, n_angle: int | None = None,
                     sharpness: float = 1.0) -> complex:
    """Level-l kernel by straight tensor quadrature over the true tau band.

    Gauss-Legendre in tau over (2^(l-1), 2^(l+1)), Gauss-Jacobi in the radial
    variable on [0, tau] and the sphere rule in angle; no tables, no rescaling.
    """
    psi, _ = make_windows(sharpness)
    x = np.asarray(x, dtype=float)
    d = df.d
    lo, hi = 2.0 ** (l - 1), 2.0 ** (l + 1)
    xn = float(np.linalg.norm(x))
    gamma = geo.gamma_of(df)
    a_max = hi * xn * gamma
    if n_angle is None:
        n_angle = 8 * int(np.ceil((3 * hi * xn * gamma + 48) / 8))
    if n_radial is None:
        n_radial = int(np.ceil(a_max / 2 + 2 * a_max ** (1 / 3) + 30))
    nodes = geo.parametrize_sphere(df, n_angle)
    s = nodes.positions @ x
    z, wz = special.roots_jacobi(n_radial, delta, 0.0)
    r = 0.5 * (1 + z)
    wr = wz * 2.0 ** (-delta) * 0.5 * r ** (d - 1)
    y, wy = np.polynomial.legendre.leggauss(n_tau)
    tau = lo + (hi - lo) * 0.5 * (1 + y)
    wt = (hi - lo) * 0.5 * wy * psi(tau / 2.0**l)
    total = 0.0 + 0.0j
    for ti, wi in zip(tau, wt):
        if wi == 0.0:
            continue
        inner = np.exp(1j * ti * np.outer(r, s))  # (radial, angle)
        total += wi * ti**d * np.cos(t * ti) * (wr @ inner @ nodes.cone_weights)
    return complex(_norm_const(d) * total)


def kernel_origin_value(df: DistanceFunction, delta: float, sharpness: float = 1.0) -> float:
    """K_0(0, 0) from the closed-form ball volume and a Beta integral."""
    from scipy import integrate

    psi, _ = make_windows(sharpness)
    d = df.d
    tau_int = integrate.quad(lambda s: psi(s) * s**d, 0.5, 2.0, epsabs=1e-14, epsrel=1e-13,
                             limit=200)[0]
    return _norm_const(d) * tau_int * ball_volume(df) * d * special.beta(d, delta + 1)


def ball_volume(df: DistanceFunction) -> float:
    """Volume of the unit ball {rho <= 1}: closed form for Euclidean and Lq gauges."""
    d = df.d
    if df.kind == geo.GaugeKind.EUCLIDEAN:
        return float(np.pi ** (d / 2) / special.gamma(d / 2 + 1))
    if df.kind == geo.GaugeKind.LQ:
        q = df.q
        return float((2 * special.gamma(1 + 1 / q)) ** d / special.gamma(1 + d / q))
    nodes = geo.parametrize_sphere(df, 1024 if d == 2 else 96)
    return float(nodes.cone_weights.sum() / d)


# --- dual-cone inequality --------------------------------------------------------------


def ball_nodes(df: DistanceFunction, n_angle: int = 100, n_radius: int = 10) -> np.ndarray:
    """Points of the unit ball {rho <= 1}: sphere nodes scaled by a radius grid in [0, 1]."""
    nodes = geo.parametrize_sphere(df, n_angle)
    radii = np.linspace(0.0, 1.0, n_radius)
    return (radii[:, None, None] * nodes.positions[None]).reshape(-1, df.d)


def cone_samples(df: DistanceFunction, n: int, rng: np.random.Generator, spread: float = 4.0):
    """Random (x, t) with |t| >= gamma |x|; one in eight sits exactly on the boundary."""
    gamma = geo.gamma_of(df)
    x = rng.normal(size=(n, df.d)) * np.exp(rng.uniform(-3, 3, n))[:, None]
    excess = rng.exponential(spread, n)
    excess[rng.uniform(size=n) < 0.125] = 0.0
    t = (gamma * np.linalg.norm(x, axis=1) + excess) * rng.choice([-1.0, 1.0], n)
    return x, t


def lemma31_check(df: DistanceFunction, x, t, ball=None, slack: float = 1e-10) -> int:
    """Count samples where min over ball nodes of |t + <x, xi>| < |t| - gamma |x| - slack."""
    ball = ball_nodes(df) if ball is None else ball
    x = np.atleast_2d(x)
    t = np.atleast_1d(t)
    gamma = geo.gamma_of(df)
    bad = 0
    for i in range(0, len(t), 512):
        inf = np.min(np.abs(t[i:i + 512, None] + x[i:i + 512] @ ball.T), axis=1)
        bound = np.abs(t[i:i + 512]) - gamma * np.linalg.norm(x[i:i + 512], axis=1)
        bad += int(np.sum(inf < bound - slack))
    return bad


# --- Córdoba decay in k ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Lemma32Fit:
    ks: np.ndarray
    max_abs: np.ndarray
    k_slope: float  # slope of log2 max|K_k| against k
    tail_slopes: dict

    def constant(self) -> float:
        return float(np.max(self.max_abs * 2.0 ** (self.ks * (-self.k_slope))))


def _lemma32_grid(gamma: float, l: int, d: int, n_r: int = 5, n_dir: int = 8, n_t: int = 9):
    rmax = 2.0 ** (2 - l) / gamma
    dirs, _ = geo.sphere_directions(d, n_dir)
    xs = [np.zeros(d)] + [r * u for r in np.linspace(rmax / n_r, rmax, n_r) for u in dirs]
    ts = np.linspace(-4, 4, n_t) * 2.0 ** (-l)
    return np.array(xs), ts


def lemma32_fit(df: DistanceFunction, delta: float, ks=range(4, 11), l: int = 0, N: int = 3,
                tail_k=(1, 2), sharpness: float = 1.0, floor_rel: float = 1e-12) -> Lemma32Fit:
    """Max of |K_{k,l}| over |x| <= 2^(2-l)/gamma and its k-slope; t-tail slopes at fixed k."""
    eng = kernel_engine(df, float(delta), sharpness)
    ks = np.asarray(list(ks), dtype=int)
    if ks.max() - ks.min() < 2:
        raise FitError("need at least two octaves of k")
    xs, ts = _lemma32_grid(eng.gamma, l, df.d)
    maxes = np.array([max(np.max(np.abs(eng.evaluate_level(l, x, ts, int(k)))) for x in xs)
                      for k in ks])
    coef = np.polyfit(ks.astype(float), np.log2(maxes), 1)
    tails = {}
    for k in tail_k:
        tt = 2.0 ** np.linspace(k + 2, k + 6, 17) * 2.0 ** (-l)
        vals = np.max(np.abs(np.array([eng.evaluate_level(l, x, tt, int(k)) for x in xs[:9]])), axis=0)
        peak = np.max(np.abs(eng.evaluate_level(l, np.zeros(df.d), [0.0], int(k))))
        try:
            fit = loglog_fit(2.0**-k * 2.0**l * tt, vals, floor=floor_rel * peak)
            tails[int(k)] = fit.slope
        except FitError:
            tails[int(k)] = -np.inf
    return Lemma32Fit(ks, maxes, float(coef[0]), tails)


# --- decay on the dual cone ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConeDecayFit:
    shells: np.ndarray
    normalized_max: np.ndarray
    fit: PowerLawFit
    target: float
    tail_slope: float
    rows: list

    @property
    def slope(self) -> float:
        return self.fit.slope

    @property
    def constant(self) -> float:
        return float(np.max(self.normalized_max * self.shells ** (-self.target)))


def critical_delta(d: int, p: float) -> float:
    return d * (1 / p - 0.5) - 0.5


def cone_decay_fit(df: DistanceFunction, p: float, shells=(8, 16, 32, 64), n_dir: int = 64,
                   radii_per_shell: int = 3, N: int = 3, sharpness: float = 1.0,
                   band=(0.0, 1.0), tail_radius: float = 16.0,
                   floor_rel: float = 1e-12, cone: str = "gamma") -> ConeDecayFit:
    """Envelope-normalized max of |K_0^{delta(p)}| next to the cone boundary.

    For each x on the shells R <= |x| <= 2R, times ``t = gamma |x| + s`` with s in
    ``band`` (inside the cone) are scanned and ``|K| (1 + s)^N / Phi(x/|x|)`` is
    maximized.  The exact boundary value alone is not used: there the leading
    oscillatory term can cancel, which would hide the true growth rate.  The tail
    slope is fitted to the running upper envelope of ``|K|`` in ``1 + s`` for s up
    to 2^10 at ``|x| = tail_radius``.

    ``cone="gamma"`` measures s from ``gamma |x|``; ``cone="support"`` measures it
    from the support function ``max <x, zeta>``, the true singular set of the
    kernel in direction x (the two agree for the Euclidean gauge).
    """
    if cone not in ("gamma", "support"):
        raise DomainError("cone must be 'gamma' or 'support'")
    from .caps import phi_table

    delta = critical_delta(df.d, p)
    eng = kernel_engine(df, float(delta), sharpness)
    table = phi_table(df)
    dirs, _ = geo.sphere_directions(df.d, n_dir)
    pv = table(dirs)
    if cone == "gamma":
        reach = np.full(len(dirs), eng.gamma)
    else:
        reach = np.einsum("ij,ij->i", dirs, geo.gauss_points(df, dirs))
    offsets = np.linspace(band[0], band[1], 9)
    damp = (1 + offsets) ** N
    shells = np.asarray(shells, dtype=float)
    rows, maxima = [], []
    for R in shells:
        best = 0.0
        for r in np.linspace(R, 2 * R, radii_per_shell):
            for j, u in enumerate(dirs):
                vals = np.abs(eng.evaluate(r * u, reach[j] * r + offsets)) * damp
                val = float(vals.max())
                rows.append((R, r, j, val, pv[j], val / pv[j]))
                best = max(best, val / pv[j])
        maxima.append(best)
    maxima = np.array(maxima)
    target = -(delta + 1 + (df.d - 1) / 2)
    fit = loglog_fit(shells, maxima)
    u = dirs[int(np.argmax(np.linalg.norm(geo.gauss_points(df, dirs), axis=1)))]
    gap = 2.0 ** np.linspace(0, 10, 41)
    tail = np.abs(eng.evaluate(tail_radius * u, eng.gamma * tail_radius + gap))
    envelope = np.maximum.accumulate(tail[::-1])[::-1]
    try:
        tail_slope = loglog_fit(1 + gap, envelope, floor=floor_rel * tail.max()).slope
    except FitError:
        tail_slope = -np.inf
    return ConeDecayFit(shells, maxima, fit, target, tail_slope, rows)
