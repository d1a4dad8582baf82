"""Command pipelines: each runs one experiment and returns tables, checks and constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import caps
from . import envelopes as env
from . import geometry as geo
from . import kernels as ker
from . import weaktype as wt
from .config import ConfigError, ExperimentConfig
from .fields import SampledField
from .operator import ConeSymbol, apply_T, apply_Tl, delta_critical, plane_wave, symbol_eval


@dataclass
class Outcome:
    tables: dict = field(default_factory=dict)      # file name -> (header, rows)
    checks: dict = field(default_factory=dict)      # assertion name -> bool
    constants: dict = field(default_factory=dict)   # name -> float

    def check(self, name: str, ok) -> bool:
        self.checks[name] = bool(ok)
        return bool(ok)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _planar(cfg: ExperimentConfig, what: str) -> None:
    if cfg.d != 2:
        raise ConfigError(f"{what} is implemented for d = 2")


# --- geometry ------------------------------------------------------------------------------


def run_phi(cfg: ExperimentConfig) -> Outcome:
    df = cfg.distance_function()
    n = cfg.grid or 64
    dirs, _ = geo.sphere_directions(df.d, n, offset=0.5)
    values, argmax_r, _ = caps.phi_values(df, dirs)
    out = Outcome()
    header = ["index"] + [f"u{k}" for k in range(df.d)] + ["phi", "argmax_r"]
    out.tables["phi.csv"] = (header, [[i, *u, v, a] for i, (u, v, a) in
                                      enumerate(zip(dirs, values, argmax_r))])
    var = float(np.var(values))
    out.constants.update(phi_min=float(values.min()), phi_max=float(values.max()),
                         phi_variance=var)
    out.check("phi_finite_positive", np.all(np.isfinite(values)) and np.all(values > 0))
    if df.kind is geo.GaugeKind.EUCLIDEAN:
        out.check("phi_constant", var < cfg.tolerances["phi_variance"])
    return out


def run_caps(cfg: ExperimentConfig) -> Outcome:
    _planar(cfg, "caps")
    df = cfg.distance_function()
    n = cfg.grid or 200
    s = np.geomspace(1e-3, 1.9, n)
    out = Outcome()
    axis = geo.gauss_point(df, np.array([1.0, 0.0]))
    diag = geo.gauss_point(df, np.array([1.0, 1.0]))
    m_axis = caps.cap_measures(df, axis, s)
    m_diag = caps.cap_measures(df, diag, s)
    rows = [[sk, a, b] for sk, a, b in zip(s, m_axis, m_diag)]
    header = ["s", "cap_axis", "cap_diagonal"]
    if df.kind is geo.GaugeKind.EUCLIDEAN:
        exact = 2 * np.arccos(1 - s)
        err = float(np.max(np.abs(m_axis - exact)))
        header.append("closed_form")
        rows = [r + [e] for r, e in zip(rows, exact)]
        out.constants["cap_max_abs_error"] = err
        out.check("cap_closed_form", err <= cfg.tolerances["cap_abs"])
    out.tables["caps.csv"] = (header, rows)
    k_axis = geo.type_order(df, axis)
    k_diag = geo.type_order(df, diag)
    out.constants.update(type_order_axis=k_axis, type_order_diagonal=k_diag)
    q = df.q if df.kind is geo.GaugeKind.LQ else 2
    out.check("type_order_axis", abs(k_axis - q) <= cfg.tolerances["type_axis"])
    out.check("type_order_diagonal", abs(k_diag - 2) <= cfg.tolerances["type_diagonal"])
    rep = caps.doubling_check(df, [caps.CapQuery(axis, 1e-3), caps.CapQuery(diag, 1e-3)],
                              [1 / 16, 1 / 4, 1.0, 4.0, 16.0], k=q)
    out.constants["doubling_max_ratio"] = rep.max_ratio
    return out


def run_fourier_decay(cfg: ExperimentConfig) -> Outcome:
    df = cfg.distance_function()
    _planar(cfg, "fourier-decay")
    n_dir = cfg.grid or 64
    radii = 2.0 ** np.arange(2, 8.5, 0.5)
    dirs, _ = geo.sphere_directions(2, n_dir)
    out = Outcome()
    rows, worst = [], 0.0
    for r in radii:
        base = geo.gauss_points(df, dirs)
        cap = caps.cap_measures(df, base, [1 / r])[:, 0]
        for j, u in enumerate(dirs):
            val = abs(caps.surface_fourier(df, r * u))
            ratio = val / cap[j]
            worst = max(worst, ratio)
            rows.append([r, j, val, cap[j], ratio])
    out.tables["fourier_decay.csv"] = (["radius", "direction", "abs_fourier", "cap", "ratio"], rows)
    out.constants["max_ratio"] = worst
    out.check("fourier_cap_bound", worst <= cfg.tolerances["fourier_constant"])
    if df.kind is geo.GaugeKind.EUCLIDEAN:
        rs = np.linspace(0.5, 32, 64)
        err = max(abs(caps.surface_fourier(df, np.array([r, 0.0])) - 2 * np.pi * special.j0(r))
                  for r in rs)
        out.constants["bessel_max_abs_error"] = float(err)
        out.check("bessel_match", err <= cfg.tolerances["bessel_abs"])
    return out


# --- kernels -------------------------------------------------------------------------------


def run_kernel_decay(cfg: ExperimentConfig) -> Outcome:
    df = cfg.distance_function()
    p = cfg.require_p()
    fit = ker.cone_decay_fit(df, p, n_dir=cfg.grid or 64)
    out = Outcome()
    out.tables["kernel_decay.csv"] = (
        ["R", "radius", "direction", "kernel_abs", "phi_value", "normalized"], fit.rows)
    out.tables["kernel_decay_fit.csv"] = (["R", "normalized_max"],
                                          [[r, m] for r, m in zip(fit.shells, fit.normalized_max)])
    out.constants.update(slope=fit.slope, target=fit.target, constant=fit.constant,
                         tail_slope=fit.tail_slope)
    out.check("cone_slope", abs(fit.slope - fit.target) <= cfg.tolerances["slope"])
    out.check("off_cone_tail", fit.tail_slope <= -3 + cfg.tolerances["tail_margin"])
    return out


def _lemma22(cfg, df, rng):
    x, y = caps.lemma22_samples(rng, 10_000, df.d)
    c = caps.lemma22_check(df, x, y)
    out = Outcome(constants={"constant": c})
    out.tables["lemma22.csv"] = (["samples", "constant"], [[len(x), c]])
    out.check("finite", math.isfinite(c))
    if df.kind is geo.GaugeKind.EUCLIDEAN:
        out.check("euclidean_constant", c <= cfg.tolerances["lemma22_constant"])
    return out


def _lemma23(cfg, df, rng):
    x, y = caps.lemma23_samples(rng, 1000, df.d)
    c = caps.lemma23_check(df, x, y)
    out = Outcome(constants={"constant": c})
    out.tables["lemma23.csv"] = (["samples", "constant"], [[len(x), c]])
    out.check("finite", math.isfinite(c))
    if df.kind is geo.GaugeKind.EUCLIDEAN:
        out.check("euclidean_ratio_one", abs(c - 1) <= 1e-6)
    return out


def _lemma31(cfg, df, rng):
    x, t = ker.cone_samples(df, 10_000, rng)
    ball = ker.ball_nodes(df)
    bad = ker.lemma31_check(df, x, t, ball)
    out = Outcome(constants={"violations": bad, "samples": len(t), "ball_nodes": len(ball)})
    out.tables["lemma31.csv"] = (["samples", "ball_nodes", "violations"], [[len(t), len(ball), bad]])
    out.check("no_violations", bad == 0)
    return out


def _lemma32(cfg, df, rng):
    delta = cfg.delta(default=1.5)
    fit = ker.lemma32_fit(df, delta)
    out = Outcome()
    out.tables["lemma32.csv"] = (["k", "max_abs"], [[int(k), m] for k, m in zip(fit.ks, fit.max_abs)])
    out.constants.update(k_slope=fit.k_slope, target=-(delta + 1), constant=fit.constant(),
                         **{f"tail_slope_k{k}": v for k, v in fit.tail_slopes.items()})
    out.check("k_slope", abs(fit.k_slope + delta + 1) <= cfg.tolerances["slope"])
    out.check("t_tail", all(v <= -3 + cfg.tolerances["tail_margin"] for v in fit.tail_slopes.values()))
    return out


def _lemma41(cfg, df, rng):
    out = Outcome()
    rows = []
    ps = [cfg.p] if cfg.p is not None else [1 / 3, 1 / 2, 2 / 3]
    for p in ps:
        centers = np.sort(rng.uniform(-4, 4, 8))
        weights = rng.uniform(0.05, 1.0, 8)
        lams = 2.0 ** np.arange(-6, 8, 0.5)
        rep = wt.stw_sum_check(p, centers, weights, lams)
        rows += [[p, lam, m, b] for lam, m, b in zip(rep.lambdas, rep.measures, rep.bounds)]
        out.constants[f"worst_ratio_p{p:.4g}"] = rep.worst_ratio
        out.check(f"bound_p{p:.4g}", rep.holds)
    out.tables["lemma41.csv"] = (["p", "lambda", "measure", "bound"], rows)
    return out


def _lemma42(cfg, df, rng):
    out = Outcome()
    rows = []
    ps = [cfg.p] if cfg.p is not None else [1 / 3, 1 / 2, 2 / 3]
    for p in ps:
        lams = 2.0 ** np.arange(-4, 10, 0.5)
        centers = rng.uniform(-4, 4, 12)
        good = wt.lemma42_check(p, 1.0, centers, lams)
        flat = wt.lemma42_check(p, 0.0, centers, lams)
        short = wt.lemma42_check(p, 0.0, centers[:3], lams)
        rows += [[p, lam, a, b] for lam, a, b in zip(lams, good.measures, flat.measures)]
        out.constants[f"constant_p{p:.4g}"] = good.constant
        out.constants[f"control_growth_p{p:.4g}"] = flat.constant / short.constant
        # summation bound with weights 2^-l, l >= 1, each piece of unit weak constant
        bound = wt.stw_constant(p) / (2.0**p - 1)
        out.check(f"bounded_p{p:.4g}", good.constant <= bound)
        out.check(f"control_grows_p{p:.4g}", flat.constant > short.constant)
    out.tables["lemma42.csv"] = (["p", "lambda", "measure_decaying", "measure_flat"], rows)
    return out


def _lemma43(cfg, df, rng):
    p = cfg.p if cfg.p is not None else 2 / 3
    rows = env.lemma43_measure_check(df, p)
    out = Outcome()
    out.tables["lemma43.csv"] = (["family", "case", "l", "constant", "slope"],
                                 [[r.family, r.case, r.l, r.constant, r.slope] for r in rows])
    tol = cfg.tolerances["constant_spread"]
    for case in ("i", "ii"):
        for fam in ("A", "C", "E"):
            sel = [r for r in rows if r.family == fam and r.case == case]
            c = np.array([r.constant for r in sel])
            mid = float(np.median(c))
            out.constants[f"spread_{fam}_{case}"] = float(c.max() / c.min())
            out.check(f"stable_{fam}_{case}", np.all(np.abs(c / mid - 1) <= tol))
            slopes = np.array([r.slope for r in sel], dtype=float)
            out.constants[f"slope_{fam}_{case}"] = float(np.mean(slopes))
            out.check(f"slope_{fam}_{case}",
                      np.all(np.abs(slopes + p) <= cfg.tolerances["lambda_slope"]))
    return out


def _cor21(cfg, df, rng):
    p = cfg.p if cfg.p is not None else 2.0
    n = cfg.grid or 512
    a = caps.phi_lp_norm(df, p, n)
    b = caps.phi_lp_norm(df, p, 2 * n)
    change = abs(b - a) / a
    out = Outcome(constants={"norm": a, "norm_refined": b, "relative_change": change})
    out.tables["cor21.csv"] = (["resolution", "norm"], [[n, a], [2 * n, b]])
    out.check("finite", math.isfinite(a) and math.isfinite(b))
    out.check("refinement_stable", change <= cfg.tolerances["phi_refinement"])
    return out


def _scaling32(cfg, df, rng):
    delta = cfg.delta(default=1.5)
    out = Outcome()
    rows, worst = [], 0.0
    for l in (-2, 1, 3):
        for _ in range(10):
            x = rng.uniform(-3, 3, df.d) * 2.0 ** (-l)
            t = float(rng.uniform(-3, 3)) * 2.0 ** (-l)
            fast = ker.kernel_Kl(df, delta, l, x, t)
            direct = ker.kernel_Kl_direct(df, delta, l, x, t)
            rel = abs(fast - direct) / abs(direct)
            worst = max(worst, rel)
            rows.append([l, *x, t, fast.real, direct.real, rel])
    out.tables["scaling32.csv"] = (
        ["l"] + [f"x{k}" for k in range(df.d)] + ["t", "fast", "direct", "relative_error"], rows)
    out.constants["max_relative_error"] = worst
    out.check("fast_matches_direct", worst <= cfg.tolerances["kernel_rel"])
    return out


LEMMA_RUNNERS = {
    "2.2": _lemma22, "2.3": _lemma23, "3.1": _lemma31, "3.2": _lemma32, "4.1": _lemma41,
    "4.2": _lemma42, "4.3": _lemma43, "cor2.1": _cor21,
    "cor3.4": lambda cfg, df, rng: run_kernel_decay(cfg), "scaling3.2": _scaling32,
}


def run_lemma_check(cfg: ExperimentConfig, name: str) -> Outcome:
    if name not in LEMMA_RUNNERS:
        raise ConfigError(f"unknown lemma {name!r}; choose from {', '.join(LEMMA_RUNNERS)}")
    df = cfg.distance_function()
    return LEMMA_RUNNERS[name](cfg, df, np.random.default_rng(cfg.seed))


# --- operator ------------------------------------------------------------------------------


def run_operator_selftest(cfg: ExperimentConfig) -> Outcome:
    df = cfg.distance_function()
    n = cfg.grid or 128
    dim = df.d + 1
    delta = cfg.delta(default=1.5)
    sym = ConeSymbol(delta, df)
    # frequency step 1/8 so the level range 2^-5..2^5 fits below Nyquist
    template = SampledField.zeros((n,) * dim, (16 * np.pi,) * dim)
    rng = np.random.default_rng(cfg.seed)
    out = Outcome()

    modes = (3, -2, 5)[:dim - 1] + (7,) if dim <= 4 else tuple(range(1, dim + 1))
    wave = plane_wave(template, modes)
    freqs = [2 * np.pi * m / e for m, e in zip(modes, template.extents)]
    expect = symbol_eval(sym, np.array(freqs[:-1]), freqs[-1]) * wave.data
    mode_err = float(np.max(np.abs(apply_T(sym, wave).data - expect)))
    out.constants["mode_max_abs_error"] = mode_err
    out.check("single_mode", mode_err <= cfg.tolerances["mode_abs"])

    f = template.like(rng.normal(size=template.shape) + 1j * rng.normal(size=template.shape))
    Tf = apply_T(sym, f)
    ratio = Tf.l2_norm() / f.l2_norm()
    out.constants["contraction_ratio"] = ratio
    out.check("contraction", ratio <= 1 + cfg.tolerances["contraction_rel"])

    g = template.like(rng.normal(size=template.shape))
    lin = apply_T(sym, f.like(2 * f.data - 3 * g.data)).data - (2 * Tf.data - 3 * apply_T(sym, g).data)
    out.constants["linearity_error"] = float(np.max(np.abs(lin)))
    out.check("linearity", out.constants["linearity_error"] <= 1e-12 * np.max(np.abs(Tf.data)) * 10)

    shift = (5,) * dim
    trans = np.max(np.abs(apply_T(sym, f.shifted(shift)).data - Tf.shifted(shift).data))
    out.constants["translation_error"] = float(trans)
    out.check("translation", trans <= 1e-12 * np.max(np.abs(Tf.data)) * 10)

    # band-limit f in time frequency to 2^-3 <= |tau| <= 2^3 and sum levels -5..5
    L = 5
    tau = np.abs(template.frequencies()[-1])
    band = (tau >= 2.0 ** (-L + 2)) & (tau <= 2.0 ** (L - 2))
    from scipy import fft as sfft
    spec = sfft.fft(f.data, axis=-1) * band
    fb = f.like(sfft.ifft(spec, axis=-1))
    full = apply_T(sym, fb)
    total = np.zeros_like(full.data)
    rows = []
    for l in range(-L, L + 1):
        piece = apply_Tl(sym, l, fb)
        total += piece.data
        rows.append([l, piece.l2_norm()])
    tel = float(np.sqrt(np.sum(np.abs(total - full.data) ** 2)) / np.sqrt(np.sum(np.abs(full.data) ** 2)))
    out.constants["telescoping_rel_error"] = tel
    out.check("telescoping", tel <= cfg.tolerances["telescoping_rel"])
    out.tables["operator_levels.csv"] = (["l", "l2_norm"], rows)
    out.tables["operator_selftest.csv"] = (
        ["quantity", "value"],
        [[k, v] for k, v in out.constants.items()])
    return out


# --- weak type -----------------------------------------------------------------------------


def run_weak_type(cfg: ExperimentConfig) -> Outcome:
    df = cfg.distance_function()
    p = cfg.require_p()
    delta = cfg.delta()
    crit = delta_critical(p, df.d)
    rows = wt.weak_type_experiment(df, p, delta, cfg.scales, n=cfg.grid or 256, seed=cfg.seed)
    out = Outcome()
    out.tables["weak_type.csv"] = (
        ["p", "delta", "j", "diameter", "quasinorm_cone", "quasinorm_full", "lambda_argmax"],
        [[r.p, r.delta, r.j, r.diameter, r.quasinorm_cone, r.quasinorm_full, r.lambda_argmax]
         for r in rows])
    full = np.array([r.quasinorm_full for r in rows])
    cone = np.array([r.quasinorm_cone for r in rows])
    out.constants.update(delta=delta, delta_critical=crit,
                         ratio_full=float(full.max() / full.min()),
                         ratio_cone=float(cone.max() / cone.min()),
                         growth_full=float(full[-1] / full[0]),
                         growth_cone=float(cone[-1] / cone[0]))
    out.check("finite", np.all(np.isfinite(full)) and np.all(np.isfinite(cone)))
    if abs(delta - crit) <= 1e-9:
        lim = cfg.tolerances["comparable_ratio"]
        out.check("comparable_full", full.max() / full.min() <= lim)
        out.check("comparable_cone", cone.max() / cone.min() <= lim)
    elif delta < crit:
        out.check("growth_full", full[-1] / full[0] >= cfg.tolerances["growth_factor"])
        out.check("monotone_full", np.all(np.diff(full) >= 0))
    return out


def run(cfg: ExperimentConfig, command: str, lemma: str | None = None) -> Outcome:
    if command == "lemma-check":
        if lemma is None:
            raise ConfigError("lemma-check needs a lemma name")
        return run_lemma_check(cfg, lemma)
    runners = {"phi": run_phi, "caps": run_caps, "fourier-decay": run_fourier_decay,
               "kernel-decay": run_kernel_decay, "operator-selftest": run_operator_selftest,
               "weak-type": run_weak_type}
    if command not in runners:
        raise ConfigError(f"unknown command {command!r}")
    return runners[command](cfg)
