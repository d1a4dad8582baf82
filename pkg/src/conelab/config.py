"""Flat key=value experiment configuration files."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import geometry as geo
from .errors import ConelabError
from .operator import delta_critical

COMMANDS = ("phi", "caps", "fourier-decay", "kernel-decay", "lemma-check",
            "operator-selftest", "weak-type")
LEMMAS = ("2.2", "2.3", "3.1", "3.2", "4.1", "4.2", "4.3", "cor2.1", "cor3.4", "scaling3.2")

DEFAULT_TOLERANCES = {
    "cap_abs": 1e-6,             # circle caps against 2 arccos(1 - s)
    "type_axis": 0.1,            # contact order at an axis point of an l^q circle
    "type_diagonal": 0.05,       # contact order at the diagonal
    "phi_variance": 1e-10,       # spread of Phi for the round sphere
    "phi_refinement": 0.05,      # relative change of ||Phi||_p on doubling the grid
    "fourier_constant": 16.0,    # |sigma_hat(x)| <= C cap(xi(x), 1/|x|)
    "bessel_abs": 1e-4,          # round circle against 2 pi J0
    "slope": 0.3,                # decay-exponent regressions
    "tail_margin": 0.5,          # off-cone tail must decay at order >= N - margin
    "kernel_rel": 1e-6,          # fast kernel path against direct quadrature
    "mode_abs": 1e-12,           # single Fourier mode through the operator
    "contraction_rel": 1e-12,    # ||T f|| <= ||f||
    "telescoping_rel": 1e-8,     # sum of level pieces against the full operator
    "comparable_ratio": 8.0,     # max/min quasinorm across atom scales at delta(p)
    "growth_factor": 2.0,        # growth below delta(p) from the first to the last scale
    "constant_spread": 0.2,      # level stability of envelope constants
    "lambda_slope": 0.1,         # envelope level-set slope against -p
    "lemma22_constant": 8.0,     # round-circle constant in the Gauss map perturbation bound
}


class ConfigError(ConelabError):
    """Malformed configuration; the command line maps it to a usage error."""


@dataclass
class ExperimentConfig:
    gauge: str = "euclidean"
    d: int = 2
    p: float | None = None
    delta_spec: str | None = None
    grid: int | None = None
    scales: tuple = tuple(range(6))
    seed: int = 0
    output: str | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def distance_function(self) -> geo.DistanceFunction:
        return make_gauge(self.gauge, self.d)

    def require_p(self) -> float:
        if self.p is None:
            raise ConfigError("this command needs p")
        return self.p

    def delta(self, default: float | None = None) -> float:
        """Resolved delta; 'critical' uses the critical order for the configured p and d."""
        if self.delta_spec is None:
            if default is not None:
                return default
            if self.p is not None:
                return delta_critical(self.p, self.d)
            raise ConfigError("this command needs delta or p")
        if self.delta_spec == "critical":
            return delta_critical(self.require_p(), self.d)
        return _number(self.delta_spec, "delta")

    def params(self) -> dict:
        out = {"gauge": self.gauge, "d": self.d, "p": self.p, "delta": self.delta_spec,
               "grid": self.grid, "scales": list(self.scales), "seed": self.seed}
        try:
            out["delta_resolved"] = self.delta()
        except ConelabError:
            out["delta_resolved"] = None
        changed = {k: v for k, v in self.tolerances.items() if v != DEFAULT_TOLERANCES[k]}
        if changed:
            out["tolerance_overrides"] = changed
        return out


def make_gauge(spec: str, d: int) -> geo.DistanceFunction:
    """'euclidean', 'lq4' or 'lq:6' style gauge names."""
    s = spec.strip().lower()
    if s == "euclidean":
        return geo.euclidean(d)
    if s.startswith("lq"):
        q = s[2:].lstrip(":")
        try:
            qv = int(q)
        except ValueError:
            raise ConfigError(f"bad l^q exponent in gauge {spec!r}") from None
        if qv < 4 or qv % 2:
            raise ConfigError("l^q gauges need an even q >= 4")
        return geo.lq_gauge(qv, d)
    raise ConfigError(f"unknown gauge {spec!r}; use euclidean, lq4 or lq:<q>")


def _number(text: str, key: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key} must be a number, got {text!r}") from None


def _integer(text: str, key: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {text!r}") from None


def _scales(text: str) -> tuple:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(_integer(lo, "scales"), _integer(hi, "scales") + 1))
    return tuple(_integer(s, "scales") for s in text.split(",") if s.strip())


def parse_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("tol.") or key.startswith("tolerance."):
            name = key.split(".", 1)[1]
            if name not in DEFAULT_TOLERANCES:
                raise ConfigError(f"line {lineno}: unknown tolerance {name!r}")
            cfg.tolerances[name] = _number(value, key)
        elif key == "gauge":
            cfg.gauge = value
        elif key == "d":
            cfg.d = _integer(value, key)
        elif key == "p":
            cfg.p = _number(value, key)
        elif key == "delta":
            cfg.delta_spec = value.lower() if value.lower() == "critical" else value
            if cfg.delta_spec != "critical" and not _number(value, key) > 0:
                raise ConfigError("delta must be positive")
        elif key == "grid":
            cfg.grid = _integer(value, key)
        elif key == "scales":
            cfg.scales = _scales(value)
        elif key == "seed":
            cfg.seed = _integer(value, key)
        elif key == "output":
            cfg.output = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if cfg.d < 2:
        raise ConfigError("d must be at least 2")
    if cfg.p is not None and not 0 < cfg.p < 1:
        raise ConfigError("p must lie in (0, 1)")
    if cfg.grid is not None and cfg.grid < 1:
        raise ConfigError("grid must be positive")
    make_gauge(cfg.gauge, cfg.d)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
