"""The cone multiplier (1 - rho(xi)/|tau|)_+^delta acting on sampled space-time fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import DomainError
from .fields import SampledField, thread_count
from .geometry import DistanceFunction
from .windows import make_windows


def delta_critical(p: float, d: int) -> float:
    """Critical order d (1/p - 1/2) - 1/2."""
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)")
    if d < 2:
        raise DomainError("d must be at least 2")
    return d * (1 / p - 0.5) - 0.5


@dataclass(frozen=True)
class ConeSymbol:
    delta: float
    df: DistanceFunction
    level: int | None = None
    sharpness: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError("delta must be positive")

    def with_level(self, level: int | None) -> "ConeSymbol":
        return ConeSymbol(self.delta, self.df, level, self.sharpness)


def _symbol_from_rho(sym: ConeSymbol, rho, tau) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    at = np.abs(np.asarray(tau, dtype=float))
    safe = np.where(at > 0, at, 1.0)
    base = np.clip(1 - rho / safe, 0.0, None) ** sym.delta
    # tau = 0: the value along rays through the origin, 1 only at xi = 0
    base = np.where(at > 0, base, (rho == 0).astype(float))
    if sym.level is not None:
        psi, _ = make_windows(sym.sharpness)
        base = base * psi(at * 2.0 ** (-sym.level))
    return base


def symbol_eval(sym: ConeSymbol, xi, tau) -> np.ndarray:
    """Symbol value in [0, 1] at spatial frequency ``xi`` (last axis) and time frequency tau."""
    xi = np.asarray(xi, dtype=float)
    nz = np.any(xi != 0, axis=-1)
    rho = np.zeros(xi.shape[:-1])
    if np.any(nz):
        rho[nz] = sym.df(xi[nz])
    out = _symbol_from_rho(sym, rho, tau)
    return out if out.ndim else float(out)


def _spatial_rho(sym: ConeSymbol, freqs) -> np.ndarray:
    grids = np.meshgrid(*freqs, indexing="ij")
    xi = np.stack(grids, axis=-1)
    flat = xi.reshape(-1, xi.shape[-1])
    rho = np.zeros(len(flat))
    nz = np.any(flat != 0, axis=1)
    rho[nz] = sym.df(flat[nz])
    return rho.reshape(xi.shape[:-1])


def apply_T(sym: ConeSymbol, f: SampledField) -> SampledField:
    """Forward FFT, multiply by the symbol at grid frequencies, inverse FFT."""
    if f.data.ndim != sym.df.d + 1:
        raise DomainError(f"field rank {f.data.ndim} does not match d + 1 = {sym.df.d + 1}")
    workers = thread_count()
    spec = sfft.fftn(f.data.astype(complex, copy=True), workers=workers, overwrite_x=True)
    freqs = f.frequencies()
    rho = _spatial_rho(sym, freqs[:-1])
    for k, tau in enumerate(freqs[-1]):
        spec[..., k] *= _symbol_from_rho(sym, rho, tau)
    out = sfft.ifftn(spec, workers=workers, overwrite_x=True)
    return f.like(out)


def apply_Tl(sym: ConeSymbol, l: int, f: SampledField) -> SampledField:
    """Dyadic piece with the extra factor psi(2^-l |tau|)."""
    return apply_T(sym.with_level(l), f)


def impulse(template: SampledField) -> SampledField:
    """Grid approximation of the Dirac mass at the origin cell (unit integral)."""
    f = template.like(np.zeros(template.shape, dtype=complex))
    idx = tuple(int(round(-o / h)) % n for o, h, n in zip(f.origin, f.spacing, f.shape))
    f.data[idx] = 1.0 / f.cell_volume
    return f


def plane_wave(template: SampledField, modes) -> SampledField:
    """Single discrete Fourier mode with integer wave numbers ``modes``."""
    grids = np.meshgrid(*template.axes(), indexing="ij")
    phase = sum(2 * np.pi * m * g / e for m, g, e in zip(modes, grids, template.extents))
    return template.like(np.exp(1j * phase))
