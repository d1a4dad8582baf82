"""Dyadic partitions of unity built from a smooth compactly supported bump.

Both windows live on (1/2, 2).  Writing ``t = 2^u`` the window is
``h(u) = b(u) / sum_m b(u - m)`` with ``b(v) = exp(-s / (1 - v^2))`` on (-1, 1),
so that ``sum_l h(u - l) = 1`` identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


def _bump(v: np.ndarray, sharpness: float) -> np.ndarray:
    inside = np.abs(v) < 1
    vv = np.where(inside, v, 0.0)
    return np.where(inside, np.exp(-sharpness / (1 - vv**2)), 0.0)


@dataclass(frozen=True)
class SmoothWindow:
    kind: str  # "psi" (dyadic in tau) or "phi" (dyadic in 1 - rho/|tau|)
    sharpness: float = 1.0
    support: tuple = field(default=(0.5, 2.0))

    def log_profile(self, u) -> np.ndarray:
        """Window as a function of ``u = log2 t``; supported in (-1, 1)."""
        u = np.asarray(u, dtype=float)
        f = u - np.floor(u)
        den = _bump(f, self.sharpness) + _bump(f - 1, self.sharpness)
        return _bump(u, self.sharpness) / den

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        pos = t > 0
        u = np.log2(np.where(pos, t, 1.0))
        return np.where(pos, self.log_profile(u), 0.0)

    def bandwidth(self, power: float = 0.0, rel_tol: float = 1e-14) -> float:
        """Frequency past which the transform of ``window(t) t^power`` is below rel_tol."""
        return _bandwidth(self.sharpness, float(power), rel_tol, False)

    def log_bandwidth(self, growth: float = 0.0, rel_tol: float = 1e-14) -> float:
        """Same for ``log_profile(u) 2^(growth u)`` in the log variable."""
        return _bandwidth(self.sharpness, float(growth), rel_tol, True)


@lru_cache(maxsize=64)
def _bandwidth(sharpness: float, power: float, rel_tol: float, log_variable: bool) -> float:
    w = SmoothWindow("psi", sharpness)
    if log_variable:
        t = np.linspace(-1.0, 1.0, 8193)
        g = w.log_profile(t) * 2.0 ** (power * t)
    else:
        t = np.linspace(0.5, 2.0, 8193)
        g = w(t) * t**power
    dt = t[1] - t[0]
    omega = np.arange(0.0, 6000.0, 4.0)
    mags = np.empty(omega.size)
    for i in range(0, omega.size, 250):
        ph = np.exp(-1j * np.outer(omega[i:i + 250], t))
        mags[i:i + 250] = np.abs(ph @ g) * dt
    above = np.nonzero(mags > rel_tol * mags[0])[0]
    return float(omega[above[-1]] + 4.0)


def make_windows(sharpness: float = 1.0) -> tuple[SmoothWindow, SmoothWindow]:
    """The pair (psi, phi); both share the bump, psi acts on tau and phi on 1 - rho/|tau|."""
    return SmoothWindow("psi", sharpness), SmoothWindow("phi", sharpness)
