"""Log-log regression helpers for power-law exponent estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float  # natural log of the prefactor
    n_points: int

    @property
    def prefactor(self) -> float:
        return float(np.exp(self.intercept))


def loglog_fit(x, y, *, floor: float | None = None) -> PowerLawFit:
    """Least-squares fit of ``log y = slope * log x + intercept``.

    Points with ``y <= floor`` are dropped before fitting (censoring below a
    numerical noise floor).  Raises FitError when fewer than two usable points
    remain or the abscissae have no spread.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise FitError("x and y must have the same length")
    keep = (x > 0) & np.isfinite(y)
    keep &= y > (0.0 if floor is None else floor)
    lx, ly = np.log(x[keep]), np.log(y[keep])
    if lx.size < 2 or np.var(lx) == 0.0:
        raise FitError("degenerate fit: abscissa has zero variance or too few points")
    slope, intercept = np.polyfit(lx, ly, 1)
    return PowerLawFit(float(slope), float(intercept), int(lx.size))


def octave_span(x) -> float:
    """Dynamic range of positive abscissae measured in octaves."""
    x = np.asarray(x, dtype=float)
    x = x[x > 0]
    if x.size == 0:
        return 0.0
    return float(np.log2(x.max() / x.min()))
