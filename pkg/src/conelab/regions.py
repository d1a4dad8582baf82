"""The five space-time region families used to dominate frequency-localized kernels.

For a level l and cone aperture gamma, with gap = ||t| - gamma |x||:

    A_l:    2^l gamma |x| <= 4,  2^l |t| > 2
    B_l:    2^l gamma |x| >  4,  2^l |t| <= 2,  gap > 2^-l
    C_l:    2^l gamma |x| >  4,  2^l |t| > 2,   gap <= 2^-l
    D_l:    2^l gamma |x| >  4,  2^l |t| > 2,   gap > 2^-l,  |t| <= gamma|x|/2 or |t| > 2 gamma|x|
    E_jl:   2^l gamma |x| >  4,  2^l |t| > 2,   2^(j-1-l) < gap <= 2^(j-l),
            gamma|x|/2 < |t| <= 2 gamma|x|,  j >= 1
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RegionLabel:
    family: str  # "A", "B", "C", "D" or "E"
    l: int
    j: int | None = None


def shell_index(gap, l: int):
    """j with 2^(j-1-l) < gap <= 2^(j-l); vectorized, 0 for gap <= 2^-l."""
    g = np.asarray(gap, dtype=float) * 2.0**l
    j = np.ceil(np.log2(np.where(g > 0, g, 1.0))).astype(int)
    # repair rounding at exact powers of two
    j = np.where(2.0 ** (j - 1) >= g, j - 1, j)
    j = np.where(2.0**j < g, j + 1, j)
    return np.where(g > 1, j, 0)


def region_masks(xnorm, t, l: int, gamma: float) -> dict:
    """Boolean masks of the five families plus the E shell index (0 outside E)."""
    xr = np.asarray(xnorm, dtype=float)
    at = np.abs(np.asarray(t, dtype=float))
    scale = 2.0**l
    gap = np.abs(at - gamma * xr)
    near_origin = scale * gamma * xr <= 4
    late = scale * at > 2
    wide = gap > 1 / scale
    outside = (at <= gamma * xr / 2) | (at > 2 * gamma * xr)
    far = ~near_origin
    masks = {
        "A": near_origin & late,
        "B": far & ~late & wide,
        "C": far & late & ~wide,
        "D": far & late & wide & outside,
        "E": far & late & wide & ~outside,
    }
    masks["j"] = np.where(masks["E"], shell_index(gap, l), 0)
    return masks


def classify_region(x, t: float, l: int, gamma: float) -> RegionLabel | None:
    """The unique family containing (x, t), or None near the origin."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    xr = float(np.linalg.norm(x))
    m = region_masks(xr, t, l, gamma)
    for fam in "ABCDE":
        if bool(m[fam]):
            return RegionLabel(fam, l, int(m["j"]) if fam == "E" else None)
    return None


def e_shell_bounds(j: int, l: int) -> tuple:
    """Gap interval (lower, upper] of the shell E_jl."""
    return (2.0 ** (j - 1 - l), 2.0 ** (j - l))


def log2_int(x: float) -> int:
    return int(round(math.log2(x)))
