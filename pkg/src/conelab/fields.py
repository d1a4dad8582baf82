"""Sampled functions on periodic space-time grids, with binary I/O."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from .errors import DomainError


def thread_count() -> int:
    """Worker cap from CONELAB_THREADS, defaulting to the machine's CPU count."""
    raw = os.environ.get("CONELAB_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise DomainError(f"CONELAB_THREADS must be an integer, got {raw!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


@dataclass(eq=False)
class SampledField:
    """Values at cell points ``origin + h * i`` of a periodic grid; the last axis is time."""

    data: np.ndarray
    extents: tuple
    origin: tuple

    def __post_init__(self):
        self.data = np.asarray(self.data)
        self.extents = tuple(float(e) for e in self.extents)
        self.origin = tuple(float(o) for o in self.origin)
        if len(self.extents) != self.data.ndim or len(self.origin) != self.data.ndim:
            raise DomainError("extents and origin must match the data rank")
        if min(self.extents) <= 0:
            raise DomainError("extents must be positive")

    @classmethod
    def zeros(cls, shape, extents, centered: bool = True, dtype=complex) -> "SampledField":
        origin = tuple(-e / 2 for e in extents) if centered else (0.0,) * len(shape)
        return cls(np.zeros(shape, dtype=dtype), extents, origin)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def spacing(self) -> np.ndarray:
        return np.array(self.extents) / np.array(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list:
        return [o + h * np.arange(n) for o, h, n in zip(self.origin, self.spacing, self.shape)]

    def frequencies(self) -> list:
        """Angular frequencies of each axis in FFT order."""
        return [2 * np.pi * sfft.fftfreq(n, h) for n, h in zip(self.shape, self.spacing)]

    def like(self, data) -> "SampledField":
        return SampledField(data, self.extents, self.origin)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.data) ** 2) * self.cell_volume))

    def spectrum(self) -> np.ndarray:
        return sfft.fftn(self.data, workers=thread_count())

    def parseval_defect(self) -> float:
        """Relative gap between the spatial and spectral L2 sums."""
        spec = self.spectrum()
        spatial = np.sum(np.abs(self.data) ** 2) * self.cell_volume
        spectral_cell = np.prod(2 * np.pi / np.array(self.extents))
        # continuum transform ~ cell_volume * DFT, with measure (2 pi)^-(n) dk
        spectral = np.sum(np.abs(spec * self.cell_volume) ** 2) * spectral_cell
        spectral /= (2 * np.pi) ** self.data.ndim
        return float(abs(spatial - spectral) / max(spatial, 1e-300))

    def shifted(self, cells) -> "SampledField":
        return self.like(np.roll(self.data, cells, axis=tuple(range(self.data.ndim))))


def write_field(path, f: SampledField) -> None:
    """Little-endian complex128 payload at ``path`` and a key=value sidecar at ``path.txt``."""
    path = Path(path)
    np.ascontiguousarray(f.data, dtype="<c16").tofile(path)
    lines = [
        "shape=" + ",".join(str(n) for n in f.shape),
        "extents=" + ",".join(repr(e) for e in f.extents),
        "origin=" + ",".join(repr(o) for o in f.origin),
    ]
    path.with_name(path.name + ".txt").write_text("\n".join(lines) + "\n")


def read_field(path) -> SampledField:
    path = Path(path)
    meta = {}
    for line in path.with_name(path.name + ".txt").read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            meta[k.strip()] = v.strip()
    shape = tuple(int(s) for s in meta["shape"].split(","))
    data = np.fromfile(path, dtype="<c16").reshape(shape)
    extents = tuple(float(s) for s in meta["extents"].split(","))
    origin = tuple(float(s) for s in meta["origin"].split(","))
    return SampledField(data, extents, origin)
