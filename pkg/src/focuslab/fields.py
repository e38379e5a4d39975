"""Containers shared by the lattice propagators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LatticeField:
    """Complex amplitudes on consecutive integer sites.

    ``amplitudes[j]`` lives on site ``offset + j``; every site outside the
    stored window carries zero amplitude.
    """

    offset: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be one-dimensional")
        if not np.issubdtype(amps.dtype, np.complexfloating):
            amps = amps.astype(complex)
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "amplitudes", amps)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.amplitudes))

    @property
    def last_site(self) -> int:
        return self.offset + len(self.amplitudes) - 1

    def norm2(self):
        """Total intensity, in the precision of the amplitudes."""
        return np.sum(np.abs(self.amplitudes) ** 2)

    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def value(self, n: int) -> complex:
        j = n - self.offset
        if 0 <= j < len(self.amplitudes):
            return self.amplitudes[j]
        return 0j

    def window(self, first: int, last: int) -> np.ndarray:
        """Amplitudes on ``first..last`` inclusive, zero-filled outside the support."""
        out = np.zeros(last - first + 1, dtype=self.amplitudes.dtype)
        lo = max(first, self.offset)
        hi = min(last, self.last_site)
        if lo <= hi:
            out[lo - first:hi - first + 1] = self.amplitudes[lo - self.offset:hi - self.offset + 1]
        return out

    def scaled(self, factor) -> LatticeField:
        return LatticeField(self.offset, self.amplitudes * factor)

    def __add__(self, other: LatticeField) -> LatticeField:
        first = min(self.offset, other.offset)
        last = max(self.last_site, other.last_site)
        return LatticeField(first, self.window(first, last) + other.window(first, last))

    @classmethod
    def delta(cls, site: int = 0, value: complex = 1.0) -> LatticeField:
        return cls(site, np.array([value], dtype=complex))

    @classmethod
    def square(cls, n_half: int, center: int = 0, normalized: bool = True) -> LatticeField:
        """Uniform packet on ``|n - center| <= n_half``."""
        if n_half < 0:
            raise ValueError("n_half must be non-negative")
        size = 2 * n_half + 1
        amp = 1.0 / np.sqrt(size) if normalized else 1.0
        return cls(center - n_half, np.full(size, amp, dtype=complex))


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Intensity sampled on a (time, position) lattice; rows are times."""

    times: np.ndarray
    positions: np.ndarray
    intensity: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        positions = np.asarray(self.positions)
        intensity = np.asarray(self.intensity, dtype=float)
        if intensity.shape != (len(times), len(positions)):
            raise ValueError(
                f"intensity shape {intensity.shape} does not match "
                f"{len(times)} times x {len(positions)} positions")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "intensity", intensity)

    def column(self, position) -> np.ndarray:
        idx = np.flatnonzero(self.positions == position)
        if len(idx) == 0:
            raise KeyError(position)
        return self.intensity[:, idx[0]]

    def normalized_rows(self) -> SpaceTimeGrid:
        """Each time slice rescaled to unit total intensity."""
        sums = self.intensity.sum(axis=1, keepdims=True)
        return SpaceTimeGrid(self.times, self.positions, self.intensity / sums)
