"""Nearest-neighbour tight-binding chain.

Amplitudes obey ``i dphi_n/dt = lam * (phi_{n+1} + phi_{n-1})``.  The
propagator between sites ``d`` apart is ``(-i)^d J_d(2 lam t)``, which is
unitary for every real ``t`` and reproduces one automaton step with
``delta = lam * T`` to first order in ``T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from focuslab import continuum
from focuslab.errors import ConfigError
from focuslab.fields import LatticeField, SpaceTimeGrid
from focuslab.numerics import bessel_j, bessel_j_table, bessel_radius

# (-i)^d for d mod 4
_PHASES = np.array([1, -1j, -1, 1j])

# expected focus ~ 0.026 (2N+1)^2 in lattice units; keep it well inside the window
_FOCUS_CONSTANT = 0.026


@dataclass(frozen=True)
class TBParams:
    lam: float
    time_grid: np.ndarray

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam == 0:
            raise ConfigError("lambda must be finite and non-zero")
        grid = np.asarray(self.time_grid, dtype=float)
        if grid.ndim != 1 or len(grid) == 0:
            raise ConfigError("time grid must be a non-empty 1-D array")
        if not np.all(np.isfinite(grid)) or grid[0] < 0:
            raise ConfigError("time grid must be finite and non-negative")
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("time grid must be strictly increasing")
        object.__setattr__(self, "time_grid", grid)


@dataclass(frozen=True)
class PacketArraySpec:
    count: int
    n_half: int
    spacing: int | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError("packet count must be positive")
        if self.n_half < 0:
            raise ConfigError("packet half-width must be non-negative")
        if self.spacing is None:
            # one empty site between neighbouring packets
            object.__setattr__(self, "spacing", 2 * self.n_half + 3)
        if self.spacing <= 2 * self.n_half:
            raise ConfigError(
                f"spacing {self.spacing} makes packets of half-width {self.n_half} overlap")

    def centers(self) -> np.ndarray:
        j = np.arange(self.count) - (self.count - 1) // 2
        return self.spacing * j

    def field(self) -> LatticeField:
        amp = 1.0 / math.sqrt(self.count * (2 * self.n_half + 1))
        total = None
        for c in self.centers():
            packet = LatticeField.square(self.n_half, center=int(c), normalized=False).scaled(amp)
            total = packet if total is None else total + packet
        return total


def tb_kernel(d: int, lam: float, t: float) -> complex:
    """Propagator ``(-i)^d J_d(2 lam t)`` between sites ``d`` apart."""
    d = int(d)
    return complex(_PHASES[d % 4] * bessel_j(d, 2 * lam * t))


def kernel_vector(lam: float, t: float, dtype=np.float64) -> tuple[int, np.ndarray]:
    """Truncated kernel on ``d = -R..R``; returns ``(R, values)``."""
    x = 2 * lam * t
    radius = bessel_radius(x)
    pos = bessel_j_table(x, radius, dtype=dtype)
    d = np.arange(-radius, radius + 1)
    j = pos[np.abs(d)]
    j = np.where((d < 0) & (d % 2 == 1), -j, j)
    ctype = np.result_type(dtype, np.complex64)
    return radius, _PHASES[d % 4].astype(ctype) * j


def propagate(field: LatticeField, lam: float, t: float, dtype=np.float64) -> LatticeField:
    """Evolve ``field`` for time ``t`` by convolution with the Bessel kernel.

    Sites where the kernel magnitude drops below 1e-16 are omitted.  Pass
    ``dtype=np.longdouble`` to run the whole convolution in extended
    precision.
    """
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if t == 0:
        return field
    radius, k = kernel_vector(lam, t, dtype)
    amps = field.amplitudes.astype(k.dtype)
    return LatticeField(field.offset - radius, np.convolve(amps, k))


def _space_time(initial: LatticeField, params: TBParams) -> SpaceTimeGrid:
    reach = bessel_radius(2 * params.lam * params.time_grid[-1])
    first = initial.offset - reach
    last = initial.last_site + reach
    rows = np.zeros((len(params.time_grid), last - first + 1))
    for i, t in enumerate(params.time_grid):
        rows[i] = np.abs(propagate(initial, params.lam, t).window(first, last)) ** 2
    return SpaceTimeGrid(params.time_grid, np.arange(first, last + 1), rows)


def evolve_square_tb(n_half: int, lam: float, time_grid) -> SpaceTimeGrid:
    """``|phi_n(t)|^2`` of the normalized square packet of half-width ``n_half``."""
    if n_half < 1:
        raise ConfigError("n_half must be positive")
    return _space_time(LatticeField.square(n_half), TBParams(lam, time_grid))


def evolve_packet_array(spec: PacketArraySpec, lam: float, time_grid) -> SpaceTimeGrid:
    """Intensity of ``spec.count`` disjoint square packets with unit total norm."""
    return _space_time(spec.field(), TBParams(lam, time_grid))


def default_time_grid(n_half: int, lam: float = 1.0, samples: int = 400) -> np.ndarray:
    """Uniform grid reaching 1.2x three times the expected focusing time."""
    t_max = 3 * (2 * n_half + 1) ** 2 * _FOCUS_CONSTANT * 1.2 / abs(lam)
    return np.linspace(0.0, t_max, samples)


def continuum_kernel_check(d: int, lam: float, t: float, relative: bool = True) -> float:
    """Distance between the lattice kernel and its continuum counterpart.

    With ``h = 1/sqrt(|lam|)`` and ``x = d h`` the kernel of a chain with
    negative coupling approaches ``h G(x, t)`` carried by the band bottom
    plus a staggered copy ``(-1)^d h conj(G)`` carried by the band top, each
    dressed with the band-edge phase ``exp(+-2i|lam|t)``.  Returns the
    discrepancy relative to ``h |G|`` (or absolute when ``relative`` is false);
    it shrinks as ``|lam|`` grows at fixed ``(x, t)``.
    """
    if lam >= 0:
        raise ValueError("the continuum limit needs lam < 0")
    if not t > 0:
        raise ValueError("t must be positive; the continuum kernel is singular at t=0")
    h = 1.0 / math.sqrt(-lam)
    g = continuum.free_kernel(d * h, t)
    edge = np.exp(2j * abs(lam) * t)
    approx = h * (edge * g + (-1) ** (d % 2) * np.conj(edge * g))
    diff = abs(tb_kernel(d, lam, t) - approx)
    return float(diff / (h * abs(g))) if relative else float(diff)
