"""Two-species linear cellular automaton.

Populations ``x`` and ``y`` on an integer lattice evolve as::

    x'_n = x_n + delta * (y_{n+1} + y_{n-1})
    y'_n = y_n - delta * (x_{n+1} + x_{n-1})

With ``phi = x + i y`` this is the single complex map
``phi'_n = phi_n - i delta (phi_{n+1} + phi_{n-1})``, a non-unitary Floquet
step.  Its ``tau``-step kernel is a finite polynomial in ``delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from focuslab.fields import LatticeField, SpaceTimeGrid
from focuslab.numerics import kahan_add, log_factorial, log_factorial_table

# (-i)^r for r mod 4
_MINUS_I_POWERS = (1 + 0j, -1j, -1 + 0j, 1j)


@dataclass(frozen=True)
class AutomatonParams:
    delta: float
    tau_max: int
    half_width: int

    def __post_init__(self):
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")
        if self.tau_max < 0:
            raise ValueError("tau_max must be non-negative")
        if self.half_width < 1:
            raise ValueError("half_width must be positive")

    @classmethod
    def for_square(cls, n_half: int, delta: float, tau_max: int) -> AutomatonParams:
        # support grows by exactly one site per step
        return cls(delta, tau_max, n_half + tau_max)


@dataclass(frozen=True)
class SpeciesPair:
    offset: int
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("species arrays must have equal length")

    def to_field(self) -> LatticeField:
        return LatticeField(self.offset, np.asarray(self.x) + 1j * np.asarray(self.y))


def step(field: LatticeField, delta: float) -> LatticeField:
    """One automaton step; the support widens by one site on each side."""
    a = field.amplitudes
    out = np.zeros(len(a) + 2, dtype=a.dtype)
    out[1:-1] = a
    neighbours = np.zeros_like(out)
    neighbours[:-2] += a
    neighbours[2:] += a
    return LatticeField(field.offset - 1, out - 1j * delta * neighbours)


def species_view(field: LatticeField) -> SpeciesPair:
    return SpeciesPair(field.offset, field.amplitudes.real.copy(), field.amplitudes.imag.copy())


def species_step(pair: SpeciesPair, delta: float) -> SpeciesPair:
    """Apply the two real population updates directly."""
    def padded(v):
        out = np.zeros(len(v) + 2)
        out[1:-1] = v
        return out

    def neighbour_sum(v):
        out = np.zeros(len(v) + 2)
        out[:-2] += v
        out[2:] += v
        return out

    x, y = np.asarray(pair.x, float), np.asarray(pair.y, float)
    x_new = padded(x) + delta * neighbour_sum(y)
    y_new = padded(y) - delta * neighbour_sum(x)
    return SpeciesPair(pair.offset - 1, x_new, y_new)


def kernel(tau: int, d: int, delta: float) -> complex:
    """Closed-form ``tau``-step kernel between sites ``d`` apart.

    Terms are summed in ascending ``r`` with compensated accumulation; each
    term is formed in log space so ``tau`` beyond the factorial overflow
    point is representable.
    """
    tau, d = int(tau), int(d)
    if tau < 0:
        raise ValueError("tau must be non-negative")
    d = abs(d)
    if d > tau:
        return 0j
    if delta == 0:
        return 1 + 0j if d == 0 else 0j
    log_delta = math.log(abs(delta))
    neg = delta < 0
    lf_tau = log_factorial(tau)
    total = 0j
    comp = 0j
    for r in range(d, tau + 1, 2):
        logmag = (lf_tau - log_factorial(tau - r) - log_factorial((r + d) // 2)
                  - log_factorial((r - d) // 2) + r * log_delta)
        phase = _MINUS_I_POWERS[r % 4] * (-1 if neg and r % 2 else 1)
        total, comp = kahan_add(total, comp, phase * math.exp(logmag))
    return total


def kernel_row(tau: int, delta: float, lf: np.ndarray | None = None) -> np.ndarray:
    """``kernel(tau, d, delta)`` for ``d = -tau..tau``; same summation order as ``kernel``."""
    tau = int(tau)
    if tau < 0:
        raise ValueError("tau must be non-negative")
    row = np.zeros(2 * tau + 1, dtype=complex)
    if delta == 0:
        row[tau] = 1
        return row
    if lf is None:
        lf = log_factorial_table(tau)
    log_delta = math.log(abs(delta))
    neg = delta < 0
    comp = np.zeros_like(row)
    for r in range(tau + 1):
        # |d| <= r with r + d even
        d = np.arange(-r, r + 1, 2)
        logmag = lf[tau] - lf[tau - r] - lf[(r + d) // 2] - lf[(r - d) // 2] + r * log_delta
        phase = _MINUS_I_POWERS[r % 4] * (-1 if neg and r % 2 else 1)
        idx = d + tau
        row[idx], comp[idx] = kahan_add(row[idx], comp[idx], phase * np.exp(logmag))
    return row


def evolve_field(field: LatticeField, delta: float, tau: int) -> LatticeField:
    """``tau`` steps applied through the closed-form kernel."""
    k = kernel_row(tau, delta)
    return LatticeField(field.offset - tau, np.convolve(field.amplitudes, k))


def evolve_square(n_half: int, delta: float, tau_max: int) -> SpaceTimeGrid:
    """Intensity ``|phi_{tau,n}|^2`` of the normalized square packet.

    Rows are ``tau = 0..tau_max``; columns cover ``|n| <= n_half + tau_max``
    so the support never touches the edge.  Accuracy is limited by the
    alternating kernel sum, whose cancellation grows roughly like
    ``((1 + 2|delta|) / sqrt(1 + 4 delta^2)) ** tau``.
    """
    if n_half < 1:
        raise ValueError("n_half must be positive")
    params = AutomatonParams.for_square(n_half, delta, tau_max)
    hw = params.half_width
    sites = np.arange(-hw, hw + 1)
    packet = LatticeField.square(n_half)
    lf = log_factorial_table(tau_max)
    rows = np.zeros((tau_max + 1, len(sites)))
    for tau in range(tau_max + 1):
        amps = np.convolve(packet.amplitudes, kernel_row(tau, delta, lf))
        first = -n_half - tau
        rows[tau, first + hw:first + hw + len(amps)] = np.abs(amps) ** 2
    return SpaceTimeGrid(np.arange(tau_max + 1, dtype=float), sites, rows)


def iterate(field: LatticeField, delta: float, tau: int) -> LatticeField:
    for _ in range(tau):
        field = step(field, delta)
    return field
