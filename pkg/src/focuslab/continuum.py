"""Free propagation of a square packet under ``i phi_t = -phi_xx``.

The propagator is ``G(xi, t) = (4 pi i t)^(-1/2) exp(i xi^2 / 4t)``.  For the
packet ``1/sqrt(L)`` on ``|x| <= L/2`` the convolution reduces to Fresnel
integrals of the two edge arguments ``(x -+ L/2) / sqrt(2 pi t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import fresnel

# relative half-width of the band around the nominal constant 0.026 that
# counts as a doubled or halved coefficient convention
_CONVENTION_BAND = 0.15


def free_kernel(xi, t):
    """Free-particle propagator ``G(xi, t)``; ``t`` must be positive."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("the free kernel needs t > 0")
    xi = np.asarray(xi, dtype=float)
    return np.exp(1j * xi**2 / (4 * t)) / np.sqrt(4j * np.pi * t)


def initial_square(L: float, x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= L / 2, 1 / math.sqrt(L), 0.0).astype(complex)


def free_propagate_square(L: float, x, t):
    """``phi(x, t)`` for the unit-norm square packet of length ``L``.

    Broadcasts over ``x`` and ``t``.  ``t = 0`` returns the initial data;
    negative times are rejected.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("negative times are not supported")
    x, t = np.broadcast_arrays(x, t)
    out = initial_square(L, x)
    live = t > 0
    if np.any(live):
        tl = t[live]
        scale = np.sqrt(2 * np.pi * tl)
        sa, ca = fresnel((x[live] - L / 2) / scale)
        sb, cb = fresnel((x[live] + L / 2) / scale)
        # integral of exp(i pi s^2 / 2) between the edge arguments
        edge = (cb - ca) + 1j * (sb - sa)
        out[live] = edge * scale / np.sqrt(4j * np.pi * tl) / math.sqrt(L)
    return out[()] if out.ndim == 0 else out


def central_intensity(L: float, t):
    return np.abs(free_propagate_square(L, 0.0, t)) ** 2


def focusing_time(L: float, samples: int = 200, rtol: float = 1e-4) -> float:
    """Time of maximal central intensity on ``(0, 0.1 L^2]``.

    A coarse scan of ``samples`` points brackets the maximum, then a
    golden-section search refines it to relative precision ``rtol``.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    ts = np.linspace(0, 0.1 * L * L, samples + 1)[1:]
    vals = central_intensity(L, ts)
    i = int(np.argmax(vals))
    if i == 0 or i == len(ts) - 1:
        return float(ts[i])
    res = minimize_scalar(lambda s: -float(central_intensity(L, s)),
                          bracket=(ts[i - 1], ts[i], ts[i + 1]),
                          method="golden", tol=rtol / 10)
    return float(res.x)


@dataclass(frozen=True)
class ConventionCheck:
    constant: float
    flagged: bool
    note: str


def convention_check(L: float = 1.0) -> ConventionCheck:
    """Compare ``focusing_time(L) / L^2`` with the nominal 0.026.

    A constant near 0.013 or 0.052 signals a halved or doubled kinetic
    coefficient; it is reported, not rescaled.
    """
    c = focusing_time(L) / (L * L)
    for target, label in ((0.013, "halved"), (0.052, "doubled")):
        if abs(c / target - 1) < _CONVENTION_BAND:
            return ConventionCheck(c, True, f"constant {c:.5f} suggests a {label} kinetic coefficient")
    return ConventionCheck(c, False, "")


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    accurate: bool


def quadrature_oracle(L: float, x: float, t: float, nodes: int = 100_000,
                      target: float = 1e-6) -> QuadratureResult:
    """Composite Simpson evaluation of the kernel integral over the packet.

    The error estimate compares ``nodes`` with ``nodes/2`` intervals
    (Richardson, order 4).  ``accurate`` is false when the estimate exceeds
    ``target`` or when ``t <= 0``, where the kernel is singular.
    """
    if nodes < 10_000:
        raise ValueError("nodes must be at least 1e4")
    if t <= 0:
        return QuadratureResult(complex("nan"), math.inf, False)

    def simpson(m):
        m += m % 2
        xs = np.linspace(-L / 2, L / 2, m + 1)
        w = np.ones(m + 1)
        w[1:-1:2] = 4
        w[2:-1:2] = 2
        f = free_kernel(x - xs, t) / math.sqrt(L)
        return complex(np.dot(w, f) * (L / m) / 3)

    fine = simpson(nodes)
    coarse = simpson(nodes // 2)
    err = abs(fine - coarse) / 15
    return QuadratureResult(fine, err, err <= target)
