"""Discrete and continuous Wigner functions of square packets.

On the lattice ``W_n(k) = 2 sum_m exp(2ikm) phi_{n-m} conj(phi_{n+m})`` with
Bloch momentum ``k`` on the strip ``[-pi/2, pi/2)``; the function is
``pi``-periodic in ``k`` and ``(1/2pi) int W_n dk = |phi_n|^2`` over the
strip.  Under tight-binding evolution every fixed-``k`` row obeys a discrete
wave equation with speed ``2 |lam sin k|`` per site:

    W''_n = 4 lam^2 sin^2 k (W_{n+1} + W_{n-1} - 2 W_n)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from focuslab.errors import NumericalConsistencyError
from focuslab.fields import LatticeField
from focuslab.numerics import bessel_j_table, bessel_radius

IMAG_TOLERANCE = 1e-12
DEFAULT_K_NODES = 201
# below this |2 lam sin k| the velocity partner is replaced by its small-c limit
_SLOW_SPEED = 1e-12
_GAUSS_ORDER = 20


@dataclass(frozen=True)
class WignerGrid:
    """``values[i, j] = W_{n[i]}(k[j])``."""

    n: np.ndarray
    k: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.n), len(self.k)):
            raise ValueError("values must have shape (len(n), len(k))")

    def row(self, site: int) -> np.ndarray:
        idx = np.flatnonzero(self.n == site)
        if len(idx) == 0:
            return np.zeros(len(self.k), dtype=self.values.dtype)
        return self.values[idx[0]]


def default_k_grid(nodes: int = DEFAULT_K_NODES, dtype=np.float64) -> np.ndarray:
    """Uniform periodic samples of ``[-pi/2, pi/2)``."""
    # np.pi is a double; rebuild it in the requested type
    pi = 4 * np.arctan(np.asarray(1, dtype=dtype))
    return -pi / 2 + pi * np.arange(nodes, dtype=dtype) / nodes


def _cross(f: LatticeField, g: LatticeField, k, sites) -> np.ndarray:
    """``2 sum_m exp(2ikm) f_{n-m} conj(g_{n+m})`` for every ``n`` in ``sites``."""
    first = min(f.offset, g.offset)
    last = max(f.last_site, g.last_site)
    a = f.window(first, last)
    b = np.conj(g.window(first, last))
    k = np.asarray(k)
    reach = last - first
    m = np.arange(-reach, reach + 1)
    ctype = np.result_type(a.dtype, k.dtype, np.complex128)
    phase = np.exp(2j * np.outer(m, k).astype(ctype))
    out = np.zeros((len(sites), len(k)), dtype=ctype)
    for i, n in enumerate(sites):
        lo = max(first - n, n - last)
        hi = min(n - first, last - n)
        if lo > hi:
            continue
        ms = np.arange(lo, hi + 1)
        c = a[n - ms - first] * b[n + ms - first]
        out[i] = c @ phase[ms + reach]
    return 2 * out


def _real(values, what):
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residue > IMAG_TOLERANCE:
        raise NumericalConsistencyError(f"{what} has imaginary residue {residue:.3g}")
    return values.real.copy()


def discrete_wigner(field: LatticeField, k=None, sites=None) -> WignerGrid:
    """Wigner function of a lattice field.

    ``sites`` defaults to the support of ``field``; rows outside the support
    are zero.  The computation keeps the precision of ``field`` and ``k``,
    so extended-precision inputs give an extended-precision grid.
    """
    if k is None:
        k = default_k_grid()
    k = np.atleast_1d(np.asarray(k))
    sites = field.sites if sites is None else np.asarray(sites, dtype=int)
    return WignerGrid(sites, k, _real(_cross(field, field, k, sites), "Wigner transform"))


def wigner_velocity(field: LatticeField, lam: float, k=None, sites=None) -> WignerGrid:
    """``dW/dt`` at the instant of ``field`` under tight-binding evolution."""
    if k is None:
        k = default_k_grid()
    k = np.atleast_1d(np.asarray(k))
    sites = field.sites if sites is None else np.asarray(sites, dtype=int)
    a = field.amplitudes
    nb = np.zeros(len(a) + 2, dtype=a.dtype)
    nb[:-2] += a
    nb[2:] += a
    dphi = LatticeField(field.offset - 1, -1j * lam * nb)
    v = _cross(dphi, field, k, sites) + _cross(field, dphi, k, sites)
    return WignerGrid(sites, k, _real(v, "Wigner velocity"))


def initial_square_wigner(n_half: int, n, k):
    """Closed-form Wigner function of the normalized square packet.

    ``2/(2N+1) * sin(k(2M+1)) / sin k`` with ``M = N - |n|`` inside the
    packet and zero outside; near ``sin k = 0`` the equivalent cosine sum
    ``1 + 2 sum_j cos(2jk)`` is used.
    """
    scalar = np.ndim(n) == 0 and np.ndim(k) == 0
    n, k = np.broadcast_arrays(np.atleast_1d(n), np.atleast_1d(np.asarray(k, dtype=float)))
    m = n_half - np.abs(n)
    s = np.sin(k)
    out = np.zeros(n.shape)
    inside = m >= 0
    safe = inside & (np.abs(s) > 1e-6)
    out[safe] = np.sin(k[safe] * (2 * m[safe] + 1)) / s[safe]
    for idx in zip(*np.nonzero(inside & ~safe)):
        j = np.arange(1, m[idx] + 1)
        out[idx] = 1 + 2 * np.sum(np.cos(2 * j * k[idx]))
    out *= 2 / (2 * n_half + 1)
    return out[0] if scalar else out


def wave_speed2(lam: float, k):
    return 4 * lam * lam * np.sin(np.asarray(k)) ** 2


def wigner_wave_residual(grids, times, lam: float, exclude: float = 1e-3) -> float:
    """Largest violation of the discrete wave equation over ``(n, k)``.

    ``grids`` are Wigner grids on one common ``(n, k)`` lattice at uniformly
    spaced ``times`` (at least three).  The time derivative is the central
    second difference.  Momenta within ``exclude`` of ``0`` and ``+-pi/2``
    are skipped, where the speed vanishes or the strip ends.  For
    ``lam = 0`` the equation degenerates to ``W'' = 0``.
    """
    grids = list(grids)
    if len(grids) < 3 or len(grids) != len(times):
        raise ValueError("need at least three grids, one per time")
    times = np.asarray(times)
    steps = np.diff(times)
    h = steps[0]
    if np.any(np.abs(steps - h) > 1e-9 * abs(h)):
        raise ValueError("times must be uniformly spaced")
    k = grids[0].k
    keep = ((np.abs(k) > exclude) & (np.abs(np.abs(k) - np.pi / 2) > exclude))
    w = np.stack([g.values[:, keep] for g in grids])
    d2 = (w[2:] - 2 * w[1:-1] + w[:-2]) / (h * h)
    if lam == 0:
        return float(np.max(np.abs(d2)))
    centre = w[1:-1]
    padded = np.pad(centre, ((0, 0), (1, 1), (0, 0)))
    lap = padded[:, 2:] + padded[:, :-2] - 2 * centre
    res = d2 / wave_speed2(lam, k[keep]) - lap
    return float(np.max(np.abs(res)))


@dataclass(frozen=True)
class WaveEvolution:
    n: np.ndarray
    values: np.ndarray
    fallback: bool


def bessel_wave_evolve(n, w0, v0, lam: float, k: float, t: float, field=None,
                       sites=None) -> WaveEvolution:
    """Evolve one fixed-``k`` Wigner row with the Bessel mode expansion.

    With ``c = 2 lam sin k`` and ``z = 2ct`` the row at time ``t`` is::

        W_n(t) = sum_m J_{2(n-m)}(z) W_m(0) + sum_m S_{n-m}(t) V_m(0)
        S_d(t) = (1/c) sum_{j>=0} J_{2|d|+2j+1}(z)

    where ``V = dW/dt`` at ``t = 0`` and ``S_d`` integrates ``J_{2d}(2cs)``
    over ``[0, t]``.  When ``|c|`` is too small for the division the row is
    taken from ``field`` (the transform of the evolved state) if given, or
    from ``W + t V`` otherwise; ``fallback`` is set in both cases.
    """
    n = np.asarray(n, dtype=int)
    w0 = np.asarray(w0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    c = 2 * lam * math.sin(k)
    z = 2 * c * t
    if sites is None:
        reach = bessel_radius(z) // 2 + 2
        sites = np.arange(n[0] - reach, n[-1] + reach + 1)
    sites = np.asarray(sites, dtype=int)
    if t == 0:
        out = np.zeros(len(sites))
        pos = np.searchsorted(sites, n)
        out[pos] = w0
        return WaveEvolution(sites, out, False)
    if abs(c) < _SLOW_SPEED:
        if field is not None:
            row = discrete_wigner(field, [k], sites).values[:, 0]
        else:
            out = np.zeros(len(sites))
            out[np.searchsorted(sites, n)] = w0 + t * v0
            row = out
        return WaveEvolution(sites, row, True)
    span = int(max(abs(sites[0] - n[-1]), abs(sites[-1] - n[0])))
    top = 2 * span + bessel_radius(z) + 2
    j = bessel_j_table(z, top)
    # odd-order tails sum_{j>=0} J_{nu+2j}
    tail = j.copy()
    for order in range(top - 2, -1, -1):
        tail[order] += tail[order + 2]
    d = np.abs(sites[:, None] - n[None, :])
    even = j[2 * d]
    partner = tail[2 * d + 1] / c
    return WaveEvolution(sites, even @ w0 + partner @ v0, False)


def shear_approximation(n_half: int, nu, k, t, lam: float = 1.0, variant: str = "shear"):
    """Rigid transport of the initial square-packet Wigner function.

    ``nu`` is the site coordinate in units of ``|lam|``; the profile is read
    at site ``|lam| nu + 2 lam t sin k`` (``variant="shear"``) or averaged
    over both directions of travel (``variant="dalembert"``), with linear
    interpolation between integer sites.
    """
    nu, k = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(k, dtype=float))
    base = abs(lam) * nu
    shift = 2 * lam * t * np.sin(k)
    if variant == "shear":
        return _interpolated(n_half, base + shift, k)
    if variant == "dalembert":
        return 0.5 * (_interpolated(n_half, base + shift, k) + _interpolated(n_half, base - shift, k))
    raise ValueError(f"unknown variant {variant!r}")


def _interpolated(n_half, site, k):
    lo = np.floor(site)
    frac = site - lo
    a = initial_square_wigner(n_half, lo.astype(int), k)
    b = initial_square_wigner(n_half, lo.astype(int) + 1, k)
    return (1 - frac) * a + frac * b


def continuous_wigner_square(L: float, x, p):
    """Wigner function of ``1/sqrt(L)`` on ``|x| <= L/2``.

    ``(2/L) sin(2p(L/2 - |x|)) / p`` inside the packet, zero outside.
    """
    x, p = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(p, dtype=float))
    a = L / 2 - np.abs(x)
    # sin(2pa)/p = 2a sinc(2pa/pi), finite at p = 0
    out = np.where(a > 0, (2 / L) * 2 * a * np.sinc(2 * p * a / np.pi), 0.0)
    return out[()] if out.ndim == 0 else out


def continuous_wigner_quadrature(L: float, x: float, p: float, nodes: int = 100_000) -> float:
    """Direct midpoint quadrature of ``2 int phi(x+y) conj(phi(x-y)) exp(-2ipy) dy``.

    Used as an oracle for ``continuous_wigner_square``; the integrand is the
    indicator of ``|y| < L/2 - |x|`` times ``cos(2py) / L``.
    """
    half = L / 2
    ys = (np.arange(nodes) + 0.5) / nodes * 2 * half - half
    dy = 2 * half / nodes
    inside = (np.abs(x + ys) <= half) & (np.abs(x - ys) <= half)
    f = np.where(inside, np.cos(2 * p * ys), 0.0) / L
    return float(2 * np.sum(f) * dy)


def _gauss_panels(panels: int):
    xg, wg = np.polynomial.legendre.leggauss(_GAUSS_ORDER)
    edges = np.linspace(0.0, 1.0, panels + 1)
    mid = (edges[1:] + edges[:-1]) / 2
    half = (edges[1:] - edges[:-1]) / 2
    u = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return u, w


def continuous_shear_slice(L: float, t) -> np.ndarray:
    """Central intensity ``|phi(0, t)|^2`` from the sheared Wigner function.

    ``(1/2pi) int W(2pt, p; 0) dp`` collects the phase-space points that the
    shear ``x -> x - 2pt`` brings to the origin.  With ``p = u L / 4t`` it
    becomes ``(2/(pi L)) int_0^1 sin(a u (1-u)) / u du``, ``a = L^2 / 4t``,
    evaluated with composite Gauss-Legendre panels.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise ValueError("t must be non-negative")
    out = np.empty(len(ts))
    for i, ti in enumerate(ts):
        if ti == 0:
            out[i] = 1 / L
            continue
        a = L * L / (4 * ti)
        u, w = _gauss_panels(max(8, int(math.ceil(a / 4))))
        out[i] = 2 / (np.pi * L) * np.sum(w * np.sin(a * u * (1 - u)) / u)
    return out[0] if np.ndim(t) == 0 else out


def k_marginal(grid: WignerGrid) -> np.ndarray:
    """``(1/2pi) int W_n(k) dk`` over the strip, one value per site.

    Requires uniform periodic samples of the strip, on which the trapezoid
    rule is the sample mean and is exact for fields narrower than the grid.
    """
    k = np.asarray(grid.k, dtype=float)
    step = np.pi / len(k)
    if not np.allclose(np.diff(k), step, rtol=1e-9, atol=0):
        raise ValueError("k must be a uniform periodic grid over the strip")
    return grid.values.mean(axis=1) / 2


def n_marginal(grid: WignerGrid) -> np.ndarray:
    return grid.values.sum(axis=0)


def positive_fraction(grid: WignerGrid, n_max: int = 2, k_max: float = np.pi / 4) -> float:
    """Share of strictly positive values in ``|n| <= n_max``, ``|k| <= k_max``."""
    rows = np.abs(grid.n) <= n_max
    cols = np.abs(grid.k) <= k_max
    window = grid.values[np.ix_(rows, cols)]
    return float(np.mean(window > 0))


@dataclass(frozen=True)
class ShearDiscrepancy:
    pointwise: float
    relative_l2: float
    max_abs: float
    points: int


def shear_discrepancy(grid: WignerGrid, n_half: int, t: float, lam: float = 1.0,
                      columns=None, threshold: float = 0.1,
                      variant: str = "shear") -> ShearDiscrepancy:
    """Compare an evolved square-packet grid with its shear approximation.

    Only the selected ``columns`` of ``grid`` (all by default) and the points
    where ``|W|`` exceeds ``threshold`` times its largest magnitude there are
    compared.  ``pointwise`` is the largest relative error on that region,
    ``relative_l2`` the ratio of the error norm to the norm of ``W``.
    """
    cols = np.ones(len(grid.k), dtype=bool) if columns is None else np.asarray(columns)
    w = np.asarray(grid.values[:, cols], dtype=float)
    s = shear_approximation(n_half, grid.n[:, None], np.asarray(grid.k[cols], dtype=float)[None, :],
                            t, lam, variant)
    if w.size == 0:
        raise ValueError("no columns selected")
    region = np.abs(w) > threshold * np.abs(w).max()
    err = np.abs(w - s)[region]
    return ShearDiscrepancy(float(np.max(err / np.abs(w[region]))),
                            float(np.linalg.norm(err) / np.linalg.norm(w[region])),
                            float(np.max(np.abs(w - s))), int(region.sum()))
