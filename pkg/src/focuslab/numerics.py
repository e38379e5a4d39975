"""Bessel functions of the first kind and exact combinatorial helpers.

``bessel_j_table`` runs Miller's backward recurrence from an order well above
both the requested orders and the argument, and normalizes with the
squared-sum identity ``J_0^2 + 2 sum_{k>=1} J_k^2 = 1``.  The sign of the
normalization is taken from ``J_0 + 2 sum_{m>=1} J_{2m} = 1``.  A single sweep
therefore yields every order ``0..n`` at once, which is what the lattice
kernels consume.  The recurrence is dtype-generic so the same code runs in
extended precision (``np.longdouble``) when a study needs it.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

MAX_ORDER = 10**6

# rescale threshold; squares must stay representable
_BIG = 1e100
# ln of the smallest normal double, below which J_n(x) underflows anyway
_LOG_UNDERFLOW = -745.0
_TINY = 1e-5


def _start_order(xmax: float, nmax: int) -> int:
    base = max(nmax, int(math.ceil(xmax)))
    return base + 20 + int(math.sqrt(160.0 * max(base, 1)))


def bessel_j_table(x, max_order: int, dtype=np.float64) -> np.ndarray:
    """``J_0..J_max_order`` at ``x``.

    Parameters
    ----------
    x : float or 1-D array
        Real argument(s); must be finite.
    max_order : int
        Highest non-negative order returned.
    dtype : numpy floating dtype
        Working precision of the recurrence.

    Returns
    -------
    ndarray of shape ``(max_order + 1,) + np.shape(x)``
    """
    if max_order < 0:
        raise ValueError("max_order must be non-negative")
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=dtype))
    if xs.ndim != 1:
        raise ValueError("x must be a scalar or a 1-D array")
    if not np.all(np.isfinite(xs)):
        raise ValueError("Bessel argument must be finite")

    ax = np.abs(xs)
    # below _TINY the recurrence ratio 2k/x overflows; two series terms are exact there
    tiny = ax < _TINY
    zero = tiny
    safe = np.where(tiny, np.ones_like(ax), ax)
    top = _start_order(float(ax.max()) if ax.size else 0.0, max_order)

    out = np.zeros((max_order + 1, len(xs)), dtype=dtype)
    jp1 = np.zeros(len(xs), dtype=dtype)
    j = np.ones(len(xs), dtype=dtype)
    sumsq = np.zeros(len(xs), dtype=dtype)
    evensum = np.zeros(len(xs), dtype=dtype)

    def accumulate(order, val):
        nonlocal sumsq, evensum
        if order == 0:
            sumsq = sumsq + val * val
            evensum = evensum + val
        else:
            sumsq = sumsq + 2 * val * val
            if order % 2 == 0:
                evensum = evensum + 2 * val
        if order <= max_order:
            out[order] = val

    accumulate(top, j)
    for k in range(top, 0, -1):
        jm1 = (2 * k) / safe * j - jp1
        big = np.abs(jm1) > _BIG
        if big.any():
            scale = np.where(big, 1 / _BIG, 1).astype(dtype)
            jm1 = jm1 * scale
            j = j * scale
            sumsq = sumsq * scale * scale
            evensum = evensum * scale
            out *= scale
        jp1, j = j, jm1
        accumulate(k - 1, j)

    norm = np.sqrt(sumsq) * np.where(evensum < 0, -1, 1)
    out /= norm
    if tiny.any():
        out[:, tiny] = _small_argument(ax[tiny], max_order, dtype)
    neg = xs < 0
    if neg.any():
        out[1::2, neg] *= -1
    return out[:, 0] if scalar else out


def _small_argument(ax, max_order, dtype):
    """``(x/2)^n / n! * (1 - (x/2)^2 / (n+1))`` for ``|x| < _TINY``."""
    half = ax / 2
    out = np.zeros((max_order + 1, len(ax)), dtype=dtype)
    term = np.ones(len(ax), dtype=dtype)
    for n in range(max_order + 1):
        out[n] = term * (1 - half * half / (n + 1))
        term = term * half / (n + 1)
        if not term.any():
            break
    return out


def bessel_j(order: int, x: float) -> float:
    """``J_order(x)`` for integer order and real finite ``x``."""
    order = int(order)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("Bessel argument must be finite")
    if abs(order) > MAX_ORDER:
        raise ValueError(f"|order| must not exceed {MAX_ORDER}")
    n = abs(order)
    sign = -1.0 if (order < 0 and n % 2) else 1.0
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    # |J_n(x)| <= (|x|/2)^n / n!
    if n > abs(x) and n * math.log(abs(x) / 2) - log_factorial(n) < _LOG_UNDERFLOW:
        return 0.0
    return sign * float(bessel_j_table(x, n)[n])


def bessel_j_signed(x, radius: int, dtype=np.float64) -> np.ndarray:
    """``J_d(x)`` for ``d = -radius..radius`` at a scalar ``x``."""
    pos = bessel_j_table(x, radius, dtype=dtype)
    neg = pos[:0:-1].copy()
    # J_{-d} = (-1)^d J_d
    neg[(radius - np.arange(radius)) % 2 == 1] *= -1
    return np.concatenate([neg, pos])


def bessel_radius(x: float) -> int:
    """Order beyond which ``|J_d(x)|`` is below 1e-16 for every ``|d|``."""
    ax = abs(float(x))
    heuristic = ax + 40 + 10 * math.log1p(ax)
    # beyond the turning point J_d decays on the scale (x/2)^(1/3)
    transition = ax + 20 + 15 * ax ** (1 / 3)
    return int(math.ceil(max(heuristic, transition)))


def log_factorial(n: int) -> float:
    """``ln(n!)`` for a non-negative integer."""
    if int(n) != n:
        raise ValueError("log_factorial needs an integer")
    n = int(n)
    if n < 0:
        raise ValueError("log_factorial is undefined for negative n")
    if n <= 170:
        return _small_log_factorial(n)
    return math.lgamma(n + 1)


@lru_cache(maxsize=None)
def _small_log_factorial(n: int) -> float:
    return math.log(math.factorial(n))


def log_factorial_table(n_max: int) -> np.ndarray:
    return np.array([log_factorial(k) for k in range(n_max + 1)])


def kahan_add(total, comp, term):
    """One compensated-summation step; returns the updated ``(total, comp)``."""
    y = term - comp
    t = total + y
    comp = (t - total) - y
    return t, comp
