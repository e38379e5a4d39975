"""Permanence measure, focusing detection and the critical-size scan.

The permanence ``1 - W`` is the probability found inside the window
``|n| <= n0``.  A square packet focuses when this probability rises above
its initial value at some finite time before the packet spreads out.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from focuslab import automaton, tightbinding
from focuslab.errors import ConfigError
from focuslab.fields import LatticeField, SpaceTimeGrid

EPSILON = 1e-6
PLATEAU_TOLERANCE = 0.01
PLATEAU_MIN_COUNT = 3
AUTOMATON_TAU_MAX = 60


def permanence(field: LatticeField, n0: int) -> float:
    """Probability inside ``|n| <= n0``; non-unitary inputs must be pre-normalized."""
    if n0 < 0:
        raise ValueError("n0 must be non-negative")
    return float(np.sum(np.abs(field.window(-n0, n0)) ** 2))


@dataclass(frozen=True)
class MeasureSeries:
    n0: int
    n: int
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def normalized(self) -> np.ndarray:
        return self.values / self.values[0]


@dataclass(frozen=True)
class FocusingVerdict:
    focusing: bool
    t_peak: float | None
    peak_value: float
    normalized_peak: float


def series_from_grid(grid: SpaceTimeGrid, n0: int, n: int) -> MeasureSeries:
    inside = np.abs(grid.positions) <= n0
    return MeasureSeries(n0, n, grid.times, grid.intensity[:, inside].sum(axis=1))


def field_series(initial: LatticeField, n0: int, lam: float, time_grid, n: int = 0) -> MeasureSeries:
    """Permanence of an arbitrary initial field under tight-binding evolution."""
    grid = np.asarray(tightbinding.TBParams(lam, time_grid).time_grid)
    values = [permanence(tightbinding.propagate(initial, lam, t), n0) for t in grid]
    return MeasureSeries(n0, n, grid, np.array(values))


def measure_series(n_half: int, n0: int, lam: float = 1.0, time_grid=None) -> MeasureSeries:
    """``1 - W(t)`` of the normalized square packet on ``time_grid``."""
    if n_half < 1:
        raise ConfigError("N must be positive")
    if n0 < 0:
        raise ConfigError("n0 must be non-negative")
    if time_grid is None:
        time_grid = tightbinding.default_time_grid(n_half, lam)
    return field_series(LatticeField.square(n_half), n0, lam, time_grid, n=n_half)


def _vertex(t, v, k):
    """Vertex of the parabola through samples ``k-1, k, k+1``."""
    t0, t1, t2 = t[k - 1:k + 2]
    v0, v1, v2 = v[k - 1:k + 2]
    denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
    a = (t2 * (v1 - v0) + t1 * (v0 - v2) + t0 * (v2 - v1)) / denom
    b = (t2 * t2 * (v0 - v1) + t1 * t1 * (v2 - v0) + t0 * t0 * (v1 - v2)) / denom
    if a >= 0:
        return t1, v1
    tv = -b / (2 * a)
    if not t0 <= tv <= t2:
        return t1, v1
    c = v1 - a * t1 * t1 - b * t1
    return tv, max(v1, a * tv * tv + b * tv + c)


def detect_focusing(series: MeasureSeries, eps: float = EPSILON) -> FocusingVerdict:
    """Look for an interior maximum of the permanence above its initial value.

    The global maximum of the sampled series (the earliest one among samples
    equal within ``eps``) must lie strictly inside the grid and exceed the
    initial value by the relative margin ``eps``.  A series still rising at
    its last sample is therefore not focusing.  Peak time and height come
    from a parabola through the three samples around the maximum.
    """
    v = series.values
    t = series.times
    if len(v) < 3:
        raise ValueError("focusing detection needs at least 3 samples")
    v0 = v[0]
    k = int(np.flatnonzero(v >= v.max() * (1 - eps))[0])
    if k == 0 or k == len(v) - 1 or not v[k] > v0 * (1 + eps):
        return FocusingVerdict(False, None, float(v0), float(v.max() / v0))
    tp, vp = _vertex(t, v, k)
    return FocusingVerdict(True, float(tp), float(vp), float(vp / v0))


def tb_focusing_time(n_half: int, lam: float = 1.0, n0: int = 1) -> float:
    """Peak time of the permanence series on the default grid."""
    verdict = detect_focusing(measure_series(n_half, n0, lam))
    if not verdict.focusing:
        raise ValueError(f"N={n_half} does not focus for n0={n0}")
    return verdict.t_peak


@dataclass(frozen=True)
class ScanRow:
    n: int
    t_peak: float | None
    normalized_peak: float
    focusing: bool


@dataclass(frozen=True)
class ScanResult:
    rows: list[ScanRow]
    plateau: float | None
    first_plateau_n: int | None
    critical_n: int | None
    inconclusive: bool
    reason: str = ""


def scan_row(n, n0, lam, time_grid):
    verdict = detect_focusing(measure_series(n, n0, lam, time_grid))
    return ScanRow(n, verdict.t_peak, verdict.normalized_peak, verdict.focusing)


def plateau_analysis(rows: list[ScanRow], tol: float = PLATEAU_TOLERANCE) -> ScanResult:
    """Locate where normalized peaks stop changing with ``N``.

    The plateau is the median normalized peak of the three largest ``N``.
    The first plateau size is the smallest ``N`` from which every larger
    size stays within ``tol`` of it; the critical size is the one just
    before, the last size whose peak still differs.
    """
    if len(rows) < PLATEAU_MIN_COUNT:
        return ScanResult(rows, None, None, None, True, "fewer than 3 sizes scanned")
    peaks = np.array([r.normalized_peak for r in rows])
    plateau = float(np.median(peaks[-PLATEAU_MIN_COUNT:]))
    within = np.abs(peaks / plateau - 1) <= tol
    start = len(rows)
    while start > 0 and within[start - 1]:
        start -= 1
    if len(rows) - start < PLATEAU_MIN_COUNT:
        return ScanResult(rows, plateau, None, None, True,
                          "plateau not established by the largest sizes")
    if start == 0:
        return ScanResult(rows, plateau, rows[0].n, None, True,
                          "every size is already on the plateau")
    return ScanResult(rows, plateau, rows[start].n, rows[start - 1].n, False)


def transition_scan(n_range, n0: int = 1, lam: float = 1.0, time_grid=None,
                    threads: int = 1) -> ScanResult:
    """Normalized permanence peaks over ``n_range`` and the critical size.

    Without ``time_grid`` each size uses its own default grid.  Rows are
    computed on ``threads`` workers and collected in input order, so the
    result does not depend on the worker count.
    """
    ns = [int(n) for n in n_range]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("N range must be strictly ascending")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda n: scan_row(n, n0, lam, time_grid), ns))
    else:
        rows = [scan_row(n, n0, lam, time_grid) for n in ns]
    return plateau_analysis(rows)


def automaton_series(n_half: int, delta: float, tau_max: int = AUTOMATON_TAU_MAX,
                     n0: int = 1) -> MeasureSeries:
    """Permanence of the automaton packet with every step rescaled to unit norm."""
    grid = automaton.evolve_square(n_half, delta, tau_max).normalized_rows()
    return series_from_grid(grid, n0, n_half)


def classify_automaton(n_half: int, delta: float, tau_max: int = AUTOMATON_TAU_MAX,
                       n0: int = 1) -> FocusingVerdict:
    return detect_focusing(automaton_series(n_half, delta, tau_max, n0))
