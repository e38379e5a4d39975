import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import sici

from focuslab.continuum import (central_intensity, convention_check, focusing_time, free_kernel,
                                free_propagate_square, quadrature_oracle)

# located maximum of |phi(0,t)|^2 for L=1, frozen from the Fresnel closed form
FOCUS_CONSTANT = 0.027204225157532888


def test_initial_limit():
    assert abs(free_propagate_square(1.0, 0.0, 0.0) - 1) == 0
    assert abs(free_propagate_square(1.0, 0.0, 1e-10) - 1) < 1e-4


def test_evanescent_tail():
    for x in (3.0, -3.0):
        assert abs(free_propagate_square(1.0, x, 1e-3)) ** 2 < 1e-2


def test_central_intensity_exceeds_initial_at_focus():
    assert central_intensity(1.0, 0.026) > 1


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        free_propagate_square(1.0, 0.0, -0.1)
    with pytest.raises(ValueError):
        free_kernel(0.0, 0.0)


@pytest.mark.parametrize("x,t", [(0.0, 0.026), (0.7, 0.05), (0.3, 0.001), (1.2, 0.4)])
def test_closed_form_matches_quadrature(x, t):
    res = quadrature_oracle(1.0, x, t, 100_000)
    assert res.accurate
    assert abs(res.value - free_propagate_square(1.0, x, t)) < 1e-6


def test_quadrature_flags_singular_time():
    res = quadrature_oracle(1.0, 0.0, 0.0, 100_000)
    assert not res.accurate


def test_quadrature_flags_under_resolved_time():
    res = quadrature_oracle(1.0, 0.2, 1e-7, 10_000)
    assert not res.accurate


def far_tail(L, t, X):
    """Mass of the asymptotic density (4t/(pi L)) sin^2(xL/4t)/x^2 beyond |x| = X."""
    b = L / (2 * t)
    si, _ = sici(b * X)
    cos_tail = np.cos(b * X) / X - b * (np.pi / 2 - si)
    return 2 * (4 * t / (np.pi * L)) * (1 / (2 * X) - cos_tail / 2)


@pytest.mark.parametrize("t", [0.005, 0.026, 0.1])
def test_norm_conservation(t):
    # hard edges leave a slowly decaying far field; integrate wide and add its tail
    X = 100.0
    xs = np.linspace(-X, X, 1_000_001)
    dens = np.abs(free_propagate_square(1.0, xs, t)) ** 2
    total = np.sum((dens[1:] + dens[:-1]) / 2 * np.diff(xs)) + far_tail(1.0, t, X)
    assert abs(total - 1) < 1e-6


def test_parity_exact():
    xs = np.linspace(0, 2, 41)
    a = free_propagate_square(1.3, xs, 0.07)
    b = free_propagate_square(1.3, -xs, 0.07)
    assert np.array_equal(a, b)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(-1.0, 1.0), st.floats(0.002, 0.2), st.floats(0.3, 3.0))
def test_scale_invariance(L, xr, tr, s):
    x = xr * L
    t = tr * L * L
    lhs = abs(free_propagate_square(L, x, t)) ** 2
    rhs = abs(free_propagate_square(L / s, x / s, t / s**2)) ** 2 / s
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_focusing_time_values():
    assert focusing_time(1.0) == pytest.approx(FOCUS_CONSTANT, rel=1e-4)
    assert focusing_time(1.0) == pytest.approx(0.026, rel=0.1)
    assert focusing_time(10.0) == pytest.approx(2.6, rel=0.1)


def test_quadratic_scaling():
    for L in (1.0, 5.0, 10.0):
        assert focusing_time(2 * L) / focusing_time(L) == pytest.approx(4.0, abs=1e-3)


def test_single_global_interior_maximum():
    # edge diffraction rings at early times; only the global maximum is unique
    ts = np.linspace(1e-5, 0.1, 2001)
    v = central_intensity(1.0, ts)
    k = int(np.argmax(v))
    assert 0 < k < len(ts) - 1
    assert np.sort(v)[-2] < v[k]
    local = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])) + 1
    others = local[local != k]
    assert v[others].max() < 0.95 * v[k]
    assert ts[k] == pytest.approx(FOCUS_CONSTANT, abs=1e-4)


def test_convention_not_flagged():
    check = convention_check(1.0)
    assert not check.flagged
    assert 0.0234 <= check.constant <= 0.0286
