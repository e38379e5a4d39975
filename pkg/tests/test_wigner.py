import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from focuslab import wigner
from focuslab.continuum import central_intensity
from focuslab.errors import NumericalConsistencyError
from focuslab.fields import LatticeField
from focuslab.measures import tb_focusing_time
from focuslab.tightbinding import propagate
from focuslab.wigner import (bessel_wave_evolve, continuous_shear_slice, continuous_wigner_quadrature,
                             continuous_wigner_square, default_k_grid, discrete_wigner,
                             initial_square_wigner, k_marginal, n_marginal, positive_fraction,
                             shear_approximation, shear_discrepancy, wigner_velocity,
                             wigner_wave_residual)

SITES = np.arange(-40, 41)


def evolved(n_half, t, lam=1.0):
    return propagate(LatticeField.square(n_half), lam, t)


def test_delta_peak():
    g = discrete_wigner(LatticeField.delta(), sites=[-1, 0, 1])
    assert np.allclose(g.row(0), 2.0)
    assert np.all(g.row(1) == 0) and np.all(g.row(-1) == 0)


@pytest.mark.parametrize("n_half", [1, 7])
def test_closed_form_matches_transform(n_half):
    k = default_k_grid()
    sites = np.arange(-n_half - 2, n_half + 3)
    g = discrete_wigner(LatticeField.square(n_half), k, sites)
    closed = initial_square_wigner(n_half, sites[:, None], k[None, :])
    assert np.max(np.abs(g.values - closed)) < 1e-12


def test_closed_form_at_zero_momentum():
    assert initial_square_wigner(3, 1, 0.0) == pytest.approx(2 / 7 * 5)
    assert initial_square_wigner(3, 1, 1e-8) == pytest.approx(2 / 7 * 5, rel=1e-12)
    assert initial_square_wigner(3, 4, 0.3) == 0


def test_bloch_wave_concentrates():
    q = 0.3
    n = np.arange(-200, 201)
    field = LatticeField(-200, np.exp(1j * q * n) / np.sqrt(len(n)))
    k = default_k_grid(401)
    row = discrete_wigner(field, k, [0]).values[0]
    assert abs(k[np.argmax(row)] - q) <= np.pi / 401


def test_periodicity_in_momentum():
    f = evolved(3, 2.0)
    k = np.linspace(-1.5, 1.5, 31)
    a = discrete_wigner(f, k, SITES).values
    b = discrete_wigner(f, k + np.pi, SITES).values
    assert np.max(np.abs(a - b)) < 1e-12


def test_even_in_momentum_initially_but_not_at_focus():
    k = np.linspace(0.05, 1.5, 30)
    sq = LatticeField.square(7)
    g0 = discrete_wigner(sq, np.concatenate([k, -k]))
    assert np.max(np.abs(g0.values[:, :30] - g0.values[:, 30:])) < 1e-13
    f = evolved(7, tb_focusing_time(7))
    g = discrete_wigner(f, np.concatenate([k, -k]), SITES)
    assert np.max(np.abs(g.values[:, :30] - g.values[:, 30:])) > 1e-3


def test_k_marginal_recovers_intensity():
    f = evolved(4, 3.0)
    g = discrete_wigner(f, default_k_grid(512), SITES)
    expected = np.abs(f.window(-40, 40)) ** 2
    assert np.max(np.abs(k_marginal(g) - expected)) < 1e-10
    assert k_marginal(g).sum() == pytest.approx(1.0, abs=1e-10)


def test_k_marginal_requires_uniform_grid():
    g = discrete_wigner(LatticeField.delta(), np.linspace(-1, 1, 5))
    with pytest.raises(ValueError):
        k_marginal(g)


def test_n_marginal_is_non_negative():
    for t in (0.0, 2.0, 5.9):
        g = discrete_wigner(evolved(7, t), default_k_grid(), SITES)
        assert n_marginal(g).min() >= -1e-10


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 6.0))
def test_mass_conserved(t):
    g = discrete_wigner(evolved(3, t), default_k_grid(128), SITES)
    assert k_marginal(g).sum() == pytest.approx(1.0, abs=1e-10)


def test_negativity_grows_toward_focus():
    t = tb_focusing_time(7)
    k = default_k_grid()
    wide = positive_fraction(discrete_wigner(evolved(7, t), k, SITES))
    narrow = positive_fraction(discrete_wigner(evolved(1, t), k, SITES))
    assert 0 <= narrow < wide <= 1


def wave_grids(n_half, centre, h, lam=1.0, k=None):
    k = default_k_grid(64) if k is None else k
    times = centre + h * np.arange(-1, 2)
    return [discrete_wigner(evolved(n_half, t, lam), k, SITES) for t in times], times


def test_residual_vanishes_without_hopping():
    grids, times = wave_grids(3, 1.0, 0.1, lam=0.0)
    assert wigner_wave_residual(grids, times, 0.0) < 1e-12


def test_residual_is_second_order_in_step():
    r1 = wigner_wave_residual(*wave_grids(3, 2.0, 1e-2), 1.0)
    r2 = wigner_wave_residual(*wave_grids(3, 2.0, 5e-3), 1.0)
    assert r1 / r2 == pytest.approx(4.0, rel=0.05)


def test_residual_detects_corruption():
    grids, times = wave_grids(3, 2.0, 1e-2)
    bad = grids[1].values.copy()
    bad[40, 10] += 1e-3
    grids[1] = wigner.WignerGrid(grids[1].n, grids[1].k, bad)
    assert wigner_wave_residual(grids, times, 1.0) > 1.0


def test_residual_input_checks():
    grids, times = wave_grids(2, 1.0, 0.1)
    with pytest.raises(ValueError):
        wigner_wave_residual(grids[:2], times[:2], 1.0)
    with pytest.raises(ValueError):
        wigner_wave_residual(grids, [0.0, 0.1, 0.3], 1.0)


def initial_row(n_half, k):
    sq = LatticeField.square(n_half)
    w0 = discrete_wigner(sq, [k]).values[:, 0]
    v0 = wigner_velocity(sq, 1.0, [k]).values[:, 0]
    return sq.sites, w0, v0


def test_bessel_wave_at_time_zero():
    n, w0, v0 = initial_row(2, 0.4)
    out = bessel_wave_evolve(n, w0, v0, 1.0, 0.4, 0.0)
    assert np.array_equal(out.values[np.isin(out.n, n)], w0)
    assert not out.fallback


@pytest.mark.parametrize("k", [np.pi / 4, 0.3, -1.1])
def test_bessel_wave_matches_transform(k):
    n, w0, v0 = initial_row(3, k)
    out = bessel_wave_evolve(n, w0, v0, 1.0, k, 4.0)
    ref = discrete_wigner(evolved(3, 4.0), [k], out.n).values[:, 0]
    assert np.max(np.abs(out.values - ref)) < 1e-6


def test_bessel_wave_solves_wave_equation():
    k, h = np.pi / 2 - 0.1, 1e-3
    n, w0, v0 = initial_row(0, k)
    sites = np.arange(-30, 31)
    rows = [bessel_wave_evolve(n, w0, v0, 1.0, k, t, sites=sites).values for t in 2.0 + h * np.arange(-1, 2)]
    d2 = (rows[2] - 2 * rows[1] + rows[0]) / h**2
    lap = np.pad(rows[1], 1)[2:] + np.pad(rows[1], 1)[:-2] - 2 * rows[1]
    assert np.max(np.abs(d2 / wigner.wave_speed2(1.0, k) - lap)[1:-1]) < 1e-5


def test_bessel_wave_fallback_at_zero_speed():
    n, w0, v0 = initial_row(2, 0.0)
    out = bessel_wave_evolve(n, w0, v0, 1.0, 0.0, 1.0)
    assert out.fallback
    f = evolved(2, 1.0)
    out = bessel_wave_evolve(n, w0, v0, 1.0, 0.0, 1.0, field=f, sites=SITES)
    ref = discrete_wigner(f, [0.0], SITES).values[:, 0]
    assert out.fallback and np.max(np.abs(out.values - ref)) < 1e-14


def test_shear_limits():
    nu = np.arange(-8, 9)
    k = np.full(len(nu), 0.7)
    assert np.allclose(shear_approximation(7, nu, k, 0.0), initial_square_wigner(7, nu, 0.7))
    assert np.allclose(shear_approximation(7, nu, 0.0 * k, 3.0), initial_square_wigner(7, nu, 0.0))
    with pytest.raises(ValueError):
        shear_approximation(7, nu, k, 1.0, variant="other")


def test_shear_holds_at_small_momentum():
    t = tb_focusing_time(7)
    k = default_k_grid()
    g = discrete_wigner(evolved(7, t), k, SITES)
    d = shear_discrepancy(g, 7, t, columns=np.abs(k) <= 0.2)
    assert d.pointwise < 0.15 and d.points > 0


def test_continuous_wigner_examples():
    assert continuous_wigner_square(1.0, 0.0, 0.0) == pytest.approx(2.0)
    assert continuous_wigner_square(1.0, 0.6, 0.3) == 0
    assert continuous_wigner_square(2.0, 0.25, 1.3) == pytest.approx(np.sin(2 * 1.3 * 0.75) / 1.3)


@pytest.mark.parametrize("x,p", [(0.0, 0.0), (0.1, 3.0), (-0.3, 17.0), (0.45, 0.5)])
def test_continuous_wigner_against_quadrature(x, p):
    assert continuous_wigner_square(1.0, x, p) == pytest.approx(
        continuous_wigner_quadrature(1.0, x, p, 200_000), abs=1e-8)


def test_shear_slice_reproduces_central_intensity():
    assert continuous_shear_slice(1.0, 0.0) == pytest.approx(1.0)
    ts = np.linspace(0.002, 0.1, 50)
    assert np.max(np.abs(continuous_shear_slice(1.0, ts) - central_intensity(1.0, ts))) < 1e-6
    with pytest.raises(ValueError):
        continuous_shear_slice(1.0, -1.0)


def test_imaginary_residue_is_reported():
    # cross term of a field with a shifted copy of itself is genuinely complex
    f = LatticeField(0, np.array([1.0, 1j, 0.5]))
    g = LatticeField(1, f.amplitudes)
    cross = wigner._cross(f, g, np.array([0.3]), np.arange(0, 4))
    assert np.max(np.abs(cross.imag)) > 1e-3
    with pytest.raises(NumericalConsistencyError):
        wigner._real(cross, "probe")
    assert np.allclose(wigner._real(cross.real + 1e-14j, "probe"), cross.real)


def test_extended_precision_transform():
    f = LatticeField.square(2).scaled(np.longdouble(1))
    f = LatticeField(f.offset, f.amplitudes.astype(np.clongdouble))
    g = discrete_wigner(f, default_k_grid(16, np.longdouble))
    assert g.values.dtype == np.longdouble


def test_delta_row_at_band_edge_solves_wave_equation():
    k, t = np.pi / 2, 1.5
    n = np.array([0])
    sites = np.arange(-40, 41)

    def row(s):
        return bessel_wave_evolve(n, [1.0], [0.0], 1.0, k, s, sites=sites).values

    def second_difference(h):
        return (row(t + h) - 2 * row(t) + row(t - h)) / h**2

    # Richardson step removes the O(h^2) truncation of the plain difference
    d2 = (4 * second_difference(5e-3) - second_difference(1e-2)) / 3
    w = row(t)
    lap = np.pad(w, 1)[2:] + np.pad(w, 1)[:-2] - 2 * w
    assert np.max(np.abs(d2 / wigner.wave_speed2(1.0, k) - lap)[1:-1]) < 1e-8


def test_bessel_wave_square_at_focus():
    k = np.pi / 4
    t = tb_focusing_time(7)
    n, w0, v0 = initial_row(7, k)
    out = bessel_wave_evolve(n, w0, v0, 1.0, k, t)
    ref = discrete_wigner(evolved(7, t), [k], out.n).values[:, 0]
    assert np.max(np.abs(out.values - ref)) < 1e-6


def test_continuous_wigner_reference_point():
    assert continuous_wigner_square(1.0, 0.25, 3.0) == pytest.approx(
        continuous_wigner_quadrature(1.0, 0.25, 3.0, 100_000), abs=1e-8)
