import numpy as np
import pytest

from talbot_wigner.optics import Grid1D, fourier_coefficient
from talbot_wigner.wigner import (DeltaPeak, DeltaPeakSet, WignerMap, gaussian_state, gaussian_wdf,
                                  wdf_delta_comb, wdf_infinite_exact, wdf_numerical)


def test_gaussian_matches_closed_form():
    grid = Grid1D(-6, 6, 1 / 32)
    w = wdf_numerical(gaussian_state(grid, 0.7), grid)
    x, nu = np.meshgrid(w.x_grid.points, w.nu_grid.points)
    exact = gaussian_wdf(x, nu, 0.7)
    assert np.max(np.abs(w.values - exact)) < 1e-8 * exact.max()
    assert w.values.min() > -1e-8
    assert w.metadata["imag_residue"] < 1e-10 * exact.max()
    assert w.total() == pytest.approx(1, abs=1e-3)


def test_marginal_identity():
    grid = Grid1D(-8, 8, 1 / 16)
    x = grid.points
    psi = np.exp(-(x - 1) ** 2 / 2 + 1.3j * x) + 0.5 * np.exp(-(x + 2) ** 2)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    w = wdf_numerical(psi, grid)
    marg = w.values.sum(axis=0) * w.nu_grid.dx
    assert np.max(np.abs(marg - np.abs(psi) ** 2)) <= 1e-6 * np.max(np.abs(psi) ** 2)


def test_two_slit_cat_has_oscillating_midpoint_ridge():
    grid = Grid1D(-6, 6, 1 / 64)
    x = grid.points
    # two smooth top-hats centred at -2 and +2
    slit = lambda c: 0.5 * (np.tanh((x - c + 0.5) / 0.05) - np.tanh((x - c - 0.5) / 0.05))
    psi = slit(-2) + slit(2)
    psi = psi / np.sqrt(np.sum(psi**2) * grid.dx)
    psi[np.abs(psi) < 1e-12] = 0
    w = wdf_numerical(psi, grid, nu_max=2.0)
    mid = w.values[:, grid.index_of(0.0)]
    nu = w.nu_grid.points
    # interference term at x = 0 oscillates as cos(2 pi nu * 4): sign flips every 1/8 in nu
    assert mid[np.argmin(np.abs(nu))] > 0
    assert mid[np.argmin(np.abs(nu - 0.125))] < 0
    flips = np.count_nonzero(np.diff(np.sign(mid[np.abs(nu) < 0.6])) != 0)
    assert flips >= 8


def test_real_symmetric_state_parity():
    grid = Grid1D(-6, 6, 1 / 32)
    x = grid.points
    psi = np.exp(-x**2 / 2) * (1 + 0.8 * np.cos(3 * x))
    psi /= np.sqrt(np.sum(psi**2) * grid.dx)
    w = wdf_numerical(psi, grid, nu_max=4.0)
    v = w.values
    assert w.nu_grid.points[0] == pytest.approx(-w.nu_grid.points[-1])
    assert np.max(np.abs(v - v[::-1, ::-1])) < 1e-12 * np.abs(v).max()
    assert np.max(np.abs(v - v[::-1, :])) < 1e-12 * np.abs(v).max()


def test_numerical_rejects_bad_input():
    grid = Grid1D(-6, 6, 1 / 16)
    psi = gaussian_state(grid, 0.5)
    with pytest.raises(ValueError, match="normalised"):
        wdf_numerical(2 * psi, grid)
    wide = gaussian_state(grid, 3.0)
    with pytest.raises(ValueError, match="boundary"):
        wdf_numerical(wide, grid)
    with pytest.raises(ValueError):
        wdf_numerical(psi[:-1], grid)


def test_zero_padding_resolves_half_integer_rows():
    grid = Grid1D(-6, 6, 1 / 16)
    w = wdf_numerical(gaussian_state(grid, 0.6), grid)
    assert w.metadata["fft_length"] >= 4 * grid.size
    assert w.nu_grid.dx < 0.5 / 4


def test_exact_rows_layout():
    w = wdf_infinite_exact(0.3, 16, Grid1D(-1, 1, 0.01))
    assert w.nu_grid.size == 4 * 16 + 1
    assert w.nu_grid.points[0] == -16 and w.nu_grid.points[-1] == 16
    assert "line density" in w.metadata["convention"]
    # unit weight per period, summed over all lines
    one_period = w.values[:, :100].sum() * 0.01
    assert one_period == pytest.approx(1, abs=1e-9)


def test_exact_zero_row_periodic_and_negative_half_rows():
    grid = Grid1D(-2, 2, 0.01)
    w = wdf_infinite_exact(0.3, 64, grid)
    r0 = w.row(0.0)
    assert np.max(np.abs(r0[:300] - r0[100:400])) < 1e-12
    half = w.row(0.5)
    assert half.min() < 0
    x = grid.points
    # the most negative parts sit between the slits, at half-integer x
    assert np.abs(x[np.argmin(half)] % 1 - 0.5) < 0.1


def test_exact_zero_row_closed_form():
    # nu = 0 line: sum_n A_n A_-n exp(4 pi i n x) = sum_n A_n^2 cos(4 pi n x)
    n_max = 12
    grid = Grid1D(0, 1, 0.05)
    w = wdf_infinite_exact(0.3, n_max, grid)
    n = np.arange(-n_max, n_max + 1)
    a = fourier_coefficient(n, 0.3)
    ref = (a**2) @ np.cos(4 * np.pi * np.outer(n, grid.points)) / np.sum(a**2)
    assert np.max(np.abs(w.row(0.0) - ref)) < 1e-12


def test_cross_oracle_numerical_vs_exact():
    n_max, sigma = 8, 2.0
    grid = Grid1D(-16, 16, 1 / 64)
    x = grid.points
    n = np.arange(-n_max, n_max + 1)
    a = fourier_coefficient(n, 0.3)
    envelope = np.exp(-x**2 / (4 * sigma**2))
    psi = envelope * (np.exp(2j * np.pi * np.outer(x, n)) @ a)
    c2 = 1 / (np.sum(np.abs(psi) ** 2) * grid.dx)
    psi *= np.sqrt(c2)
    w = wdf_numerical(psi, grid, nu_max=8.6)
    window = np.abs(x) <= 3
    exact = wdf_infinite_exact(0.3, n_max, Grid1D(-3, 3, 1 / 64))
    scale = np.sum(a**2)
    nu = w.nu_grid.points
    worst = 0.0
    for k in range(-2 * n_max, 2 * n_max + 1):
        band = np.abs(nu - k / 2) < 0.25
        line = w.values[band][:, window].sum(axis=0) * w.nu_grid.dx
        # the envelope contributes a narrow Gaussian in nu of total weight |E(x)|^2
        got = line / (c2 * envelope[window] ** 2)
        want = exact.row(k / 2) * scale
        worst = max(worst, float(np.max(np.abs(got - want))))
    assert worst <= 1e-3


def test_delta_comb_examples():
    s = wdf_delta_comb(range(-2, 3), range(-2, 3))
    assert s.sign_at(0, 0) == 1
    assert s.sign_at(1, 1) == -1
    assert s.sign_at(2, 1) == 1
    p = [q for q in s.peaks if q.x == 0.5 and q.nu == 0.5][0]
    assert p.weight == 0.5


def test_delta_comb_checkerboard_exhaustive():
    s = wdf_delta_comb(range(-8, 9), range(-8, 9))
    assert len(s) == 17 * 17
    for n in range(-8, 9):
        for m in range(-8, 9):
            assert s.sign_at(n, m) == (-1 if (n * m) % 2 else 1)


def test_delta_peak_set_validates_sign():
    with pytest.raises(ValueError):
        DeltaPeakSet((DeltaPeak(0.5, 0.5, 1, 0.5),))


def test_wigner_map_invariants():
    g = Grid1D(-1, 1, 0.5)
    with pytest.raises(TypeError):
        WignerMap(g, g, np.zeros((5, 5), dtype=complex))
    with pytest.raises(ValueError):
        WignerMap(g, g, np.zeros((4, 5)))
