import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from talbot_wigner._kernels import ramp_kernel
from talbot_wigner.optics import BeamSpec, GratingSpec, Grid1D
from talbot_wigner.propagation import ScenarioSpec, carpet_infinite, detector_sample
from talbot_wigner.tomography import (ReconstructionConfig, Sinogram, SinogramConfig, angle_weights,
                                      build_sinogram, cross_section, fbp_kernel, marginal_from_slice,
                                      negativity_report, reconstruct, theta_of_z, z_of_theta)
from talbot_wigner.wigner import WignerMap, gaussian_marginal, gaussian_wdf

LAM = 1e-5
ZT = 2e5
# mpmath, 30 digits
ATAN_4_OVER_PI = 0.905022576766542755640803983128
ATAN_1_OVER_PI = 0.308169071115984935786999608034
COS_THETA_4ZT = 0.617667824838856033660185741347
G_AT_PI_OVER_RC = -364.756261112415977197966067555


def test_theta_examples():
    assert theta_of_z(0.0, LAM) == 0.0
    assert theta_of_z(4 * ZT, LAM) == pytest.approx(ATAN_4_OVER_PI, rel=1e-14)
    assert theta_of_z(ZT, LAM) == pytest.approx(ATAN_1_OVER_PI, rel=1e-14)
    with pytest.raises(ValueError):
        theta_of_z(-1.0, LAM)


def test_theta_monotone_and_below_right_angle():
    z = np.concatenate([[0.0], np.logspace(-6, 6, 400) * ZT])
    th = theta_of_z(z, LAM)
    assert np.all(np.diff(th) > 0)
    assert np.all(th < np.pi / 2)


@pytest.mark.parametrize("frac", [0.1, 1.0, 10.0])
def test_z_theta_round_trip(frac):
    z = frac * ZT
    assert z_of_theta(theta_of_z(z, LAM), LAM) == pytest.approx(z, rel=1e-12)


def test_z_of_theta_examples():
    assert z_of_theta(0.0, LAM) == 0.0
    assert z_of_theta(math.atan(1 / math.pi), LAM) == pytest.approx(ZT, rel=1e-12)
    with pytest.raises(ValueError, match="infinite distance"):
        z_of_theta(np.pi / 2, LAM)


def test_marginal_identity_at_z0():
    grid = Grid1D(-3, 3, 0.1)
    row = np.exp(-grid.points**2)
    row /= row.sum() * grid.dx
    out = marginal_from_slice(row, 0.0, LAM, grid, grid)
    assert np.allclose(out, row, rtol=1e-14)


def test_marginal_rescale_factor():
    s = math.cos(theta_of_z(4 * ZT, LAM))
    assert s == pytest.approx(COS_THETA_4ZT, rel=1e-14)
    fine = Grid1D(-3, 3, 0.001)
    sig = 0.3
    row = np.exp(-fine.points**2 / (2 * sig**2))
    row /= row.sum() * fine.dx
    out_grid = Grid1D(-3, 3, 0.01)
    out = marginal_from_slice(row, 4 * ZT, LAM, fine, out_grid)
    ref = np.exp(-out_grid.points**2 / (2 * (s * sig) ** 2)) / (math.sqrt(2 * math.pi) * s * sig)
    assert np.max(np.abs(out - ref)) < 1e-4 * ref.max()


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 8.0), st.floats(0.05, 0.5))
def test_marginal_normalised(zfrac, width):
    grid = Grid1D(-2, 2, 0.01)
    row = np.exp(-grid.points**2 / (2 * width**2))
    row /= row.sum() * grid.dx
    out = marginal_from_slice(row, zfrac * ZT, LAM, grid, Grid1D(-3, 3, 0.1))
    assert abs(out.sum() * 0.1 - 1) < 1e-12


def test_marginal_rejects_information_loss():
    wide = Grid1D(-5, 5, 0.1)
    row = np.full(wide.size, 1 / (wide.size * 0.1))
    with pytest.raises(ValueError, match="widen x_m"):
        marginal_from_slice(row, 0.0, LAM, wide, Grid1D(-3, 3, 0.1))


def test_periodic_marginal_wraps():
    grid = Grid1D(-3, 3, 0.01)
    x = grid.points
    row = 1 + np.cos(2 * np.pi * x)
    row /= row.sum() * 0.01
    out = marginal_from_slice(row, 4 * ZT, LAM, grid, Grid1D(-8, 8, 0.1), period=1.0)
    s = COS_THETA_4ZT
    xo = np.linspace(-8, 8, 161)
    ref = (1 + np.cos(2 * np.pi * xo / s))
    ref /= ref.sum() * 0.1
    assert np.max(np.abs(out - ref)) < 2e-3 * ref.max()


@pytest.fixture(scope="module")
def baseline_measured():
    th = np.linspace(0, np.arctan(4 / np.pi), 100)
    c = carpet_infinite(ScenarioSpec(GratingSpec(0.3), BeamSpec(), Grid1D(-3, 3, 0.01), z_of_theta(th, LAM)))
    return detector_sample(c, 0.1)


def test_build_sinogram_rows(baseline_measured):
    s = build_sinogram(baseline_measured, SinogramConfig(8.0, 0.1))
    assert s.rows.shape == (100, 161)
    assert s.angles[0] == 0 and s.angles[-1] == pytest.approx(ATAN_4_OVER_PI)
    assert np.all(np.abs(s.rows.sum(1) * 0.1 - 1) < 1e-6)
    assert not s.symmetric_extension_used


def test_build_sinogram_twenty_rows():
    th = np.linspace(0, np.arctan(4 / np.pi), 20)
    c = carpet_infinite(ScenarioSpec(GratingSpec(0.3), BeamSpec(), Grid1D(-3, 3, 0.1), z_of_theta(th, LAM)))
    assert build_sinogram(c).rows.shape[0] == 20


def test_single_row_sinogram_is_valid():
    c = carpet_infinite(ScenarioSpec(GratingSpec(0.3), BeamSpec(), Grid1D(-3, 3, 0.1), [0.0]))
    s = build_sinogram(c)
    assert s.angles.tolist() == [0.0]
    with pytest.raises(ValueError, match="two angles"):
        reconstruct(s)
    w = reconstruct(s, ReconstructionConfig(allow_single_angle=True))
    assert np.all(np.isfinite(w.values))


def test_symmetric_extension(baseline_measured):
    s = build_sinogram(baseline_measured, SinogramConfig(8.0, 0.1, symmetric_extension=True))
    assert s.symmetric_extension_used
    assert s.angles.size == 199
    assert np.all(s.angles < np.pi)
    assert s.angles[100] == pytest.approx(np.pi - ATAN_4_OVER_PI)
    assert np.array_equal(s.rows[-1], s.rows[1])


def test_sinogram_invariants():
    g = Grid1D(-1, 1, 0.5)
    rows = np.full((2, 5), 0.4)
    with pytest.raises(ValueError):
        Sinogram(g, np.array([0.2, 0.1]), rows)
    with pytest.raises(ValueError):
        Sinogram(g, np.array([0.0, np.pi]), rows)
    with pytest.raises(ValueError):
        Sinogram(g, np.array([0.0, 0.1]), rows * 2)


def test_kernel_examples():
    assert fbp_kernel(0.0, 30) == 900
    assert fbp_kernel(math.pi / 30, 30) == pytest.approx(G_AT_PI_OVER_RC, rel=1e-12)
    x = np.linspace(-2, 2, 41)
    assert np.array_equal(fbp_kernel(x, 30), fbp_kernel(-x, 30))


def test_kernel_against_quadrature():
    rng = np.random.default_rng(7)
    xs = rng.uniform(-2, 2, 100)
    mpmath.mp.dps = 25
    for x in xs:
        ref = 2 * mpmath.quad(lambda r: r * mpmath.cos(r * x), mpmath.linspace(0, 30, 31))
        assert abs(fbp_kernel(x, 30) - float(ref)) <= 1e-8 * abs(float(ref))
        assert ramp_kernel(x, 30.0) == pytest.approx(fbp_kernel(x, 30), rel=1e-12)


def test_kernel_series_crossover():
    rc = 30.0
    tiny = 1e-4 / rc
    for x in (0.5 * tiny, tiny, 1.5 * tiny, 10 * tiny):
        ref = 2 * mpmath.quad(lambda r: r * mpmath.cos(r * x), [0, rc])
        assert abs(fbp_kernel(x, rc) - float(ref)) <= 1e-10 * float(ref)


def test_angle_weights():
    th = np.linspace(0, 0.9, 10)
    w = angle_weights(th)
    assert np.allclose(w, np.r_[0.05, [0.1] * 8, 0.05])
    full = np.arange(180) * np.pi / 180
    assert np.allclose(angle_weights(full), np.pi / 180)
    ext = np.r_[th, np.pi - th[1:][::-1]]
    we = angle_weights(ext)
    # equivalent to the arc [-0.9, 0.9] through the wrap at pi
    assert we.sum() == pytest.approx(1.8)
    assert angle_weights(np.array([0.3]), allow_single_angle=True).tolist() == [1.0]


def small_config():
    return ReconstructionConfig(30.0, Grid1D(-1, 1, 0.05), Grid1D(-1, 1, 0.05, unit="1/d"))


def test_reconstruct_linear():
    g = Grid1D(-4, 4, 0.1)
    th = np.linspace(0, 1.2, 15)
    rows1 = np.array([gaussian_marginal(g.points, t, 0.5) for t in th])
    rows2 = np.array([gaussian_marginal(g.points - 0.7, t, 0.3) for t in th])
    rows1 /= rows1.sum(1, keepdims=True) * g.dx
    rows2 /= rows2.sum(1, keepdims=True) * g.dx
    cfg = small_config()
    w1 = reconstruct(Sinogram(g, th, rows1), cfg).values
    w2 = reconstruct(Sinogram(g, th, rows2), cfg).values
    w12 = reconstruct(Sinogram(g, th, 0.3 * rows1 + 0.7 * rows2), cfg).values
    assert np.max(np.abs(w12 - (0.3 * w1 + 0.7 * w2))) < 1e-10 * np.abs(w12).max()


def test_reconstruct_shift_covariant():
    g = Grid1D(-4, 4, 0.05)
    row = np.exp(-g.points**2 / 0.18)
    shifted = np.exp(-(g.points - 0.5) ** 2 / 0.18)
    row /= row.sum() * g.dx
    shifted /= shifted.sum() * g.dx
    cfg = ReconstructionConfig(30.0, Grid1D(-2, 2, 0.05), Grid1D(-1, 1, 0.25, unit="1/d"), True)
    w0 = reconstruct(Sinogram(g, np.array([0.0]), row[None]), cfg).values
    w1 = reconstruct(Sinogram(g, np.array([0.0]), shifted[None]), cfg).values
    assert np.max(np.abs(w1[:, 10:] - w0[:, :-10])) < 1e-6 * np.abs(w0).max()


def test_reconstruct_reflection_symmetry(baseline_measured):
    s = build_sinogram(baseline_measured, SinogramConfig(8.0, 0.1, symmetric_extension=True))
    w = reconstruct(s).values
    assert np.max(np.abs(w - w[::-1, ::-1])) < 1e-6 * np.abs(w).max()


def test_reconstruct_rejects_unit_mismatch():
    g = Grid1D(-4, 4, 0.1, unit="m")
    rows = np.full((2, g.size), 1 / (g.size * 0.1))
    with pytest.raises(ValueError, match="unit"):
        reconstruct(Sinogram(g, np.array([0.0, 0.1]), rows))


def test_reconstruction_config_invariants():
    with pytest.raises(ValueError):
        ReconstructionConfig(r_c=0)
    with pytest.raises(ValueError):
        ReconstructionConfig(nu_grid=Grid1D(-0.5, 0.5, 0.1))


def test_full_angle_gaussian():
    sigma = 0.5
    g = Grid1D.symmetric(6, 0.02)
    th = np.arange(180) * np.pi / 180
    rows = np.array([gaussian_marginal(g.points, t, sigma) for t in th])
    rows /= rows.sum(1, keepdims=True) * g.dx
    w = reconstruct(Sinogram(g, th, rows))
    x, nu = np.meshgrid(w.x_grid.points, w.nu_grid.points)
    exact = gaussian_wdf(x, nu, sigma)
    assert np.max(np.abs(w.values - exact)) <= 0.05 * exact.max()
    rep = negativity_report(w)
    assert rep.negative_volume <= 1e-3
    assert rep.min_value >= -1e-8 * w.values.max()


def test_negativity_report_fields():
    g = Grid1D(-1, 1, 0.5)
    nu = Grid1D(-1, 1, 0.5, unit="1/d")
    v = np.ones((5, 5))
    v[1, 3] = v[3, 1] = -2.0
    rep = negativity_report(WignerMap(g, nu, v))
    assert rep.min_value == -2.0
    # tie: smallest x wins
    assert rep.min_location == (-0.5, 0.5)
    assert rep.peak_contrast == 2.0
    assert rep.negative_volume > 0
    pos = negativity_report(WignerMap(g, nu, np.ones((5, 5))))
    assert pos.negative_volume == 0 and pos.peak_contrast == 0
    v[0, 0] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        negativity_report(WignerMap(g, nu, v))


def test_negativity_tie_break_on_nu():
    g = Grid1D(-1, 1, 0.5)
    v = np.ones((5, 5))
    v[3, 2] = v[1, 2] = -1.0
    rep = negativity_report(WignerMap(g, g, v))
    assert rep.min_location == (0.0, -0.5)


def test_cross_section():
    g = Grid1D(-1, 1, 0.5)
    nu = Grid1D(-1, 1, 0.25)
    v = np.arange(45, dtype=float).reshape(9, 5)
    assert cross_section(WignerMap(g, nu, v), 0.5).tolist() == v[6].tolist()
