"""Near-field intensity patterns ("quantum carpets") behind a grating."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import fresnel

from .optics import (BeamSpec, GratingSpec, Grid1D, fourier_coefficient,
                     grating_coefficients, transmission_profile,
                     vdw_phase)

NORM_TOL = 1e-6


@dataclass(frozen=True)
class Carpet:
    """Probability density P[z, x], each z-slice normalised to sum(P) dx = 1.

    ``period`` is set when every slice is periodic in x with that period
    (infinite gratings); slices may then be evaluated outside the grid.
    """

    x_grid: Grid1D
    z_values: np.ndarray
    density: np.ndarray
    wavelength: float
    period: Optional[float] = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        z = np.asarray(self.z_values, dtype=float)
        if z.ndim != 1 or z.size == 0:
            raise ValueError("carpet needs at least one z value")
        if np.any(z < 0) or np.any(np.diff(z) <= 0):
            raise ValueError("z values must be non-negative and strictly increasing")
        if self.density.shape != (z.size, self.x_grid.size):
            raise ValueError(f"density shape {self.density.shape} does not match grids "
                             f"({z.size}, {self.x_grid.size})")
        if np.any(self.density < 0):
            raise ValueError("carpet density must be non-negative")
        norms = self.density.sum(axis=1) * self.x_grid.dx
        if np.any(np.abs(norms - 1) > NORM_TOL):
            raise ValueError("every carpet slice must be normalised to unit integral")
        object.__setattr__(self, "z_values", z)

    def slice_at(self, z: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.z_values - z)))
        if not math.isclose(self.z_values[k], z, rel_tol=1e-9, abs_tol=1e-9):
            raise KeyError(f"no slice at z={z}")
        return self.density[k]


@dataclass(frozen=True)
class ScenarioSpec:
    grating: GratingSpec
    beam: BeamSpec
    x_grid: Grid1D
    z_values: Sequence[float]
    n_max: int = 256
    quad_panels: int = 64
    n_alpha: int = 41

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.n_alpha < 1:
            raise ValueError("n_alpha must be >= 1")


def normalize_rows(p: np.ndarray, dx: float) -> np.ndarray:
    norms = p.sum(axis=1, keepdims=True) * dx
    if np.any(norms <= 0):
        raise ValueError("cannot normalise an all-zero slice")
    return p / norms


def _check_truncation(grating: GratingSpec, n_max: int) -> None:
    # Parseval on the bare slit aperture; power the vdW phase pushes beyond
    # n_max is deflected out of the retained orders and counts as lost.
    n = np.arange(-n_max, n_max + 1)
    power = float(np.sum(fourier_coefficient(n, grating.open_fraction) ** 2))
    if power < 0.99 * grating.open_fraction:
        raise ValueError(f"n_max={n_max} under-resolves the slit: sum |A_n|^2 = {power:.4f} "
                         f"< 0.99 f0 = {0.99 * grating.open_fraction:.4f}")


def _spectral_intensity(x: np.ndarray, orders: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """|sum_n c[n, col] exp(2 pi i n x)|^2 for each column of ``coeffs``; shape (cols, x)."""
    out = np.empty((coeffs.shape[1], x.size))
    for lo in range(0, x.size, 2048):
        basis = np.exp(2j * np.pi * np.outer(x[lo:lo + 2048], orders))
        out[:, lo:lo + 2048] = (np.abs(basis @ coeffs) ** 2).T
    return out


def carpet_infinite(spec: ScenarioSpec) -> Carpet:
    """Coherent carpet of an infinite grating by the truncated spectral sum."""
    g, beam = spec.grating, spec.beam
    if not g.infinite:
        raise ValueError("carpet_infinite needs an infinite grating")
    if beam.alpha_max != 0:
        raise ValueError("alpha_max > 0: use incoherent_average")
    _check_truncation(g, spec.n_max)
    n = np.arange(-spec.n_max, spec.n_max + 1)
    amps = grating_coefficients(g, spec.n_max, beam.wavelength)
    z = np.asarray(spec.z_values, dtype=float)
    coeffs = amps[:, None] * np.exp(-1j * np.pi * np.outer(n**2, z) * beam.wavelength)
    dens = normalize_rows(_spectral_intensity(spec.x_grid.points, n, coeffs), spec.x_grid.dx)
    return Carpet(spec.x_grid, z, dens, beam.wavelength, period=g.period,
                  provenance={"method": "spectral", "n_max": spec.n_max,
                              "open_fraction": g.open_fraction, "vdw": g.vdw is not None})


def alpha_samples(alpha_max: float, n_alpha: int) -> tuple[np.ndarray, np.ndarray]:
    """Incident angles on [-alpha_max/2, alpha_max/2] and their Gaussian weights."""
    if n_alpha % 2 == 0:
        raise ValueError(f"n_alpha must be odd so that alpha = 0 is sampled, got {n_alpha}")
    if n_alpha == 1 or alpha_max == 0:
        return np.zeros(1), np.ones(1)
    alpha = np.linspace(-alpha_max / 2, alpha_max / 2, n_alpha)
    sigma = 0.1 * alpha_max
    w = np.exp(-alpha**2 / (2 * sigma**2))
    return alpha, w / w.sum()


def incoherent_average(spec: ScenarioSpec) -> Carpet:
    """Intensity average over tilted plane-wave illuminations.

    Each tilt alpha adds the transverse wavenumber k sin(alpha) to every order
    and uses the paraxial longitudinal phase (k_a + 2 pi n)^2 z / (2k).
    """
    g, beam = spec.grating, spec.beam
    if not g.infinite:
        raise ValueError("incoherent_average needs an infinite grating")
    if spec.n_alpha % 2 == 0:
        raise ValueError(f"n_alpha must be odd so that alpha = 0 is sampled, got {spec.n_alpha}")
    if beam.alpha_max > 0 and spec.n_alpha < 3:
        raise ValueError("alpha_max > 0 needs n_alpha >= 3")
    _check_truncation(g, spec.n_max)
    alpha, weight = alpha_samples(beam.alpha_max, spec.n_alpha)
    k = 2 * np.pi / beam.wavelength
    n = np.arange(-spec.n_max, spec.n_max + 1)
    amps = grating_coefficients(g, spec.n_max, beam.wavelength)
    z = np.asarray(spec.z_values, dtype=float)
    x = spec.x_grid.points
    total = np.zeros((z.size, x.size))
    for a, w in zip(alpha, weight):
        ka = k * math.sin(a)
        # exp(i ka x) exp(-i ka^2 z / 2k) is a common unit-modulus factor, so
        # the per-order phases below carry all of the intensity dependence.
        phase = 2 * np.pi * np.outer(n, ka * z / k) + np.outer((2 * np.pi * n) ** 2, z) / (2 * k)
        total += w * _spectral_intensity(x, n, amps[:, None] * np.exp(-1j * phase))
    dens = normalize_rows(total, spec.x_grid.dx)
    return Carpet(spec.x_grid, z, dens, beam.wavelength, period=g.period,
                  provenance={"method": "incoherent", "n_max": spec.n_max, "n_alpha": int(alpha.size),
                              "alpha_max": beam.alpha_max, "open_fraction": g.open_fraction,
                              "vdw": g.vdw is not None})


def _slit_panels(grating: GratingSpec, panels: int, wavelength: float) -> tuple[np.ndarray, np.ndarray]:
    half = 0.5 * grating.open_fraction
    lo, hi = -half + grating.clip, half - grating.clip
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    if grating.vdw is None:
        return edges, np.ones(panels, dtype=complex)
    return edges, vdw_phase(mid + half, half - mid, grating.vdw, wavelength)


def _slit_field(x: np.ndarray, z: float, wavelength: float, edges: np.ndarray, amp: np.ndarray) -> np.ndarray:
    # Fresnel integral of a piecewise-constant aperture, exact on each panel:
    # int exp(i pi (x - x')^2 / (lambda z)) dx' = sqrt(lambda z / 2) [F(w)]
    scale = math.sqrt(2.0 / (wavelength * z))
    out = np.zeros(x.size, dtype=complex)
    for lo in range(0, x.size, 4096):
        w = scale * (edges[None, :] - x[lo:lo + 4096, None])
        s, c = fresnel(w)
        f = c + 1j * s
        out[lo:lo + 4096] = np.diff(f, axis=1) @ amp
    return out / np.sqrt(2j)


def carpet_finite(spec: ScenarioSpec) -> Carpet:
    """Carpet of a grating with 2 N_s + 1 slits by per-slit Fresnel quadrature.

    The slit is split into ``quad_panels`` panels with the transmission held
    at its midpoint value; the Fresnel kernel is integrated exactly on each.
    """
    g, beam = spec.grating, spec.beam
    if g.infinite:
        raise ValueError("carpet_finite needs a finite grating")
    if spec.quad_panels < 8:
        raise ValueError(f"quad_panels={spec.quad_panels} is below 8 samples per slit opening")
    ns = g.slit_count
    grid = spec.x_grid
    x = grid.points
    z = np.asarray(spec.z_values, dtype=float)
    edges, amp = _slit_panels(g, spec.quad_panels, beam.wavelength)
    per_period = 1.0 / grid.dx
    aligned = abs(per_period - round(per_period)) < 1e-9
    if aligned:
        shift = int(round(per_period))
        x_ext = grid.x_min - ns + grid.dx * np.arange(grid.size + 2 * ns * shift)
    dens = np.empty((z.size, x.size))
    for k, zk in enumerate(z):
        if zk == 0:
            t = np.zeros(x.size, dtype=complex)
            for m in range(-ns, ns + 1):
                t += transmission_profile(g, Grid1D(grid.x_min - m, grid.x_max - m, grid.dx), beam.wavelength)
            dens[k] = np.abs(t) ** 2
            continue
        if aligned:
            u = _slit_field(x_ext, zk, beam.wavelength, edges, amp)
            # psi(x) = sum_m u(x - m); x - m sits at index j + (ns - m) * shift
            psi = np.zeros(x.size, dtype=complex)
            for m in range(-ns, ns + 1):
                off = (ns - m) * shift
                psi += u[off:off + x.size]
        else:
            psi = sum(_slit_field(x - m, zk, beam.wavelength, edges, amp) for m in range(-ns, ns + 1))
        dens[k] = np.abs(psi) ** 2
    dens = normalize_rows(dens, grid.dx)
    return Carpet(grid, z, dens, beam.wavelength, period=None,
                  provenance={"method": "fresnel", "slit_count": ns, "quad_panels": spec.quad_panels,
                              "open_fraction": g.open_fraction, "vdw": g.vdw is not None})


def simulate(spec: ScenarioSpec) -> Carpet:
    """Dispatch to the carpet model matching the grating and beam."""
    if not spec.grating.infinite:
        if spec.beam.alpha_max > 0:
            raise ValueError("collimation averaging is only modelled for infinite gratings")
        return carpet_finite(spec)
    if spec.beam.alpha_max > 0:
        return incoherent_average(spec)
    return carpet_infinite(spec)


def apply_visibility(carpet: Carpet, visibility: float) -> Carpet:
    """Blend each slice with a flat floor I_min = (1 - V) / (1 + V).

    Intensities are first scaled by the carpet-wide maximum so that a
    fringe running down to zero ends with visibility V; slices are then
    renormalised.
    """
    if not 0 <= visibility <= 1:
        raise ValueError("visibility must lie in [0, 1]")
    if visibility == 1:
        return carpet
    i_min = (1 - visibility) / (1 + visibility)
    scaled = carpet.density / carpet.density.max()
    dens = normalize_rows(i_min + (1 - i_min) * scaled, carpet.x_grid.dx)
    prov = dict(carpet.provenance, visibility=visibility)
    return Carpet(carpet.x_grid, carpet.z_values, dens, carpet.wavelength, carpet.period, prov)


def fringe_visibility(row: np.ndarray, x_grid: Grid1D) -> float:
    """(I_max - I_min) / (I_max + I_min) over the central period [-1/2, 1/2]."""
    row = np.asarray(row, dtype=float)
    if np.any(row < 0):
        raise ValueError("slice must be non-negative")
    x = x_grid.points
    window = row[(x >= -0.5 - 1e-12) & (x <= 0.5 + 1e-12)]
    if window.size == 0:
        raise ValueError("grid does not cover the central period")
    hi, lo = window.max(), window.min()
    if hi <= 0:
        raise ValueError("visibility of an all-zero slice is undefined")
    return float((hi - lo) / (hi + lo))


def detector_sample(carpet: Carpet, dx: float) -> Carpet:
    """Average the carpet over detector pixels of width ``dx``.

    Pixel centres sit on the carpet grid every dx; the pixel integral is the
    trapezoid rule over the fine samples it spans. Periodic carpets wrap.
    """
    grid = carpet.x_grid
    ratio = dx / grid.dx
    r = int(round(ratio))
    if r < 1 or abs(ratio - r) > 1e-6:
        raise ValueError(f"detector step {dx} must be an integer multiple of the carpet step {grid.dx}")
    if r == 1:
        return carpet
    if r % 2 == 0:
        offsets = np.arange(-r // 2, r // 2 + 1)
        weights = np.ones(offsets.size)
        weights[[0, -1]] = 0.5
    else:
        offsets = np.arange(-(r // 2), r // 2 + 1)
        weights = np.ones(offsets.size)
    n_det = (grid.size - 1) // r + 1
    centres = r * np.arange(n_det)
    new_grid = Grid1D(grid.x_min, grid.x_min + (n_det - 1) * dx, dx, grid.unit)
    idx = centres[:, None] + offsets[None, :]
    if carpet.period is not None:
        per = carpet.period / grid.dx
        p = int(round(per))
        if abs(per - p) > 1e-6 or grid.size < p:
            raise ValueError("periodic carpet grid must hold a whole period on its step")
        idx = idx % p
        w = np.broadcast_to(weights, idx.shape)
    else:
        valid = (idx >= 0) & (idx < grid.size)
        w = np.where(valid, weights[None, :], 0.0)
        idx = np.clip(idx, 0, grid.size - 1)
    dens = (carpet.density[:, idx] * w).sum(axis=2) / w.sum(axis=1)
    dens = normalize_rows(dens, dx)
    prov = dict(carpet.provenance, detector_dx=dx)
    return Carpet(new_grid, carpet.z_values, dens, carpet.wavelength, carpet.period, prov)
