"""Grating, beam and particle-wall interaction models.

All lengths are measured in grating periods (d = 1), hbar = 1, and momenta are
reported as nu = p d / (2 pi), i.e. in units of diffraction orders.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import constants

# wall clip band, as a fraction of the slit width
WALL_CLIP = 1e-3

_AMU = constants.physical_constants["atomic mass constant"][0]
_MEV_NM3 = 1e-3 * constants.e * 1e-27


@dataclass(frozen=True)
class Grid1D:
    """Uniform sample grid ``x_j = x_min + j * dx``."""

    x_min: float
    x_max: float
    dx: float
    unit: str = "d"

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError(f"grid step must be positive, got dx={self.dx}")
        if not self.x_max > self.x_min:
            raise ValueError(f"grid needs x_max > x_min, got [{self.x_min}, {self.x_max}]")

    @classmethod
    def symmetric(cls, half_width: float, dx: float, unit: str = "d") -> "Grid1D":
        return cls(-half_width, half_width, dx, unit)

    @classmethod
    def linspace(cls, start: float, stop: float, num: int, unit: str = "d") -> "Grid1D":
        if num < 2:
            raise ValueError("linspace grid needs at least 2 points")
        return cls(start, stop, (stop - start) / (num - 1), unit)

    @property
    def size(self) -> int:
        return int(math.floor((self.x_max - self.x_min) / self.dx + 1e-9)) + 1

    @property
    def points(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.size)

    def index_of(self, x: float, tol: float = 1e-9) -> int:
        """Index of the sample at ``x``; raises if ``x`` is not on the grid."""
        j = (x - self.x_min) / self.dx
        k = int(round(j))
        if abs(j - k) > tol * max(1.0, abs(j)) or not 0 <= k < self.size:
            raise ValueError(f"{x} is not a sample of {self}")
        return k


@dataclass(frozen=True)
class VdwSpec:
    """Particle-wall van der Waals interaction, V = -C3 / r^3.

    Physical inputs are kept in laboratory units; ``strength`` converts them
    to the dimensionless phase prefactor used on the d = 1 grid.
    """

    c3_mev_nm3: float = 10.0
    mass_amu: float = 720.0
    velocity_m_s: float = 200.0
    thickness_nm: float = 500.0

    def __post_init__(self):
        if self.c3_mev_nm3 < 0:
            raise ValueError("C3 must be >= 0")
        for name in ("mass_amu", "velocity_m_s", "thickness_nm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def period_m(self, wavelength: float) -> float:
        """Grating period implied by the de Broglie wavelength lambda/d."""
        lam = constants.h / (self.mass_amu * _AMU * self.velocity_m_s)
        return lam / wavelength

    def strength(self, wavelength: float) -> float:
        """Phase prefactor kappa such that the wall phase is kappa / r^3, r in units of d."""
        d = self.period_m(wavelength)
        c3 = self.c3_mev_nm3 * _MEV_NM3
        b = self.thickness_nm * 1e-9
        return b * c3 / (constants.hbar * self.velocity_m_s) / d**3


@dataclass(frozen=True)
class GratingSpec:
    """Periodic slit grating. ``slit_count`` is None for an infinite grating,
    otherwise N_s, meaning the 2 N_s + 1 slits at x = -N_s .. N_s."""

    open_fraction: float = 0.3
    slit_count: Optional[int] = None
    vdw: Optional[VdwSpec] = None
    period: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not 0 < self.open_fraction < 1:
            raise ValueError(f"open fraction must lie in (0, 1), got {self.open_fraction}")
        if self.slit_count is not None and self.slit_count < 1:
            raise ValueError(f"finite grating needs N_s >= 1, got {self.slit_count}")

    @property
    def infinite(self) -> bool:
        return self.slit_count is None

    @property
    def clip(self) -> float:
        """Width of the dark band kept next to each wall when vdW is on."""
        return WALL_CLIP * self.open_fraction if self.vdw is not None else 0.0


@dataclass(frozen=True)
class BeamSpec:
    wavelength: float = 1e-5
    alpha_max: float = 0.0
    visibility: float = 1.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be > 0")
        if self.alpha_max < 0:
            raise ValueError("alpha_max must be >= 0")
        if not 0 <= self.visibility <= 1:
            raise ValueError("visibility must lie in [0, 1]")


def fourier_coefficient(n: Union[int, np.ndarray], f0: float):
    """Amplitude of diffraction order n for a top-hat slit of open fraction f0.

    Symmetric in n; the n = 0 limit equals f0.
    """
    if not 0 < f0 < 1:
        raise ValueError(f"open fraction must lie in (0, 1), got {f0}")
    # np.sinc(x) = sin(pi x) / (pi x)
    return f0 * np.sinc(np.asarray(n, dtype=float) * f0)


def talbot_distance(beam: BeamSpec) -> float:
    return 2.0 / beam.wavelength


def vdw_phase(r_left, r_right, spec: VdwSpec, wavelength: float = 1e-5):
    """Unit-modulus phase factor of a point at distances r_left, r_right from the two walls."""
    r1 = np.asarray(r_left, dtype=float)
    r2 = np.asarray(r_right, dtype=float)
    if np.any(r1 <= 0) or np.any(r2 <= 0):
        raise ValueError("vdW phase requested at or beyond a slit wall; clip the slit interior")
    kappa = spec.strength(wavelength)
    return np.exp(1j * kappa * (r1**-3 + r2**-3))


def _open_interval(grating: GratingSpec) -> tuple[float, float]:
    half = 0.5 * grating.open_fraction
    return -half + grating.clip, half - grating.clip


def transmission_profile(grating: GratingSpec, grid: Grid1D, wavelength: float = 1e-5) -> np.ndarray:
    """Single-slit transmission t'(x) (slit centred on x = 0) sampled on ``grid``."""
    x = grid.points
    lo, hi = _open_interval(grating)
    # edge samples count as open regardless of rounding in the grid points
    inside = (x >= lo - 1e-12) & (x <= hi + 1e-12)
    t = inside.astype(complex)
    if grating.vdw is not None:
        half = 0.5 * grating.open_fraction
        xi = x[inside]
        t[inside] = vdw_phase(xi + half, half - xi, grating.vdw, wavelength)
    return t


def _slit_nodes(grating: GratingSpec, kappa: float, h_max: float, curvature: float) -> np.ndarray:
    # Nodes from the wall clip edge to the slit centre. Near the wall the
    # panel size follows h = sqrt(curvature / phi''), phi'' ~ 24 kappa / r^5,
    # for which r^(-3/2) falls linearly with the node index.
    half = 0.5 * grating.open_fraction
    r0 = grating.clip
    nodes = []
    if kappa > 0:
        c = math.sqrt(curvature / (24.0 * kappa))
        # r where the graded step reaches h_max
        r_switch = (h_max / c) ** 0.4
        if r_switch > r0:
            stop = min(r_switch, half)
            a0, a1 = r0**-1.5, stop**-1.5
            steps = int(math.ceil((a0 - a1) / (1.5 * c)))
            nodes.append(np.linspace(a0, a1, steps + 1) ** (-2.0 / 3.0))
            r0 = stop
    if r0 < half:
        steps = max(1, int(math.ceil((half - r0) / h_max)))
        nodes.append(np.linspace(r0, half, steps + 1))
    r = np.unique(np.concatenate(nodes))
    left = -half + r
    right = (half - r)[::-1]
    return np.unique(np.concatenate([left, right]))


def grating_coefficients(grating: GratingSpec, n_max: int, wavelength: float = 1e-5,
                         h_max: Optional[float] = None, curvature: float = 1e-2) -> np.ndarray:
    """Fourier amplitudes A_n, n = -n_max..n_max, of the single-slit transmission.

    Without vdW these are the closed-form sinc amplitudes. With vdW the wall
    phase diverges, so the integral is done by a Filon-type rule: the phase is
    taken linear on each panel of a mesh graded towards the walls, and
    integrated exactly there.
    """
    n = np.arange(-n_max, n_max + 1)
    if grating.vdw is None:
        return fourier_coefficient(n, grating.open_fraction).astype(complex)
    kappa = grating.vdw.strength(wavelength)
    half = 0.5 * grating.open_fraction
    if h_max is None:
        h_max = min(grating.open_fraction / 4000.0, 0.05 / max(n_max, 1))
    x = _slit_nodes(grating, kappa, h_max, curvature)
    phi = kappa * ((x + half) ** -3 + (half - x) ** -3)
    h = np.diff(x)
    dphi = np.diff(phi)
    # node values exp(i (phi - 2 pi n x)) advanced in n by one complex product
    node = np.exp(1j * (phi + 2 * np.pi * n_max * x))
    step = np.exp(-2j * np.pi * x)
    out = np.empty(n.size, dtype=complex)
    for k, order in enumerate(n):
        delta = dphi - 2 * np.pi * order * h
        small = np.abs(delta) < 1e-4
        panel = np.where(small, 0.5 * (node[1:] + node[:-1]) * h,
                         np.diff(node) * h / (1j * np.where(small, 1.0, delta)))
        out[k] = panel.sum()
        node *= step
    return out
