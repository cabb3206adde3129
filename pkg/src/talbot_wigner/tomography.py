"""Phase-space rotation angles, sinograms, and filtered back-projection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._kernels import back_project
from .optics import Grid1D
from .propagation import Carpet
from .wigner import WignerMap

ROW_NORM_TOL = 1e-6


def theta_of_z(z, wavelength: float):
    """Rotation angle reached after free flight z: tan(theta) = z lambda / (2 pi)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be >= 0")
    out = np.arctan(z * wavelength / (2 * np.pi))
    return float(out) if out.ndim == 0 else out


def z_of_theta(theta, wavelength: float):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta >= np.pi / 2):
        raise ValueError("theta must lie in [0, pi/2); pi/2 corresponds to infinite distance")
    out = 2 * np.pi * np.tan(theta) / wavelength
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Sinogram:
    """Marginals P_theta(x) on a common x grid, one row per angle."""

    x_grid: Grid1D
    angles: np.ndarray
    rows: np.ndarray
    symmetric_extension_used: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        th = np.asarray(self.angles, dtype=float)
        if th.ndim != 1 or th.size == 0:
            raise ValueError("sinogram needs at least one angle")
        if np.any(th < 0) or np.any(th >= np.pi) or np.any(np.diff(th) <= 0):
            raise ValueError("angles must be strictly increasing within [0, pi)")
        if self.rows.shape != (th.size, self.x_grid.size):
            raise ValueError(f"rows shape {self.rows.shape} does not match ({th.size}, {self.x_grid.size})")
        norms = self.rows.sum(axis=1) * self.x_grid.dx
        if np.any(np.abs(norms - 1) > ROW_NORM_TOL):
            raise ValueError("every sinogram row must integrate to 1")
        object.__setattr__(self, "angles", th)


@dataclass(frozen=True)
class SinogramConfig:
    x_m: float = 8.0
    dx: float = 0.1
    symmetric_extension: bool = False

    def __post_init__(self):
        if not self.x_m > 0 or not self.dx > 0:
            raise ValueError("sinogram half-width and step must be > 0")

    @property
    def x_grid(self) -> Grid1D:
        return Grid1D.symmetric(self.x_m, self.dx)


@dataclass(frozen=True)
class ReconstructionConfig:
    r_c: float = 30.0
    x_grid: Grid1D = Grid1D(-3.0, 3.0, 0.05)
    nu_grid: Grid1D = Grid1D(-1.0, 1.0, 0.025, unit="1/d")
    allow_single_angle: bool = False

    def __post_init__(self):
        if not self.r_c > 0:
            raise ValueError("r_c must be > 0")
        g = self.nu_grid
        if g.x_min > -1 + 1e-9 or g.x_min + (g.size - 1) * g.dx < 1 - 1e-9:
            raise ValueError("output nu range must cover at least [-1, 1]")


@dataclass(frozen=True)
class NegativityReport:
    min_value: float
    min_location: tuple
    negative_volume: float
    peak_contrast: float

    def as_dict(self) -> dict:
        return {"min_value": self.min_value, "min_location": list(self.min_location),
                "negative_volume": self.negative_volume, "peak_contrast": self.peak_contrast}


def marginal_from_slice(slice_: np.ndarray, z: float, wavelength: float, slice_grid: Grid1D,
                        out_grid: Grid1D, period: Optional[float] = None) -> np.ndarray:
    """Rescale a carpet slice at distance z into the marginal P_theta(x) = P(x / s) / s, s = cos theta.

    Periodic slices are evaluated by wrapping into one period; otherwise the
    rescaled slice must lie inside ``out_grid`` and is zero outside its support.
    """
    slice_ = np.asarray(slice_, dtype=float)
    s = math.cos(theta_of_z(z, wavelength))
    xq = out_grid.points / s
    xs = slice_grid.points
    if period is not None:
        per = period / slice_grid.dx
        p = int(round(per))
        if abs(per - p) > 1e-6 or slice_grid.size < p:
            raise ValueError("periodic slice must hold a whole period on its grid")
        base = np.append(slice_[:p], slice_[0])
        pos = xs[0] + slice_grid.dx * np.arange(p + 1)
        vals = np.interp(np.mod(xq - xs[0], period) + xs[0], pos, base)
    else:
        lo, hi = s * xs[0], s * xs[-1]
        top = out_grid.x_min + (out_grid.size - 1) * out_grid.dx
        if lo < out_grid.x_min - 1e-9 or hi > top + 1e-9:
            raise ValueError(f"rescaled slice spans [{lo:.4g}, {hi:.4g}], beyond the sinogram grid; "
                             "widen x_m")
        vals = np.interp(xq, xs, slice_, left=0.0, right=0.0)
    vals = vals / s
    norm = vals.sum() * out_grid.dx
    if norm <= 0:
        raise ValueError("rescaled slice has no weight on the sinogram grid")
    return vals / norm


def build_sinogram(carpet: Carpet, config: SinogramConfig = SinogramConfig()) -> Sinogram:
    """One marginal per carpet slice, at theta = theta_of_z(z)."""
    grid = config.x_grid
    angles = theta_of_z(np.asarray(carpet.z_values), carpet.wavelength)
    angles = np.atleast_1d(angles)
    if np.any(angles >= np.pi / 2):
        raise AssertionError("finite z mapped onto theta = pi/2")
    rows = np.array([marginal_from_slice(p, z, carpet.wavelength, carpet.x_grid, grid, carpet.period)
                     for p, z in zip(carpet.density, carpet.z_values)])
    if config.symmetric_extension:
        # mirror-symmetric state: the marginal at pi - theta equals P_theta reflected
        # twice (theta -> -theta flips p, theta + pi flips x), i.e. the same row
        extra = angles > 0
        angles = np.concatenate([angles, np.pi - angles[extra][::-1]])
        rows = np.concatenate([rows, rows[extra][::-1]])
    return Sinogram(grid, angles, rows, config.symmetric_extension,
                    {"z_values": [float(z) for z in carpet.z_values]})


def fbp_kernel(x, r_c: float):
    """Closed-form band-limited ramp kernel g(x) = int_{-r_c}^{r_c} |r| exp(i r x) dr."""
    if not r_c > 0:
        raise ValueError("r_c must be > 0")
    x = np.asarray(x, dtype=float)
    tiny = 1e-4 / r_c
    small = np.abs(x) <= tiny
    xs = np.where(small, 1.0, x)
    sh = np.sin(0.5 * r_c * xs)
    big = 2.0 * (r_c * np.sin(r_c * xs) / xs - 2.0 * sh**2 / xs**2)
    out = np.where(small, r_c**2 - r_c**4 * x**2 / 4.0, big)
    return float(out) if out.ndim == 0 else out


def angle_weights(angles: np.ndarray, allow_single_angle: bool = False) -> np.ndarray:
    """Quadrature weights for angles on the half circle [0, pi).

    Each angle gets half of each neighbouring gap. The angles are treated as
    points on a circle of circumference pi: a gap larger than three times the
    median spacing is an uncovered hole and contributes nothing, and the
    wrap-around gap counts only if it is no wider than 1.5 median spacings.
    Partial-range scans therefore reduce to the trapezoid rule.
    """
    th = np.asarray(angles, dtype=float)
    if th.size == 1:
        if not allow_single_angle:
            raise ValueError("reconstruction needs at least two angles")
        return np.ones(1)
    gaps = np.diff(th)
    med = float(np.median(gaps))
    covered = np.where(gaps <= 3 * med, gaps, 0.0)
    wrap = np.pi - (th[-1] - th[0])
    wrap = wrap if wrap <= 1.5 * med else 0.0
    w = np.zeros_like(th)
    w[:-1] += covered / 2
    w[1:] += covered / 2
    w[0] += wrap / 2
    w[-1] += wrap / 2
    return w


def _trapezoid(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    if n > 1:
        w[[0, -1]] = h / 2
    return w


def reconstruct(sinogram: Sinogram, config: ReconstructionConfig = ReconstructionConfig()) -> WignerMap:
    """Filtered back-projection

        W(x, nu) = (1/2pi) int dtheta int dx' P_theta(x') g(x' - x cos(theta) - 2 pi nu sin(theta))

    with trapezoid weights in x' and ``angle_weights`` in theta. The 1/2pi
    collects the Radon inversion factor 1/(4 pi^2) and the Jacobian dp = 2 pi dnu.
    """
    grid = sinogram.x_grid
    if grid.unit != config.x_grid.unit:
        raise ValueError(f"sinogram x unit {grid.unit!r} differs from output unit {config.x_grid.unit!r}")
    th = sinogram.angles
    w_th = angle_weights(th, config.allow_single_angle)
    rows = np.ascontiguousarray(sinogram.rows, dtype=float)
    values = back_project(rows, w_th, np.cos(th), np.sin(th), float(grid.x_min), float(grid.dx),
                          _trapezoid(grid.size, grid.dx), config.x_grid.points,
                          2 * np.pi * config.nu_grid.points, float(config.r_c))
    meta = {"source": "reconstructed", "r_c": config.r_c, "n_angles": int(th.size),
            "theta_range": [float(th[0]), float(th[-1])],
            "symmetric_extension_used": sinogram.symmetric_extension_used}
    return WignerMap(config.x_grid, config.nu_grid, values, meta)


def negativity_report(w: WignerMap) -> NegativityReport:
    v = w.values
    if not np.all(np.isfinite(v)):
        raise ValueError("Wigner map contains non-finite values")
    vmin = float(v.min())
    # smallest x first, then smallest nu
    ia, ib = np.nonzero(v == vmin)
    order = np.lexsort((ia, ib))[0]
    loc = (float(w.x_grid.points[ib[order]]), float(w.nu_grid.points[ia[order]]))
    neg = np.clip(-v, 0.0, None)
    volume = float(np.trapezoid(np.trapezoid(neg, dx=w.x_grid.dx, axis=1), dx=w.nu_grid.dx))
    vmax = float(v.max())
    contrast = max(0.0, -vmin) / vmax if vmax > 0 else float("inf")
    return NegativityReport(vmin, loc, volume, contrast)


def cross_section(w: WignerMap, nu: float = 0.5) -> np.ndarray:
    """Row of the map at momentum ``nu`` (must be a grid value)."""
    return w.values[w.nu_grid.index_of(nu)].copy()
