"""Wigner distribution functions: numerical, exact periodic, and analytic oracles.

Maps are densities in (x, nu) with nu = p d / (2 pi), so that for a pure
state W(x, nu) = 2 int psi*(x - y) psi(x + y) exp(-4 pi i nu y) dy and
int W dnu = |psi(x)|^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .optics import Grid1D, fourier_coefficient


@dataclass(frozen=True)
class WignerMap:
    """Real phase-space map W[nu, x] on a pair of uniform grids."""

    x_grid: Grid1D
    nu_grid: Grid1D
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise TypeError("Wigner map values must be real")
        if v.shape != (self.nu_grid.size, self.x_grid.size):
            raise ValueError(f"values shape {v.shape} does not match grids "
                             f"({self.nu_grid.size}, {self.x_grid.size})")
        object.__setattr__(self, "values", v.astype(float, copy=False))

    @property
    def source(self) -> str:
        return self.metadata.get("source", "unknown")

    def total(self) -> float:
        """Trapezoid integral of W over the map."""
        return float(np.trapezoid(np.trapezoid(self.values, dx=self.x_grid.dx, axis=1),
                                  dx=self.nu_grid.dx))

    def row(self, nu: float) -> np.ndarray:
        return self.values[self.nu_grid.index_of(nu)]


class DeltaPeak(NamedTuple):
    x: float
    nu: float
    sign: int
    weight: float


@dataclass(frozen=True)
class DeltaPeakSet:
    """Point masses of the narrow-slit limit at (n/2, m/2) with sign (-1)^(n m)."""

    peaks: tuple

    def __post_init__(self):
        for p in self.peaks:
            n, m = round(2 * p.x), round(2 * p.nu)
            if p.sign != (-1 if (n % 2 and m % 2) else 1):
                raise ValueError(f"peak at ({p.x}, {p.nu}) violates the (-1)^(nm) sign rule")

    def __len__(self):
        return len(self.peaks)

    def sign_at(self, n: int, m: int) -> int:
        for p in self.peaks:
            if p.x == n / 2 and p.nu == m / 2:
                return p.sign
        raise KeyError((n, m))


def wdf_delta_comb(n_range: Iterable[int], m_range: Iterable[int]) -> DeltaPeakSet:
    """Enumerate the delta peaks (x = n/2, nu = m/2), each of weight 1/2."""
    peaks = tuple(DeltaPeak(n / 2, m / 2, -1 if (n % 2 and m % 2) else 1, 0.5)
                  for n in n_range for m in m_range)
    return DeltaPeakSet(peaks)


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def wdf_numerical(psi: np.ndarray, grid: Grid1D, nu_max: Optional[float] = None,
                  pad: int = 4, chunk: int = 256) -> WignerMap:
    """Discrete WDF of sampled ``psi``: 2 dx sum_k psi*_{j-k} psi_{j+k} exp(-4 pi i nu k dx).

    The lag sum is zero-padded to a power of two >= ``pad`` times the grid
    size before the FFT, giving nu spacing 1 / (2 L dx). ``nu_max`` crops
    the output to |nu| <= nu_max.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (grid.size,):
        raise ValueError(f"psi has {psi.size} samples but the grid has {grid.size}")
    dx = grid.dx
    norm = float(np.sum(np.abs(psi) ** 2) * dx)
    if abs(norm - 1) > 1e-6:
        raise ValueError(f"psi must be normalised (sum |psi|^2 dx = {norm:.8g})")
    peak = np.abs(psi).max()
    if max(abs(psi[0]), abs(psi[-1])) >= 1e-6 * peak:
        raise ValueError("psi is not negligible at the grid boundary; widen the grid")
    n = psi.size
    size = _next_pow2(pad * n)
    nu_all = (np.arange(size) - size // 2) / (2 * size * dx)
    keep = np.ones(size, dtype=bool) if nu_max is None else np.abs(nu_all) <= nu_max + 1e-12
    nu_keep = nu_all[keep]
    out = np.empty((nu_keep.size, n))
    lags = np.arange(-(n - 1), n)
    imag_max = 0.0
    for lo in range(0, n, chunk):
        j = np.arange(lo, min(lo + chunk, n))
        plus, minus = j[:, None] + lags[None, :], j[:, None] - lags[None, :]
        ok = (plus >= 0) & (plus < n) & (minus >= 0) & (minus < n)
        corr = np.where(ok, np.conj(psi[np.clip(minus, 0, n - 1)]) * psi[np.clip(plus, 0, n - 1)], 0)
        buf = np.zeros((j.size, size), dtype=complex)
        buf[:, lags % size] = corr
        spec = np.fft.fftshift(np.fft.fft(buf, axis=1), axes=1)[:, keep] * (2 * dx)
        imag_max = max(imag_max, float(np.abs(spec.imag).max()))
        out[:, j] = spec.real.T
    peak_w = np.abs(out).max()
    if imag_max > 1e-10 * peak_w:
        raise ArithmeticError(f"Wigner map has imaginary residue {imag_max:.3g}")
    dnu = 1.0 / (2 * size * dx)
    nu_grid = Grid1D(float(nu_keep[0]), float(nu_keep[-1]), dnu, unit="1/d")
    return WignerMap(grid, nu_grid, out, {"source": "numerical", "fft_length": size,
                                          "imag_residue": imag_max})


def wdf_infinite_exact(f0: float, n_max: int, x_grid: Grid1D) -> WignerMap:
    """WDF of the truncated periodic state sum_n A_n exp(2 pi i n x).

    The weight sits on delta lines at nu = k/2, |k| <= 2 n_max; row k of the
    map holds the line density sum_{n + n' = k} A_n A_n' exp(2 pi i (n - n') x),
    divided by sum |A_n|^2 so that one period carries unit weight.
    """
    n = np.arange(-n_max, n_max + 1)
    a = fourier_coefficient(n, f0)
    x = x_grid.points
    ks = np.arange(-2 * n_max, 2 * n_max + 1)
    # coeff[n, k] = A_n A_{k-n} where both orders are retained
    partner = ks[None, :] - n[:, None]
    valid = np.abs(partner) <= n_max
    coeff = np.where(valid, a[:, None] * a[np.clip(partner + n_max, 0, 2 * n_max)], 0.0)
    basis = np.exp(4j * np.pi * np.outer(x, n))
    rows = (basis @ coeff) * np.exp(-2j * np.pi * np.outer(x, ks))
    values = rows.real.T / np.sum(a**2)
    nu_grid = Grid1D(-float(n_max), float(n_max), 0.5, unit="1/d")
    return WignerMap(x_grid, nu_grid, values,
                     {"source": "exact", "convention": "line density per row, unit weight per period",
                      "open_fraction": f0, "n_max": n_max})


def gaussian_state(grid: Grid1D, sigma: float, x0: float = 0.0, nu0: float = 0.0) -> np.ndarray:
    """Normalised Gaussian packet with |psi|^2 of standard deviation ``sigma``."""
    x = grid.points
    psi = np.exp(-(x - x0) ** 2 / (4 * sigma**2) + 2j * np.pi * nu0 * x)
    return psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)


def gaussian_wdf(x, nu, sigma: float):
    """Closed-form WDF of the centred Gaussian packet, broadcast over x and nu."""
    x, nu = np.asarray(x, dtype=float), np.asarray(nu, dtype=float)
    return 2.0 * np.exp(-x**2 / (2 * sigma**2) - 8 * np.pi**2 * sigma**2 * nu**2)


def gaussian_marginal(x, theta: float, sigma: float):
    """Projection of the Gaussian WDF onto x cos(theta) + p sin(theta)."""
    sp = 1.0 / (2 * sigma)
    var = sigma**2 * np.cos(theta) ** 2 + sp**2 * np.sin(theta) ** 2
    x = np.asarray(x, dtype=float)
    return np.exp(-x**2 / (2 * var)) / np.sqrt(2 * np.pi * var)
