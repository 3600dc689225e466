"""Square periodic grids on the truncated z-plane and the fields living on them.

Node ``(j, k)`` sits at ``z = (-R + j h) + i (-R + k h)`` with ``h = 2R/N``;
arrays are indexed ``values[j, k]`` so axis 0 runs along ``x1 = Re z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform ``N x N`` sampling of the square ``[-R, R)^2``."""

    R: float
    N: int
    periodic: bool = True

    def __post_init__(self):
        if not np.isfinite(self.R) or self.R <= 0:
            raise ValueError(f"grid half-width must be positive, got R={self.R}")
        if int(self.N) != self.N or self.N < 16 or self.N % 2:
            raise ValueError(f"grid size must be an even integer >= 16, got N={self.N}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "R", float(self.R))

    @property
    def h(self) -> float:
        return 2.0 * self.R / self.N

    @property
    def center(self) -> tuple[int, int]:
        return self.N // 2, self.N // 2

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.R + self.h * np.arange(self.N)

    @cached_property
    def z(self) -> np.ndarray:
        x1, x2 = np.meshgrid(self.axis, self.axis, indexing="ij")
        return x1 + 1j * x2

    def node(self, j: int, k: int) -> complex:
        return complex(-self.R + j * self.h, -self.R + k * self.h)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular wavenumbers ``(xi1, xi2)`` broadcast to ``N x N`` in FFT order."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h)
        xi1, xi2 = np.meshgrid(k, k, indexing="ij")
        return xi1, xi2

    def doubled(self) -> "Grid":
        """Grid with the same spacing covering ``[-2R, 2R)^2``."""
        return Grid(2.0 * self.R, 2 * self.N, self.periodic)

    def __hash__(self):
        return hash((self.R, self.N, self.periodic))


def make_grid(R: float, N: int) -> Grid:
    return Grid(R, N)


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ComplexField:
    grid: Grid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    kind = "complex"

    def __post_init__(self):
        vals = _frozen(self.values, np.complex128)
        if vals.shape != (self.grid.N, self.grid.N):
            raise ValueError(f"field shape {vals.shape} does not match grid N={self.grid.N}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def norm(self, p=2) -> float:
        """Discrete L^p norm (``p=np.inf`` for the max norm)."""
        if p == np.inf:
            return float(np.max(np.abs(self.values)))
        return float((np.sum(np.abs(self.values) ** p) * self.grid.h**2) ** (1.0 / p))

    def with_values(self, values) -> "ComplexField":
        return ComplexField(self.grid, values)


@dataclass(frozen=True, eq=False)
class RealField(ComplexField):
    kind = "real"

    def __post_init__(self):
        vals = np.asarray(self.values)
        if np.iscomplexobj(vals):
            if np.any(vals.imag != 0):
                raise ValueError("RealField requires real samples")
            vals = vals.real
        vals = _frozen(vals, np.float64)
        if vals.shape != (self.grid.N, self.grid.N):
            raise ValueError(f"field shape {vals.shape} does not match grid N={self.grid.N}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def with_values(self, values) -> "RealField":
        return RealField(self.grid, values)


def as_array(f) -> np.ndarray:
    return f.values if isinstance(f, ComplexField) else np.asarray(f)


def dz_multiplier(grid: Grid) -> np.ndarray:
    """Fourier multiplier of d/dz = (d/dx1 - i d/dx2)/2, Nyquist rows zeroed."""
    xi1, xi2 = _odd_safe(grid)
    return 0.5j * (xi1 - 1j * xi2)


def dzbar_multiplier(grid: Grid) -> np.ndarray:
    xi1, xi2 = _odd_safe(grid)
    return 0.5j * (xi1 + 1j * xi2)


def _odd_safe(grid: Grid):
    xi1, xi2 = grid.wavenumbers
    xi1 = xi1.copy()
    xi2 = xi2.copy()
    # the Nyquist mode has no consistent odd derivative
    nyq = grid.N // 2
    xi1[nyq, :] = 0.0
    xi2[:, nyq] = 0.0
    return xi1, xi2


def spectral_derivative(f, kind: str = "dz", order: int = 1):
    """Apply ``d/dz`` or ``d/dzbar`` ``order`` times via Fourier multipliers.

    Parameters
    ----------
    f : ComplexField or RealField
        Periodic samples; callers keep boundary values at machine zero.
    kind : {"dz", "dzbar"}
    order : int
        1, 2 or 3.

    Returns
    -------
    ComplexField
    """
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
    if kind == "dz":
        mult = dz_multiplier(f.grid)
    elif kind == "dzbar":
        mult = dzbar_multiplier(f.grid)
    else:
        raise ValueError(f"unknown derivative kind {kind!r}")
    out = np.fft.ifft2(np.fft.fft2(f.values) * mult**order)
    return ComplexField(f.grid, out)


def partial_x(values: np.ndarray, grid: Grid, j1: int, j2: int) -> np.ndarray:
    """Mixed Cartesian derivative ``d^j1/dx1^j1 d^j2/dx2^j2`` of periodic samples."""
    xi1, xi2 = grid.wavenumbers
    if j1 % 2:
        xi1 = _odd_safe(grid)[0]
    if j2 % 2:
        xi2 = _odd_safe(grid)[1]
    mult = (1j * xi1) ** j1 * (1j * xi2) ** j2
    return np.fft.ifft2(np.fft.fft2(values) * mult)


def laplacian_5pt(values: np.ndarray, h: float) -> np.ndarray:
    """Periodic five-point Laplacian."""
    return (
        np.roll(values, 1, 0)
        + np.roll(values, -1, 0)
        + np.roll(values, 1, 1)
        + np.roll(values, -1, 1)
        - 4.0 * values
    ) / h**2


def integrate(f) -> complex:
    """Rectangle rule ``h^2 * sum(values)``; spectrally accurate for decayed fields."""
    return complex(np.sum(f.values) * f.grid.h**2)
