"""Periodic grid, fields with synchronized physical/Fourier sides, and
exact Fourier-multiplier operators.

Conventions (fixed once, tested in test_grid.py):

* physical domain is the torus [-L, L)^d with N points per axis,
  spacing h = 2L/N;
* frequency lattice is (pi/L) * {-N/2, ..., N/2 - 1} per axis;
* the forward transform uses e^{-i k.x} and is normalized so that a unit
  cosine at lattice frequency k has coefficients 1/2 at +-k, i.e. the
  spectrum entries are the coefficients of f(x) = sum_k c_k e^{i k.x};
* the Nyquist row (axis index N/2) is zeroed by the derivative operators
  to keep them skew-symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridSpec",
    "Field",
    "make_grid",
    "to_fourier",
    "to_physical",
    "gradient",
    "divergence",
    "helmholtz_inverse",
    "heat_propagate",
    "lp_norm",
    "dealias",
]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-L, L)^d."""

    dim: int
    points_per_axis: int
    half_period: float

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_period / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return (2.0 * self.half_period) ** self.dim

    @property
    def kmax(self) -> float:
        """Largest resolvable frequency pi*N/(2L)."""
        return math.pi * self.points_per_axis / (2.0 * self.half_period)

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    def axis_coordinates(self) -> np.ndarray:
        n, L = self.points_per_axis, self.half_period
        return -L + self.spacing * np.arange(n)

    def axis_frequencies(self) -> np.ndarray:
        """1-d frequency lattice in FFT (wrapped) order."""
        n = self.points_per_axis
        return (math.pi / self.half_period) * (n * np.fft.fftfreq(n))

    def frequency_component(self, axis: int) -> np.ndarray:
        """Frequency along one axis, broadcastable over the full lattice."""
        k = self.axis_frequencies()
        shape = [1] * self.dim
        shape[axis] = self.points_per_axis
        return k.reshape(shape)

    def frequency_magnitude(self) -> np.ndarray:
        return np.sqrt(self.frequency_sq())

    def frequency_sq(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for axis in range(self.dim):
            out = out + self.frequency_component(axis) ** 2
        return out

    def nyquist_mask(self) -> np.ndarray:
        """1.0 away from the Nyquist rows, 0.0 on them."""
        n = self.points_per_axis
        axis_mask = np.ones(n)
        axis_mask[n // 2] = 0.0
        out = np.ones(self.shape)
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = n
            out = out * axis_mask.reshape(shape)
        return out


def make_grid(d: int, N: int, L: float) -> GridSpec:
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    if not _is_power_of_two(N) or N < 8:
        raise ValueError(f"points_per_axis must be a power of two >= 8, got {N}")
    if L <= 0:
        raise ValueError(f"half_period must be positive, got {L}")
    return GridSpec(dim=d, points_per_axis=N, half_period=L)


class Field:
    """Real scalar field with lazily synchronized physical/Fourier sides.

    Fields are treated as immutable values: every operator returns a new
    Field and never touches its input.  The only internal mutation is
    filling in the side that has not been computed yet.
    """

    __slots__ = ("grid", "_values", "_spectrum")

    def __init__(self, grid: GridSpec, values=None, spectrum=None):
        if values is None and spectrum is None:
            raise ValueError("Field needs at least one of values/spectrum")
        if values is not None:
            values = np.asarray(values, dtype=float)
            if values.shape != grid.shape:
                raise ValueError(f"values shape {values.shape} != grid shape {grid.shape}")
        if spectrum is not None:
            spectrum = np.asarray(spectrum, dtype=complex)
            if spectrum.shape != grid.shape:
                raise ValueError(f"spectrum shape {spectrum.shape} != grid shape {grid.shape}")
        self.grid = grid
        self._values = values
        self._spectrum = spectrum

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = np.fft.ifftn(self._spectrum).real * self._spectrum.size
        return self._values

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            self._spectrum = np.fft.fftn(self._values) / self._values.size
        return self._spectrum

    def imag_residue(self) -> float:
        """Max imaginary part of the inverse transform, as a realness check."""
        if self._spectrum is None:
            return 0.0
        back = np.fft.ifftn(self._spectrum) * self._spectrum.size
        return float(np.max(np.abs(back.imag)))

    def __add__(self, other: "Field") -> "Field":
        self._require_same_grid(other)
        return Field(self.grid, spectrum=self.spectrum + other.spectrum)

    def __sub__(self, other: "Field") -> "Field":
        self._require_same_grid(other)
        return Field(self.grid, spectrum=self.spectrum - other.spectrum)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, spectrum=self.spectrum * scalar)

    __rmul__ = __mul__

    def _require_same_grid(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")


def to_fourier(f: Field) -> Field:
    """Field with the Fourier side materialized."""
    return Field(f.grid, spectrum=f.spectrum)


def to_physical(f: Field) -> Field:
    """Field with the physical side materialized."""
    return Field(f.grid, values=f.values)


def apply_multiplier(f: Field, symbol: np.ndarray) -> Field:
    return Field(f.grid, spectrum=f.spectrum * symbol)


def gradient(f: Field) -> list:
    g = f.grid
    mask = g.nyquist_mask()
    return [
        Field(g, spectrum=f.spectrum * (1j * g.frequency_component(axis) * mask))
        for axis in range(g.dim)
    ]


def divergence(v: list) -> Field:
    g = v[0].grid
    if len(v) != g.dim:
        raise ValueError(f"expected {g.dim} components, got {len(v)}")
    mask = g.nyquist_mask()
    out = np.zeros(g.shape, dtype=complex)
    for axis, comp in enumerate(v):
        if comp.grid != g:
            raise ValueError("vector components live on different grids")
        out += comp.spectrum * (1j * g.frequency_component(axis) * mask)
    return Field(g, spectrum=out)


def laplacian(f: Field) -> Field:
    return Field(f.grid, spectrum=f.spectrum * (-f.grid.frequency_sq()))


def helmholtz_inverse(f: Field) -> Field:
    """Apply (1 - Laplacian)^{-1}, the signal-concentration operator."""
    return Field(f.grid, spectrum=f.spectrum / (1.0 + f.grid.frequency_sq()))


def heat_propagate(f: Field, theta: float) -> Field:
    """Apply the heat semigroup e^{theta * Laplacian} exactly."""
    if theta < 0:
        raise ValueError(f"heat propagation time must be >= 0, got {theta}")
    return Field(f.grid, spectrum=f.spectrum * np.exp(-theta * f.grid.frequency_sq()))


def lp_norm(f: Field, p: float) -> float:
    """Rectangle-rule L^p norm; grid maximum for p = inf."""
    if p < 1:
        raise ValueError(f"p must be in [1, inf], got {p}")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max())
    return float((np.sum(a**p) * f.grid.cell_volume) ** (1.0 / p))


def dealias(f: Field, fraction: float) -> Field:
    """Zero every mode with |k_i| > fraction * kmax on any axis."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"dealias fraction must be in (0, 1], got {fraction}")
    g = f.grid
    cutoff = fraction * g.kmax
    keep = np.ones(g.shape, dtype=bool)
    for axis in range(g.dim):
        keep &= np.abs(g.frequency_component(axis)) <= cutoff
    return Field(g, spectrum=np.where(keep, f.spectrum, 0.0))
