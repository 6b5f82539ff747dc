"""Dyadic frequency decomposition and nonhomogeneous Besov norms.

Builds the smooth radial cutoffs chi/phi, applies the localization
blocks, computes Besov norms, and constructs the oscillating
wave-packet initial data used throughout the experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, GridSpec, lp_norm

__all__ = [
    "BesovParams",
    "DyadicFamily",
    "DataProfile",
    "smooth_step",
    "make_dyadic_family",
    "dyadic_block",
    "besov_norm",
    "make_data_profile",
    "make_initial_data",
    "CoverageError",
]

# Inner plateau radius of the low-pass cutoff: chi == 1 on |xi| <= RHO0 and
# supp chi is |xi| <= 4/3, so phi = chi(./2) - chi is identically 1 on
# [4/3, 3/2] (in fact on [4/3, 2*RHO0]).
RHO0 = 1.12

CARRIER_FACTOR = 17.0 / 12.0


class CoverageError(ValueError):
    """A field has spectral mass above the bands covered by the family."""


@dataclass(frozen=True)
class BesovParams:
    """The (s, p, r) triple of a nonhomogeneous Besov space."""

    s: float
    p: float
    r: float

    def __post_init__(self):
        if self.p < 1 or self.r < 1:
            raise ValueError(f"p and r must be in [1, inf], got p={self.p} r={self.r}")

    def admissible(self, d: int) -> bool:
        """Hypothesis on (s, p, r) under which the main theorem applies."""
        critical = d / self.p + 1.0
        if self.s > critical and 1 <= self.p and 1 < self.r < math.inf:
            return True
        if self.s == critical and self.p < math.inf and self.r == 1:
            return True
        return False

    def with_s(self, s: float) -> "BesovParams":
        return BesovParams(s=s, p=self.p, r=self.r)


def smooth_step(x):
    """C^inf step: 0 for x <= 0, 1 for x >= 1, strictly increasing between.

    g(x)/(g(x) + g(1-x)) with g(x) = exp(-1/x) on x > 0.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.zeros_like(x)
    out[x >= 1.0] = 1.0
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    g = np.exp(-1.0 / xm)
    g1 = np.exp(-1.0 / (1.0 - xm))
    out[mid] = g / (g + g1)
    return float(out[0]) if scalar else out


def _chi(xi: np.ndarray) -> np.ndarray:
    """Low-pass cutoff: 1 on |xi| <= RHO0, 0 on |xi| >= 4/3."""
    return smooth_step((4.0 / 3.0 - np.abs(xi)) / (4.0 / 3.0 - RHO0))


@dataclass(frozen=True)
class DyadicFamily:
    """Cutoff symbols chi and phi(2^-j .) sampled on a grid's lattice."""

    grid: GridSpec
    cutoff: float
    j_max: int
    chi_symbol: np.ndarray
    phi_symbols: tuple

    def block_symbol(self, j: int) -> np.ndarray:
        if j < -1:
            return np.zeros(self.grid.shape)
        if j == -1:
            return self.chi_symbol
        if j > self.j_max:
            raise ValueError(f"block index {j} exceeds j_max={self.j_max}")
        return self.phi_symbols[j]

    def coverage(self) -> np.ndarray:
        """chi + sum_j phi_j on the lattice (telescopes to chi(2^-(j_max+1) .))."""
        out = self.chi_symbol.copy()
        for sym in self.phi_symbols:
            out += sym
        return out


def make_dyadic_family(grid: GridSpec, cutoff: float = None) -> DyadicFamily:
    """Sample the dyadic cutoffs on the grid's frequency lattice.

    cutoff defaults to the grid's kmax; j_max is the largest j whose
    band [3/4 * 2^j, 8/3 * 2^j] fits below the cutoff.
    """
    if cutoff is None:
        cutoff = grid.kmax
    j_max = math.floor(math.log2(cutoff * 3.0 / 8.0))
    if j_max < 0:
        raise ValueError(f"cutoff {cutoff} cannot host the j=0 band (needs >= 8/3)")
    xi = grid.frequency_magnitude()
    chi = _chi(xi)
    phis = []
    for j in range(j_max + 1):
        # telescoping chi(xi/2^{j+1}) - chi(xi/2^j) keeps the partition of
        # unity exact and phi automatically in [0, 1]
        phis.append(_chi(xi / 2.0 ** (j + 1)) - _chi(xi / 2.0**j))
    return DyadicFamily(grid=grid, cutoff=cutoff, j_max=j_max,
                        chi_symbol=chi, phi_symbols=tuple(phis))


def dyadic_block(f: Field, j: int, fam: DyadicFamily) -> Field:
    if fam.grid != f.grid:
        raise ValueError("family and field live on different grids")
    return Field(f.grid, spectrum=f.spectrum * fam.block_symbol(j))


def besov_norm(f: Field, bp: BesovParams, fam: DyadicFamily) -> float:
    """Nonhomogeneous Besov norm (sum_j 2^{sjr} |Delta_j f|_{L^p}^r)^{1/r}.

    Refuses fields with spectral mass above the covered bands instead of
    silently truncating the sum.
    """
    if fam.grid != f.grid:
        raise ValueError("family and field live on different grids")
    spec = f.spectrum
    power = np.abs(spec) ** 2
    total = float(power.sum())
    if total > 0.0:
        uncovered = float((power * np.clip(1.0 - fam.coverage(), 0.0, 1.0)).sum())
        # threshold tolerates FFT roundoff dust but catches real truncation
        if uncovered > 1e-18 * total:
            raise CoverageError(
                f"field has spectral mass fraction {uncovered / total:.3e} above "
                f"the bands covered by j_max={fam.j_max}"
            )
    terms = []
    for j in range(-1, fam.j_max + 1):
        block = Field(f.grid, spectrum=spec * fam.block_symbol(j))
        terms.append(2.0 ** (bp.s * j) * lp_norm(block, bp.p))
    terms = np.array(terms)
    if math.isinf(bp.r):
        return float(terms.max())
    return float((terms**bp.r).sum() ** (1.0 / bp.r))


@dataclass(frozen=True)
class DataProfile:
    """Per-axis band-limited bump profile of the wave-packet data.

    The axis bump has a spectrum equal to 1 on |xi| <= 4^{-d} and 0 on
    |xi| >= 2^{-d}; the physical profile is its inverse transform,
    periodized on the grid's axis.
    """

    grid: GridSpec
    bump_spectrum: np.ndarray  # on the 1-d axis lattice, FFT order
    axis_values: np.ndarray  # physical profile on the axis points

    def lp_norm_1d(self, p: float) -> float:
        a = np.abs(self.axis_values)
        if math.isinf(p):
            return float(a.max())
        return float((np.sum(a**p) * self.grid.spacing) ** (1.0 / p))


def make_data_profile(grid: GridSpec) -> DataProfile:
    d = grid.dim
    outer = 2.0**-d
    inner = 4.0**-d
    k = grid.axis_frequencies()
    bump = smooth_step((outer - np.abs(k)) / (outer - inner))
    # coefficients of the periodized inverse transform: phi_hat(k)/(2L);
    # the e^{-ikL} phase centers the bump at x = 0 (index 0 is x = -L)
    phase = np.exp(-1j * k * grid.half_period)
    coeffs = bump * phase / (2.0 * grid.half_period)
    axis_values = np.fft.ifft(coeffs).real * coeffs.size
    return DataProfile(grid=grid, bump_spectrum=bump, axis_values=axis_values)


def carrier_frequency(n: int, grid: GridSpec) -> float:
    """(17/12)*2^n snapped to the grid's frequency lattice."""
    step = math.pi / grid.half_period
    return round(CARRIER_FACTOR * 2.0**n / step) * step


def make_initial_data(n: int, bp: BesovParams, grid: GridSpec,
                      profile: DataProfile = None) -> Field:
    """Wave packet 2^{-ns} phi(x1) cos(omega_n x1) phi(x2)...phi(xd).

    The carrier omega_n ~ (17/12) 2^n puts the whole spectrum inside the
    single dyadic annulus [4/3 * 2^n, 3/2 * 2^n].
    """
    omega_nominal = CARRIER_FACTOR * 2.0**n
    if omega_nominal + 0.5 > grid.kmax / 2.0:
        raise ValueError(
            f"n={n} violates the aliasing precondition: carrier {omega_nominal:.1f} "
            f"+ 1/2 exceeds kmax/2 = {grid.kmax / 2.0:.1f}"
        )
    if profile is None:
        profile = make_data_profile(grid)
    if profile.grid != grid:
        raise ValueError("profile built for a different grid")
    omega = carrier_frequency(n, grid)
    x = grid.axis_coordinates()
    amp = 2.0 ** (-n * bp.s)

    def axis_view(arr_1d, axis):
        shape = [1] * grid.dim
        shape[axis] = grid.points_per_axis
        return arr_1d.reshape(shape)

    values = amp * axis_view(profile.axis_values * np.cos(omega * x), 0)
    for axis in range(1, grid.dim):
        values = values * axis_view(profile.axis_values, axis)
    values = np.broadcast_to(values, grid.shape).copy()
    return Field(grid, values=values)
