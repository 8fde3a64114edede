"""Uniform periodic space-time discretization and discrete L2 geometry.

The working domain is the periodic box [-L, L) with n equispaced nodes
x_i = -L + i*dx.  Fields are plain float64 arrays wrapped with their grid;
the heat semigroup acts diagonally in the discrete Fourier basis, so the
half-step used by every solver is exact (no CFL constraint) and satisfies
the semigroup law to rounding.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, GridMismatchError


@dataclass(frozen=True)
class SpaceGrid:
    """Periodic grid on [-L, L) with n_points cells of width dx = 2L/n."""

    half_length: float
    n_points: int

    def __post_init__(self):
        if self.half_length <= 0:
            raise DomainError(f"half_length must be > 0, got {self.half_length}")
        if self.n_points < 8:
            raise DomainError(f"n_points must be >= 8, got {self.n_points}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        """Node coordinates -L + i*dx, i = 0..n-1."""
        xs = -self.half_length + self.dx * np.arange(self.n_points)
        xs.flags.writeable = False
        return xs

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Real-FFT wavenumbers k_m = pi*m/L, m = 0..n/2."""
        ks = np.pi / self.half_length * np.arange(self.n_points // 2 + 1)
        ks.flags.writeable = False
        return ks

    def wrap(self, x):
        """Map positions into [-L, L)."""
        L = self.half_length
        return (np.asarray(x) + L) % (2.0 * L) - L

    def index_of(self, x) -> int:
        """Index of the node nearest to x (after periodic wrap)."""
        return int(np.rint((self.wrap(x) + self.half_length) / self.dx)) % self.n_points


@dataclass(frozen=True)
class TimeGrid:
    """Uniform nodes t_i = i*dt on [0, horizon], dt = horizon/n_steps."""

    horizon: float
    n_steps: int

    def __post_init__(self):
        if self.horizon <= 0:
            raise DomainError(f"horizon must be > 0, got {self.horizon}")
        if self.n_steps <= 0:
            raise DomainError(f"n_steps must be > 0, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @cached_property
    def times(self) -> np.ndarray:
        # linspace pins the last node to the horizon exactly (no accumulation).
        ts = np.linspace(0.0, self.horizon, self.n_steps + 1)
        ts.flags.writeable = False
        return ts

    def refine(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.horizon, self.n_steps * factor)


@dataclass(frozen=True)
class Field:
    """A real-valued function sampled on a SpaceGrid; immutable once built."""

    grid: SpaceGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"field has {v.shape} values for a grid of {self.grid.n_points} points"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("field contains non-finite values")
        if v is not self.values or v.flags.writeable:
            v = v.copy()
            v.flags.writeable = False
            object.__setattr__(self, "values", v)


def constant_field(grid: SpaceGrid, value: float) -> Field:
    return Field(grid, np.full(grid.n_points, float(value)))


@dataclass(frozen=True)
class FieldTrajectory:
    """One Field per time node; values stored as an (n_steps+1, n_points) array."""

    space_grid: SpaceGrid
    time_grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        want = (self.time_grid.n_steps + 1, self.space_grid.n_points)
        if v.shape != want:
            raise GridMismatchError(f"trajectory shape {v.shape}, expected {want}")
        if v is not self.values:
            object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]

    def frame(self, j: int) -> Field:
        return Field(self.space_grid, self.values[j])

    @property
    def final(self) -> Field:
        return self.frame(len(self) - 1)


def _require_same_grid(f: Field, g: Field):
    if f.grid != g.grid:
        raise GridMismatchError(f"grids differ: {f.grid} vs {g.grid}")


def inner_product(f: Field, g: Field) -> float:
    """Riemann approximation of the L2 inner product: sum f_i g_i dx."""
    _require_same_grid(f, g)
    return float(np.dot(f.values, g.values) * f.grid.dx)


def norm_sq(f: Field) -> float:
    return inner_product(f, f)


def heat_multiplier(grid: SpaceGrid, t: float) -> np.ndarray:
    """Fourier symbol exp(-t*k_m^2/2) of the heat semigroup at time t."""
    return np.exp(-0.5 * t * grid.wavenumbers ** 2)


def heat_semigroup_values(values: np.ndarray, grid: SpaceGrid, t: float) -> np.ndarray:
    """Heat flow applied to raw node values (used in solver inner loops)."""
    if t < 0:
        raise DomainError(f"heat semigroup needs t >= 0, got {t}")
    if t == 0:
        return np.array(values, dtype=np.float64, copy=True)
    return np.fft.irfft(np.fft.rfft(values) * heat_multiplier(grid, t), n=grid.n_points)


def heat_semigroup(f: Field, t: float) -> Field:
    """G_t * f on the periodic grid, exact in the discrete Fourier basis.

    The symbol is exp(-t*lambda_m/2) with lambda_m = k_m^2 the eigenvalues of
    the second-derivative operator on the grid's Fourier modes; the zero mode
    is untouched, so the mean value is preserved and constants are fixed.
    """
    return Field(f.grid, heat_semigroup_values(f.values, f.grid, t))


def dx_central_values(values: np.ndarray, dx: float) -> np.ndarray:
    """(f_{i+1} - f_{i-1}) / (2 dx) with periodic wrap."""
    return (np.roll(values, -1) - np.roll(values, 1)) / (2.0 * dx)


def dx_central(f: Field) -> Field:
    return Field(f.grid, dx_central_values(f.values, f.grid.dx))
