"""Discretized cylindrical Brownian motion and the mollified Gaussian field.

The orthonormal system is the family of normalized cell indicators
gamma_i = 1_{cell i}/sqrt(dx), so the per-cell Brownian coefficients are the
white-noise matrix itself: the increment of B over step j tested against a
grid function f is

    dB_j(f) = sum_l f(x_l) xi[j, l] sqrt(dt) sqrt(dx),

and the smoothed field B_k(t, x) = B_t(zeta_k(x - .)) has increment
covariance dt * <zeta_k(x-.), zeta_k(y-.)>_grid -> dt * C_k(x - y) as dx -> 0
(the one place the continuum limit enters).  xi entries are addressed by
(seed, step, cell) through the counter-based generator, so regeneration is
bit-exact and order-independent.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import DomainError, GridMismatchError, NoiseFileError
from .grid import Field, FieldTrajectory, SpaceGrid, TimeGrid
from .mollifier import Mollifier, check_resolved, kernel_values_at

_MAGIC = b"KPZNOIS1"
_VERSION = 1
_HEADER = struct.Struct("<8sIQdIdI")  # magic, version, seed, L, n_points, T, n_steps


def xi_rows(seed: int, rows0: int, n_rows: int, n_cols: int) -> np.ndarray:
    """White-noise rows [rows0, rows0+n_rows) from the noise stream of ``seed``."""
    return rng.normal_matrix(seed, rng.STREAM_NOISE, n_rows, n_cols, row0=rows0)


@dataclass(frozen=True)
class NoiseRealization:
    """An (n_steps x n_points) matrix of iid N(0,1) white-noise coefficients."""

    seed: int
    space_grid: SpaceGrid
    time_grid: TimeGrid
    xi: np.ndarray = field(repr=False)

    def __post_init__(self):
        want = (self.time_grid.n_steps, self.space_grid.n_points)
        if self.xi.shape != want:
            raise GridMismatchError(f"xi shape {self.xi.shape}, expected {want}")

    @property
    def dt(self) -> float:
        return self.time_grid.dt

    @property
    def dx(self) -> float:
        return self.space_grid.dx


def sample_noise(seed: int, space_grid: SpaceGrid, time_grid: TimeGrid) -> NoiseRealization:
    """Fill the white-noise matrix for (seed, grids); bit-exact on regeneration."""
    xi = xi_rows(seed, 0, time_grid.n_steps, space_grid.n_points)
    xi.flags.writeable = False
    return NoiseRealization(seed=seed, space_grid=space_grid, time_grid=time_grid, xi=xi)


def zero_noise(space_grid: SpaceGrid, time_grid: TimeGrid) -> NoiseRealization:
    """The degenerate all-zeros realization (scheme compensators stay active)."""
    xi = np.zeros((time_grid.n_steps, space_grid.n_points))
    xi.flags.writeable = False
    return NoiseRealization(seed=0, space_grid=space_grid, time_grid=time_grid, xi=xi)


def coarsen(noise: NoiseRealization, factor: int) -> NoiseRealization:
    """Aggregate fine steps in blocks of ``factor``: the same Brownian path on
    a coarser time grid (block sums rescaled to unit variance)."""
    n = noise.time_grid.n_steps
    if factor < 1 or n % factor:
        raise DomainError(f"factor {factor} does not divide {n} steps")
    if factor == 1:
        return noise
    xi = noise.xi.reshape(n // factor, factor, -1).sum(axis=1) / np.sqrt(factor)
    xi.flags.writeable = False
    return NoiseRealization(
        seed=noise.seed,
        space_grid=noise.space_grid,
        time_grid=TimeGrid(noise.time_grid.horizon, n // factor),
        xi=xi,
    )


def project_on(noise: NoiseRealization, f: Field, j: int) -> float:
    """Increment dB_j(f) of the cylindrical motion tested against f."""
    if f.grid != noise.space_grid:
        raise GridMismatchError("field and noise live on different space grids")
    scale = np.sqrt(noise.dt) * np.sqrt(noise.dx)
    return float(np.dot(f.values, noise.xi[j]) * scale)


def kernel_projection(noise: NoiseRealization, m: Mollifier, j: int, positions) -> np.ndarray:
    """dB_j(zeta_k(pos - .)) for a batch of (possibly off-grid) positions.

    Exact kernel sum over the support cells; agrees with the FFT convolution
    of pair_with_mollifier at on-grid positions to rounding.
    """
    g = noise.space_grid
    pos = np.atleast_1d(np.asarray(positions, dtype=np.float64))
    w = int(np.ceil(m.support_radius / g.dx)) + 1
    idx0 = np.rint((pos + g.half_length) / g.dx).astype(np.int64)
    cells = (idx0[:, None] + np.arange(-w, w + 1)[None, :]) % g.n_points
    disp = g.wrap(pos[:, None] - g.x[cells])
    ker = m.zeta_k(disp)
    scale = np.sqrt(noise.dt) * np.sqrt(noise.dx)
    return (ker * noise.xi[j, cells]).sum(axis=1) * scale


@dataclass(frozen=True)
class SmoothedField:
    """Cumulative smoothed field B_k(t_j, x_i) plus its per-step increments."""

    mollifier: Mollifier
    noise: NoiseRealization
    increments: np.ndarray = field(repr=False)  # (n_steps, n_points)

    @property
    def space_grid(self) -> SpaceGrid:
        return self.noise.space_grid

    @property
    def time_grid(self) -> TimeGrid:
        return self.noise.time_grid

    @property
    def cumulative(self) -> FieldTrajectory:
        cum = np.vstack(
            [np.zeros((1, self.space_grid.n_points)), np.cumsum(self.increments, axis=0)]
        )
        return FieldTrajectory(self.space_grid, self.time_grid, cum)

    def at(self, j: int) -> Field:
        """B_k(t_j, .) as a Field."""
        return self.cumulative.frame(j)


def smoothing_kernel_row(m: Mollifier, grid: SpaceGrid) -> np.ndarray:
    """zeta_k sampled at periodic displacements l*dx (row used by the FFT)."""
    return m.zeta_k(grid.wrap(grid.dx * np.arange(grid.n_points)))


def smooth_increments(xi: np.ndarray, m: Mollifier, grid: SpaceGrid, dt: float) -> np.ndarray:
    """FFT periodic convolution of white-noise rows with zeta_k, scaled so
    E[dB_k(x) dB_k(y)] = dt * <zeta_k(x-.), zeta_k(y-.)>_grid."""
    ker_hat = np.fft.rfft(smoothing_kernel_row(m, grid))
    out = np.fft.irfft(np.fft.rfft(xi, axis=-1) * ker_hat, n=grid.n_points, axis=-1)
    out *= np.sqrt(dt) * np.sqrt(grid.dx)
    return out


def pair_with_mollifier(noise: NoiseRealization, m: Mollifier) -> SmoothedField:
    """Smoothed Gaussian field B_k built from a white-noise realization."""
    check_resolved(m, noise.space_grid)
    inc = smooth_increments(noise.xi, m, noise.space_grid, noise.dt)
    inc.flags.writeable = False
    return SmoothedField(mollifier=m, noise=noise, increments=inc)


def smoothed_at_positions(noise: NoiseRealization, m: Mollifier, j: int, positions) -> np.ndarray:
    """Increment of B_k over step j evaluated at arbitrary real positions."""
    return kernel_projection(noise, m, j, positions)


def grid_covariance_at_zero(m: Mollifier, grid: SpaceGrid) -> float:
    """<zeta_k(x-.), zeta_k(x-.)>_grid: the realized per-point variance rate."""
    row = kernel_values_at(m, grid, 0.0)[0]
    return float(np.dot(row, row) * grid.dx)


def save_noise(noise: NoiseRealization, path) -> None:
    """Persist header + row-major little-endian float64 matrix."""
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        noise.seed,
        noise.space_grid.half_length,
        noise.space_grid.n_points,
        noise.time_grid.horizon,
        noise.time_grid.n_steps,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(noise.xi, dtype="<f8").tobytes())


def load_noise(path) -> NoiseRealization:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise NoiseFileError(f"{path}: truncated header")
        magic, version, seed, L, n_points, horizon, n_steps = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise NoiseFileError(f"{path}: bad magic {magic!r}")
        if version != _VERSION:
            raise NoiseFileError(f"{path}: unsupported version {version}")
        body = fh.read()
    want = n_steps * n_points * 8
    if len(body) != want:
        raise NoiseFileError(f"{path}: matrix payload is {len(body)} bytes, expected {want}")
    xi = np.frombuffer(body, dtype="<f8").reshape(n_steps, n_points)
    return NoiseRealization(
        seed=seed,
        space_grid=SpaceGrid(half_length=L, n_points=n_points),
        time_grid=TimeGrid(horizon=horizon, n_steps=n_steps),
        xi=xi,
    )
