"""Mollification kernels and their covariance.

The base kernel is an even, nonnegative, compactly supported unit-mass
function on [-1, 1]; its level-k rescaling zeta_k(y) = k*zeta(k*y) lives on
[-1/k, 1/k].  The covariance C_k(x) = (zeta_k * zeta_k)(x) and in particular
C_k(0) = k*||zeta||^2 enter every solver as the renormalization constant, so
both are computed by adaptive quadrature to tolerances far below grid error
and cached on the instance.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, ResolutionError
from .grid import Field, SpaceGrid

QUAD_TOL = 1e-10


def bump_raw(x):
    """Unnormalized standard bump exp(-1/(1-x^2)) on (-1, 1), else 0."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    if np.any(inside):
        xi = x[inside]
        out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


def quartic_raw(x):
    """Polynomial alternative (1-x^2)^4 on [-1, 1]; C^3 at the edge, used
    only for kernel-robustness studies."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = (1.0 - xi * xi) ** 4
    return out


BASE_KERNELS: dict[str, Callable] = {"bump": bump_raw, "quartic": quartic_raw}


@dataclass(frozen=True)
class Mollifier:
    """Level-k rescaling of an even, unit-mass base kernel.

    norm_const is the normalizer c making the base kernel integrate to one;
    ck0 caches C_k(0) = k*||zeta||^2.
    """

    k: int
    norm_const: float
    ck0: float
    base_support: float = 1.0
    kernel_name: str = "bump"
    _raw: Callable = field(default=bump_raw, repr=False, compare=False)

    @property
    def support_radius(self) -> float:
        """Half-width 1/k of the support of zeta_k."""
        return self.base_support / self.k

    def zeta(self, x):
        """Base kernel zeta(x) = c * raw(x)."""
        return self.norm_const * self._raw(x)

    def zeta_k(self, y):
        """zeta_k(y) = k * zeta(k*y)."""
        return self.k * self.zeta(self.k * np.asarray(y, dtype=np.float64))


def mollifier_new(k: int, kernel: str = "bump") -> Mollifier:
    """Construct the level-k mollifier, fixing normalization by quadrature."""
    if k < 1 or int(k) != k:
        raise DomainError(f"mollification level must be a positive integer, got {k}")
    raw = BASE_KERNELS.get(kernel)
    if raw is None:
        raise DomainError(f"unknown base kernel {kernel!r}; have {sorted(BASE_KERNELS)}")
    mass, _ = quad(lambda x: float(raw(x)), -1.0, 1.0, epsabs=QUAD_TOL, epsrel=QUAD_TOL)
    c = 1.0 / mass
    l2, _ = quad(lambda x: float(raw(x)) ** 2, -1.0, 1.0, epsabs=QUAD_TOL, epsrel=QUAD_TOL)
    ck0 = int(k) * c * c * l2
    return Mollifier(k=int(k), norm_const=c, ck0=ck0, kernel_name=kernel, _raw=raw)


@lru_cache(maxsize=4096)
def _base_covariance(kernel: str, s: float) -> float:
    """C_1(s) = int zeta(s-y) zeta(y) dy for the named base kernel."""
    s = abs(s)
    if s >= 2.0:
        return 0.0
    raw = BASE_KERNELS[kernel]
    mass, _ = quad(lambda x: float(raw(x)), -1.0, 1.0, epsabs=QUAD_TOL, epsrel=QUAD_TOL)
    c = 1.0 / mass
    lo, hi = max(-1.0, s - 1.0), min(1.0, s + 1.0)
    v, _ = quad(
        lambda y: float(raw(s - y)) * float(raw(y)),
        lo,
        hi,
        epsabs=QUAD_TOL,
        epsrel=QUAD_TOL,
        limit=200,
    )
    return c * c * v


def covariance(m: Mollifier, x: float) -> float:
    """C_k(x) = (zeta_k * zeta_k)(x); zero for |x| >= 2/k.

    Evaluated through the change of variables C_k(x) = k * C_1(k*x), which
    keeps one cached base-level quadrature per probe point.
    """
    return m.k * _base_covariance(m.kernel_name, m.k * float(x))


def min_points_to_resolve(m: Mollifier, grid: SpaceGrid) -> int:
    # dx <= 1/k, i.e. n >= 2*L*k
    return math.ceil(2.0 * grid.half_length * m.k)


def check_resolved(m: Mollifier, grid: SpaceGrid):
    if grid.dx > m.support_radius:
        raise ResolutionError(
            f"kernel at level k={m.k} (support width {2*m.support_radius:.4g}) is not "
            f"resolved by dx={grid.dx:.4g}; need n_points >= {min_points_to_resolve(m, grid)}",
            min_n_points=min_points_to_resolve(m, grid),
        )


def kernel_values_at(m: Mollifier, grid: SpaceGrid, centers) -> np.ndarray:
    """zeta_k(center - x_l) for each center (rows) and grid node (columns).

    Displacements wrap periodically, so off-box centers land back in the box.
    """
    centers = np.atleast_1d(np.asarray(centers, dtype=np.float64))
    disp = grid.wrap(centers[:, None] - grid.x[None, :])
    return m.zeta_k(disp)


def sample_on_grid(m: Mollifier, grid: SpaceGrid, center: float) -> Field:
    """Field holding zeta_k(center - .) at the grid nodes."""
    check_resolved(m, grid)
    return Field(grid, kernel_values_at(m, grid, center)[0])
