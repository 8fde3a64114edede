"""Monte Carlo realization of the doubly backward SDE and its Feynman-Kac form.

The pair (y, z) at a base point x is built two independent ways from one
frozen noise realization:

* grid route: read the multiplicative-noise heat solution psi along the
  backward characteristic X(t) = x + W(S) - W(t):  u(t) = psi_t(X(t)),
  y = -log u, z = (d/dx)(-log psi_t) at X(t);
* bridge route: evaluate the conditional expectation
  u(t) = E[ u0(X(0)) exp(-Z(t) - C_k(0) t / 2) | F_t ] by endpoint
  Gauss-Hermite quadrature against the heat kernel and Brownian-bridge Monte
  Carlo of the exponential noise functional, reusing the same white-noise
  matrix as the grid solvers.

Disagreement beyond Monte Carlo error between the two routes flags a bug;
agreement is what uniqueness of the backward pair means numerically.  All
randomness is counter-addressed: drivers, bridges and noise live in disjoint
streams of one seed space, and ensemble members derive their columns from
the sample index.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import rng
from .errors import (
    DomainError,
    GridMismatchError,
    McUndersamplingError,
    QuadratureWindowError,
)
from .grid import SpaceGrid, TimeGrid, dx_central_values
from .integrals import (
    DiscretePath,
    backward_integral_values,
    forward_integral_values,
    quadratic_variation,
    time_reverse_values,
)
from .mollifier import Mollifier
from .noise import NoiseRealization, kernel_projection
from .solvers import InitialCondition, SheState, she_solve


# ---------------------------------------------------------------------------
# drivers and characteristics


@dataclass(frozen=True)
class DriverPath:
    """Auxiliary Brownian motion W on [0, S], independent of the noise stream."""

    seed: int
    time_grid: TimeGrid
    w: DiscretePath


def driver_increment_normals(seed: int, n_steps: int, n_samples: int) -> np.ndarray:
    """Standard normals for driver columns; sample s is column s of (seed)."""
    return rng.normal_matrix(seed, rng.STREAM_DRIVER, n_steps, n_samples)


def sample_driver(seed: int, time_grid: TimeGrid, sample: int = 0) -> DriverPath:
    xi = driver_increment_normals(seed, time_grid.n_steps, sample + 1)[:, sample]
    w = np.concatenate([[0.0], np.cumsum(xi * np.sqrt(time_grid.dt))])
    return DriverPath(seed=seed, time_grid=time_grid, w=DiscretePath(time_grid, w))


def driver_matrix(seed: int, time_grid: TimeGrid, n_samples: int) -> np.ndarray:
    """W paths as columns: shape (n_steps + 1, n_samples), W(0) = 0."""
    xi = driver_increment_normals(seed, time_grid.n_steps, n_samples)
    w = np.vstack([np.zeros((1, n_samples)), np.cumsum(xi * np.sqrt(time_grid.dt), axis=0)])
    return w


@dataclass(frozen=True)
class BackwardCharacteristic:
    """X(t) = x + W(S) - W(t); X(S) = x exactly, X(0) = x + W(S)."""

    x: float
    driver: DriverPath
    x_path: DiscretePath

    @property
    def time_grid(self) -> TimeGrid:
        return self.driver.time_grid


def characteristic_values(x, w_values: np.ndarray) -> np.ndarray:
    """x + W(S) - W(t) along the last-but-one axis of a driver matrix."""
    return x + (w_values[-1] - w_values)


def backward_characteristic(x: float, driver: DriverPath) -> BackwardCharacteristic:
    vals = characteristic_values(x, driver.w.values)
    return BackwardCharacteristic(x=x, driver=driver, x_path=DiscretePath(driver.time_grid, vals))


# ---------------------------------------------------------------------------
# the martingale functional Z


@dataclass(frozen=True)
class ZFunctional:
    """Z(t) = int_0^t <zeta_k(X(r) - .), dB_r>, left-endpoint in the noise."""

    z_path: DiscretePath
    noise: NoiseRealization
    characteristic: BackwardCharacteristic
    mollifier: Mollifier

    def quadratic_variation(self) -> DiscretePath:
        return quadratic_variation(self.z_path)


def z_increments(noise: NoiseRealization, m: Mollifier, x_matrix: np.ndarray) -> np.ndarray:
    """Increment matrix dZ[j, s] for characteristics given as columns.

    x_matrix has shape (n_steps + 1, n_samples); row j is evaluated against
    the white-noise row j (the integrand at the left endpoint).
    """
    n_steps = noise.time_grid.n_steps
    if x_matrix.shape[0] != n_steps + 1:
        raise GridMismatchError("characteristic and noise time grids differ")
    out = np.empty((n_steps, x_matrix.shape[1]))
    for j in range(n_steps):
        out[j] = kernel_projection(noise, m, j, x_matrix[j])
    return out


def build_z(noise: NoiseRealization, m: Mollifier, char: BackwardCharacteristic) -> ZFunctional:
    if noise.time_grid != char.time_grid:
        raise GridMismatchError("driver and noise time grids differ")
    dz = z_increments(noise, m, char.x_path.values[:, None])[:, 0]
    z = np.concatenate([[0.0], np.cumsum(dz)])
    return ZFunctional(
        z_path=DiscretePath(char.time_grid, z), noise=noise, characteristic=char, mollifier=m
    )


# ---------------------------------------------------------------------------
# Brownian bridges and the exponential functional


@dataclass(frozen=True)
class BridgeSample:
    """One pinned path on [0, t] and its noise functional M(t)."""

    mu: float
    nu: float
    t_index: int
    omega: np.ndarray
    functional: float


def bridge_pinned_noise(seed: int, t_index: int, n_samples: int, dt: float, col0: int = 0) -> np.ndarray:
    """B0(t_j) - (t_j/t) B0(t), rows j = 0..t_index, one column per sample."""
    xi = rng.normal_matrix(seed, rng.STREAM_BRIDGE, t_index, n_samples, col0=col0)
    b = np.vstack([np.zeros((1, n_samples)), np.cumsum(xi * np.sqrt(dt), axis=0)])
    frac = (np.arange(t_index + 1) / t_index)[:, None]
    return b - frac * b[-1]


def bridge_paths(mu, nu, t_index: int, dt: float, seed: int, n_samples: int, col0: int = 0) -> np.ndarray:
    """Bridge ensemble from mu to nu over t_index steps; endpoints exact."""
    if t_index <= 0:
        raise DomainError("bridge needs t > 0")
    frac = (np.arange(t_index + 1) / t_index)[:, None]
    line = np.asarray(mu) + (np.asarray(nu) - np.asarray(mu)) * frac
    return line + bridge_pinned_noise(seed, t_index, n_samples, dt, col0=col0)


def sample_bridge(mu: float, nu: float, t_index: int, dt: float, seed: int, sample: int = 0):
    omega = bridge_paths(mu, nu, t_index, dt, seed, 1, col0=sample)[:, 0]
    return omega


def bridge_functional_values(omega: np.ndarray, noise: NoiseRealization, m: Mollifier) -> np.ndarray:
    """M(t) = sum_{j < t_index} dB_j(zeta_k(omega_j - .)) for column paths."""
    t_index = omega.shape[0] - 1
    if t_index > noise.time_grid.n_steps:
        raise GridMismatchError("bridge extends past the noise realization")
    total = np.zeros(omega.shape[1])
    for j in range(t_index):
        total += kernel_projection(noise, m, j, omega[j])
    return total


def bridge_functional(omega: np.ndarray, noise: NoiseRealization, m: Mollifier) -> float:
    return float(bridge_functional_values(omega[:, None], noise, m)[0])


def bridge_sample(
    mu: float, nu: float, t_index: int, noise: NoiseRealization, m: Mollifier,
    seed: int, sample: int = 0,
) -> BridgeSample:
    """One pinned path plus its noise functional against a frozen realization."""
    omega = sample_bridge(mu, nu, t_index, noise.time_grid.dt, seed, sample=sample)
    return BridgeSample(
        mu=mu, nu=nu, t_index=t_index, omega=omega,
        functional=bridge_functional(omega, noise, m),
    )


# ---------------------------------------------------------------------------
# Feynman-Kac evaluation of u


@lru_cache(maxsize=8)
def _hermgauss(n: int):
    nodes, weights = np.polynomial.hermite.hermgauss(n)
    return nodes, weights / np.sqrt(np.pi)


def feynman_kac_u(
    t_index: int,
    x: float,
    noise: NoiseRealization,
    m: Mollifier,
    driver: Optional[DriverPath],
    u0_fn: Callable,
    n_bridges: int,
    seed: int,
    gh_nodes: int = 64,
    gh_span: float = 6.0,
) -> tuple[float, float]:
    """Bridge Monte Carlo estimate of u(t, x) with its standard error.

    Outer integral over the endpoint y with Gaussian weight G_t(gamma - y)
    (Gauss-Hermite nodes truncated at gamma +- gh_span*sqrt(t)); inner Monte
    Carlo over bridges y -> gamma of exp(-M(t) - C_k(0) t / 2), times u0(y).
    The total bridge budget is split across endpoint nodes proportionally to
    their weights, with independent bridge columns per node.
    """
    if n_bridges < 100:
        raise McUndersamplingError(f"n_bridges={n_bridges} is too small; need >= 100")
    tg = noise.time_grid
    dt = tg.dt
    t = t_index * dt
    if driver is not None and driver.time_grid != tg:
        raise GridMismatchError("driver and noise time grids differ")
    gamma = x if driver is None else x + (driver.w.values[-1] - driver.w.values[t_index])
    if t_index == 0:
        return float(u0_fn(gamma)), 0.0
    L = noise.space_grid.half_length
    span = gh_span * np.sqrt(t)
    if abs(gamma) + span > L:
        raise QuadratureWindowError(
            f"endpoint window gamma +- {span:.3g} leaves the box [-{L}, {L}]"
        )
    eta, wbar = _hermgauss(gh_nodes)
    keep = np.abs(np.sqrt(2.0 * t) * eta) <= span
    eta, wbar = eta[keep], wbar[keep]
    y_nodes = gamma - np.sqrt(2.0 * t) * eta
    # every kept node gets sampled (>= 2 draws) or its weight would bias the
    # outer quadrature; the remaining budget goes out proportionally to weight
    alloc = np.maximum(2, np.floor(n_bridges * wbar / wbar.sum()).astype(int))
    short = n_bridges - alloc.sum()
    if short > 0:
        top = np.argsort(wbar)[::-1][:short]
        alloc[top] += 1
    half_c0_t = 0.5 * m.ck0 * t

    used = alloc > 0
    offsets = np.concatenate([[0], np.cumsum(alloc[used])])
    total = int(offsets[-1])
    frac = (np.arange(t_index + 1) / t_index)[:, None]
    mu_row = np.repeat(y_nodes[used], alloc[used])[None, :]
    line = mu_row + (gamma - mu_row) * frac
    pinned = bridge_pinned_noise(seed, t_index, total, dt)
    omega = line + pinned
    mvals = bridge_functional_values(omega, noise, m)
    weights_exp = np.exp(-mvals - half_c0_t)

    estimate = 0.0
    variance = 0.0
    u0_used = np.asarray(u0_fn(y_nodes[used]), dtype=np.float64)
    wbar_used = wbar[used]
    for q in range(used.sum()):
        sl = weights_exp[offsets[q]:offsets[q + 1]]
        coef = wbar_used[q] * float(u0_used[q])
        estimate += coef * sl.mean()
        if len(sl) > 1:
            variance += coef * coef * sl.var(ddof=1) / len(sl)
    if estimate <= 0.0:
        raise McUndersamplingError(
            "bridge estimate of u is nonpositive; increase n_bridges"
        )
    return float(estimate), float(np.sqrt(variance))


# ---------------------------------------------------------------------------
# assembled solutions


@dataclass(frozen=True)
class FbsdeSolution:
    """Discrete (y, z) and Hopf-Cole pair (u, v) at one base point."""

    x: float
    route: str
    y: DiscretePath
    z: DiscretePath
    u: DiscretePath
    v: DiscretePath
    u_se: np.ndarray = field(repr=False)

    @property
    def time_grid(self) -> TimeGrid:
        return self.y.time_grid


class GridRouteEvaluator:
    """Periodic-spline evaluation of psi frames and of z = d/dx(-log psi).

    Splines are built lazily per frame and cached; evaluation positions wrap
    into the box first.  The z field is differentiated spectrally by default:
    the O(dx^2) bias of the central stencil is invisible pathwise but shows up
    as a spurious conditional mean once ~1e7 residual increments are pooled
    (z_gradient="central" keeps the stencil variant).
    """

    def __init__(self, she: SheState, z_gradient: str = "spectral"):
        self.she = she
        self.grid = she.trajectory.space_grid
        self.z_gradient = z_gradient
        self._psi_splines = {}
        self._z_splines = {}

    def _knots(self):
        g = self.grid
        return np.concatenate([g.x, [g.half_length]])

    def _spline(self, cache, j, values):
        sp = cache.get(j)
        if sp is None:
            closed = np.concatenate([values, values[:1]])
            sp = CubicSpline(self._knots(), closed, bc_type="periodic")
            cache[j] = sp
        return sp

    def psi_at(self, j: int, positions):
        vals = self.she.trajectory.values[j]
        sp = self._spline(self._psi_splines, j, vals)
        return sp(self.grid.wrap(positions))

    def z_at(self, j: int, positions):
        h = -np.log(self.she.trajectory.values[j])
        if self.z_gradient == "spectral":
            g = self.grid
            zgrid = np.fft.irfft(1j * g.wavenumbers * np.fft.rfft(h), n=g.n_points)
        else:
            zgrid = dx_central_values(h, self.grid.dx)
        sp = self._spline(self._z_splines, j, zgrid)
        return sp(self.grid.wrap(positions))


def solve_fbsde(
    x: float,
    noise: NoiseRealization,
    m: Mollifier,
    driver: DriverPath,
    ic: InitialCondition,
    route: str = "grid",
    psi: Optional[SheState] = None,
    n_bridges: int = 2000,
    bridge_seed: int = 0,
    gh_nodes: int = 64,
    z_offset: Optional[float] = None,
) -> FbsdeSolution:
    """Assemble (y, z, u, v) on [0, S] at base point x.

    route="grid": u(t_j) = psi_{t_j}(X(t_j)) from the heat-equation solver on
    the same frozen noise; z via central differences of -log psi.
    route="bridge": u(t_j) by feynman_kac_u; z by a symmetric finite
    difference of -log u with offset 1/(4k) (below the mollification scale),
    reusing the same bridge noise columns on both sides.
    """
    tg = noise.time_grid
    if driver.time_grid != tg:
        raise GridMismatchError("driver and noise time grids differ")
    char = backward_characteristic(x, driver)
    n = tg.n_steps
    u = np.empty(n + 1)
    z = np.empty(n + 1)
    se = np.zeros(n + 1)
    if route == "grid":
        if psi is None:
            from .noise import pair_with_mollifier

            psi = she_solve(ic.u0, pair_with_mollifier(noise, m), m)
        ev = GridRouteEvaluator(psi)
        xs = char.x_path.values
        for j in range(n + 1):
            u[j] = ev.psi_at(j, xs[j])
            z[j] = ev.z_at(j, xs[j])
    elif route == "bridge":
        delta = z_offset if z_offset is not None else 1.0 / (4.0 * m.k)
        u0_fn = ic.h0_fn
        if u0_fn is None:
            raise DomainError("bridge route needs a pointwise initial condition")
        exp_u0 = lambda y: np.exp(-np.asarray(u0_fn(y), dtype=np.float64))
        for j in range(n + 1):
            u[j], se[j] = feynman_kac_u(
                j, x, noise, m, driver, exp_u0, n_bridges, bridge_seed, gh_nodes=gh_nodes
            )
            up, _ = feynman_kac_u(
                j, x + delta, noise, m, driver, exp_u0, n_bridges, bridge_seed, gh_nodes=gh_nodes
            )
            um, _ = feynman_kac_u(
                j, x - delta, noise, m, driver, exp_u0, n_bridges, bridge_seed, gh_nodes=gh_nodes
            )
            z[j] = (-np.log(up) + np.log(um)) / (2.0 * delta)
    else:
        raise DomainError(f"unknown route {route!r}")
    if np.any(u <= 0):
        raise McUndersamplingError("u estimate nonpositive; increase n_bridges")
    y = -np.log(u)
    v = u * z
    return FbsdeSolution(
        x=x,
        route=route,
        y=DiscretePath(tg, y),
        z=DiscretePath(tg, z),
        u=DiscretePath(tg, u),
        v=DiscretePath(tg, v),
        u_se=se,
    )


# ---------------------------------------------------------------------------
# residual of the doubly backward equation


def dbsde_residual_values(
    y: np.ndarray, z: np.ndarray, z_func: np.ndarray, w: np.ndarray, c0: float, dt: float
) -> np.ndarray:
    """R(t) = y(t) - [ y(0) - 1/2 int (z^2 - c0) dr + Z(t) - int z (backward) dW ].

    Batched over leading axes; all inputs sampled on the same node set.
    """
    drift = np.zeros_like(y)
    drift[..., 1:] = np.cumsum(0.5 * (z[..., :-1] ** 2 - c0) * dt, axis=-1)
    bw = backward_integral_values(z, w)
    return y - (y[..., :1] - drift + z_func - bw)


def dbsde_residual(sol: FbsdeSolution, zf: ZFunctional, driver: DriverPath, c0: float) -> DiscretePath:
    tg = sol.time_grid
    if zf.z_path.time_grid != tg or driver.time_grid != tg:
        raise GridMismatchError("solution, Z and driver must share one time grid")
    res = dbsde_residual_values(
        sol.y.values, sol.z.values, zf.z_path.values, driver.w.values, c0, tg.dt
    )
    return DiscretePath(tg, res)


@dataclass(frozen=True)
class ConditionalMeanStat:
    """OLS of residual increments on F_t-measurable covariates.

    Coefficients within 3 standard errors of zero realize the
    martingale-difference property of the residual.
    """

    names: list
    coefficients: np.ndarray
    standard_errors: np.ndarray

    @property
    def t_stats(self) -> np.ndarray:
        return self.coefficients / self.standard_errors

    @property
    def within_3se(self) -> bool:
        return bool(np.all(np.abs(self.t_stats) <= 3.0))


def dbsde_ensemble_stat(
    noise: NoiseRealization,
    m: Mollifier,
    x: float,
    ic: InitialCondition,
    n_drivers: int,
    driver_seed: int,
    psi: Optional[SheState] = None,
) -> tuple[ConditionalMeanStat, np.ndarray]:
    """Frozen noise, an ensemble of drivers: regress residual increments on
    (1, z, X) and return the fit plus the per-driver residual path matrix."""
    tg = noise.time_grid
    if psi is None:
        from .noise import pair_with_mollifier

        psi = she_solve(ic.u0, pair_with_mollifier(noise, m), m)
    ev = GridRouteEvaluator(psi)
    w = driver_matrix(driver_seed, tg, n_drivers)  # (n+1, E)
    xs = characteristic_values(x, w)
    dz = z_increments(noise, m, xs)  # (n, E)
    zfun = np.vstack([np.zeros((1, n_drivers)), np.cumsum(dz, axis=0)])
    n = tg.n_steps
    u = np.empty((n + 1, n_drivers))
    zed = np.empty((n + 1, n_drivers))
    for j in range(n + 1):
        u[j] = ev.psi_at(j, xs[j])
        zed[j] = ev.z_at(j, xs[j])
    y = -np.log(u)
    res = dbsde_residual_values(y.T, zed.T, zfun.T, w.T, m.ck0, tg.dt)  # (E, n+1)
    dres = np.diff(res, axis=-1).ravel()
    design = np.column_stack(
        [np.ones(dres.size), zed[:-1].T.ravel(), xs[:-1].T.ravel()]
    )
    coef, _, _, _ = np.linalg.lstsq(design, dres, rcond=None)
    fitted = design @ coef
    dof = max(dres.size - design.shape[1], 1)
    sigma2 = float(np.sum((dres - fitted) ** 2) / dof)
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return (
        ConditionalMeanStat(
            names=["intercept", "z", "X"],
            coefficients=coef,
            standard_errors=np.sqrt(np.diag(cov)),
        ),
        res,
    )


# ---------------------------------------------------------------------------
# martingale decomposition along the reversed axis


@dataclass(frozen=True)
class DecompositionRecord:
    """Discrete M, E, J, U, V per reversed time node over a driver ensemble."""

    time_grid: TimeGrid
    u_mat: np.ndarray
    e_mat: np.ndarray
    m_mat: np.ndarray
    j_mat: np.ndarray
    v_mat: np.ndarray
    residual: np.ndarray  # per-driver residual of the reversed evolution
    residual_rms: float


def decomposition_check(
    noise: NoiseRealization,
    m: Mollifier,
    x: float,
    ic: InitialCondition,
    n_drivers: int,
    driver_seed: int,
    psi: Optional[SheState] = None,
) -> DecompositionRecord:
    """Build U = E * M on the reversed axis and test its backward evolution.

    E(t) = exp(-Z~(t) + C_k(0) t / 2) is recomputed from the Z functional;
    M = U / E; J is recovered per step by least squares of dM on dW~ with a
    state-feature dictionary (the constructive shadow of the martingale
    representation); V = E * J.  The residual is the defect of

        U(t) = U(S) + int_t^S U (backward) dZ~  -  int_t^S V dW~ .
    """
    tg = noise.time_grid
    n = tg.n_steps
    dt = tg.dt
    if psi is None:
        from .noise import pair_with_mollifier

        psi = she_solve(ic.u0, pair_with_mollifier(noise, m), m)
    ev = GridRouteEvaluator(psi)
    w = driver_matrix(driver_seed, tg, n_drivers)
    xs = characteristic_values(x, w)
    dz = z_increments(noise, m, xs)
    zfun = np.vstack([np.zeros((1, n_drivers)), np.cumsum(dz, axis=0)])

    u = np.empty((n + 1, n_drivers))
    dpsi = np.empty((n + 1, n_drivers))
    for j in range(n + 1):
        u[j] = ev.psi_at(j, xs[j])
        dpsi[j] = u[j] * (-ev.z_at(j, xs[j]))  # d/dx psi at X(t_j)

    # reversed axis tau = S - t: index r corresponds to forward index n - r
    rev = slice(None, None, -1)
    tau = tg.times
    u_rev = u[rev]
    x_rev = xs[rev]
    dpsi_rev = dpsi[rev]
    z_rev = time_reverse_values(zfun.T).T  # Z~(tau) = Z(S-tau) - Z(S)
    w_rev = time_reverse_values(w.T).T
    e_mat = np.exp(-z_rev + 0.5 * m.ck0 * tau[:, None])
    m_mat = u_rev / e_mat

    # J per step by cross-sectional least squares of dM on dW~ * features
    j_mat = np.zeros((n + 1, n_drivers))
    dm = np.diff(m_mat, axis=0)
    dw = np.diff(w_rev, axis=0)
    for r in range(n):
        feats = np.column_stack(
            [
                np.ones(n_drivers),
                x_rev[r],
                -dpsi_rev[r] / e_mat[r],  # closed-form candidate integrand
            ]
        )
        design = feats * dw[r][:, None]
        coef, _, _, _ = np.linalg.lstsq(design, dm[r], rcond=None)
        j_mat[r] = feats @ coef
    j_mat[n] = j_mat[n - 1]
    v_mat = e_mat * j_mat

    # residual of the reversed evolution between each tau node and S
    bw_full = backward_integral_values(u_rev.T, z_rev.T).T
    fw_full = forward_integral_values(v_mat.T, w_rev.T).T
    tail_bw = bw_full[-1] - bw_full
    tail_fw = fw_full[-1] - fw_full
    residual = u_rev - (u_rev[-1] + tail_bw - tail_fw)
    rms = float(np.sqrt(np.mean(residual ** 2)))
    return DecompositionRecord(
        time_grid=tg,
        u_mat=u_rev,
        e_mat=e_mat,
        m_mat=m_mat,
        j_mat=j_mat,
        v_mat=v_mat,
        residual=residual,
        residual_rms=rms,
    )


def moment_probe(u_matrix: np.ndarray, p: float) -> tuple[float, float]:
    """Ensemble estimate of E sup_t u(t)^p from column trajectories, and the
    relative change between the half and full ensemble (heavy-tail flag)."""
    sup_p = np.max(u_matrix, axis=0) ** p
    full = float(sup_p.mean())
    half = float(sup_p[: max(1, len(sup_p) // 2)].mean())
    return full, abs(full - half) / max(abs(full), 1e-300)
