import numpy as np
import pytest
from scipy.integrate import quad

from kpzlab.errors import DomainError, GridMismatchError
from kpzlab.grid import (
    Field,
    FieldTrajectory,
    SpaceGrid,
    TimeGrid,
    constant_field,
    dx_central,
    heat_semigroup,
    inner_product,
)
from kpzlab.mollifier import mollifier_new, sample_on_grid


def indicator(grid, idx):
    v = np.zeros(grid.n_points)
    v[idx] = 1.0
    return Field(grid, v)


class TestSpaceGrid:
    def test_dx_times_n_is_2l(self):
        g = SpaceGrid(2.0, 8)
        assert g.dx == 0.5
        assert g.dx * g.n_points == 2.0 * g.half_length

    def test_rejects_tiny_grids(self):
        with pytest.raises(DomainError):
            SpaceGrid(2.0, 4)
        with pytest.raises(DomainError):
            SpaceGrid(-1.0, 64)

    def test_wrap_and_index(self, grid256):
        g = grid256
        assert g.index_of(0.0) == g.n_points // 2
        assert g.index_of(g.half_length * 2 + 0.25) == g.index_of(0.25)
        assert np.isclose(g.wrap(g.half_length + 1.0), -g.half_length + 1.0)


class TestTimeGrid:
    def test_final_node_is_horizon_exactly(self):
        for n in (3, 7, 100, 999):
            tg = TimeGrid(1.0, n)
            assert tg.times[-1] == 1.0
            assert tg.times[0] == 0.0
            assert np.all(np.diff(tg.times) > 0)

    def test_refine(self):
        tg = TimeGrid(0.5, 10).refine(4)
        assert tg.n_steps == 40 and tg.horizon == 0.5


class TestField:
    def test_rejects_wrong_length_and_nonfinite(self, grid256):
        with pytest.raises(GridMismatchError):
            Field(grid256, np.zeros(7))
        bad = np.zeros(grid256.n_points)
        bad[3] = np.inf
        with pytest.raises(DomainError):
            Field(grid256, bad)

    def test_values_frozen(self, grid256):
        f = constant_field(grid256, 1.0)
        with pytest.raises(ValueError):
            f.values[0] = 2.0

    def test_trajectory_frame_count(self, grid256):
        tg = TimeGrid(1.0, 5)
        traj = FieldTrajectory(grid256, tg, np.zeros((6, grid256.n_points)))
        assert len(traj) == 6
        with pytest.raises(GridMismatchError):
            FieldTrajectory(grid256, tg, np.zeros((5, grid256.n_points)))


class TestInnerProduct:
    def test_single_cell_riemann_sum(self):
        g = SpaceGrid(2.0, 8)  # dx = 0.5
        f = indicator(g, 3)
        assert inner_product(f, f) == pytest.approx(0.5, abs=0)

    def test_disjoint_supports(self, grid256):
        assert inner_product(indicator(grid256, 10), indicator(grid256, 200)) == 0.0

    def test_matches_quadrature_for_base_kernel(self):
        # fine grid so the Riemann sum meets the adaptive-quadrature oracle
        g = SpaceGrid(2.0, 4096)
        m = mollifier_new(1)
        f = sample_on_grid(m, g, 0.0)
        oracle, _ = quad(lambda x: (m.norm_const * np.exp(-1.0 / (1.0 - x * x))) ** 2,
                         -1.0, 1.0, epsabs=1e-13, epsrel=1e-13)
        assert inner_product(f, f) == pytest.approx(oracle, rel=1e-6)

    def test_symmetric_bilinear(self, grid256, rng_np):
        f = Field(grid256, rng_np.normal(size=grid256.n_points))
        g = Field(grid256, rng_np.normal(size=grid256.n_points))
        h = Field(grid256, rng_np.normal(size=grid256.n_points))
        assert inner_product(f, g) == pytest.approx(inner_product(g, f), abs=1e-12)
        lhs = inner_product(Field(grid256, 2.0 * f.values + h.values), g)
        assert lhs == pytest.approx(2.0 * inner_product(f, g) + inner_product(h, g), abs=1e-10)

    def test_grid_mismatch(self, grid256, grid512):
        with pytest.raises(GridMismatchError):
            inner_product(constant_field(grid256, 1.0), constant_field(grid512, 1.0))


class TestHeatSemigroup:
    def test_fixes_constants(self, grid256):
        out = heat_semigroup(constant_field(grid256, 3.25), 2.0)
        np.testing.assert_allclose(out.values, 3.25, atol=1e-13)

    def test_identity_at_zero(self, grid256, rng_np):
        f = Field(grid256, rng_np.normal(size=grid256.n_points))
        np.testing.assert_array_equal(heat_semigroup(f, 0.0).values, f.values)

    def test_gaussian_widens_by_t(self):
        # L = 16 >= 8 sigma for sigma <= 2
        g = SpaceGrid(16.0, 1024)
        for sig in (1.0, 2.0):
            f = Field(g, np.exp(-g.x ** 2 / (2 * sig ** 2)) / np.sqrt(2 * np.pi * sig ** 2))
            out = heat_semigroup(f, 1.0)
            target = np.exp(-g.x ** 2 / (2 * (sig ** 2 + 1))) / np.sqrt(2 * np.pi * (sig ** 2 + 1))
            assert np.max(np.abs(out.values - target)) < 1e-4

    def test_semigroup_law(self, grid256, rng_np):
        f = heat_semigroup(Field(grid256, rng_np.normal(size=grid256.n_points)), 0.05)
        a = heat_semigroup(heat_semigroup(f, 0.3), 0.7)
        b = heat_semigroup(f, 1.0)
        np.testing.assert_allclose(a.values, b.values, atol=1e-12)

    def test_preserves_mean(self, grid256, rng_np):
        f = Field(grid256, rng_np.normal(size=grid256.n_points))
        out = heat_semigroup(f, 0.7)
        assert out.values.mean() == pytest.approx(f.values.mean(), abs=1e-13)

    def test_negative_time_rejected(self, grid256):
        with pytest.raises(DomainError):
            heat_semigroup(constant_field(grid256, 1.0), -0.1)


class TestDxCentral:
    def test_constant_to_zero(self, grid256):
        np.testing.assert_array_equal(dx_central(constant_field(grid256, 4.0)).values, 0.0)

    def test_sine_derivative_second_order(self):
        errs = []
        for n in (256, 512):
            g = SpaceGrid(16.0, n)
            f = Field(g, np.sin(2 * np.pi * g.x / (2 * g.half_length)))
            d = dx_central(f).values
            exact = (2 * np.pi / (2 * g.half_length)) * np.cos(2 * np.pi * g.x / (2 * g.half_length))
            errs.append(np.max(np.abs(d - exact)))
        order = np.log2(errs[0] / errs[1])
        assert order >= 1.9

    def test_sawtooth_wrap(self, grid256):
        f = Field(grid256, grid256.x.copy())  # one wrap discontinuity
        d = dx_central(f).values
        assert np.all(np.isfinite(d))
        # interior slope is 1; the two wrap-adjacent stencils see the jump
        assert np.allclose(d[1:-1], 1.0)
        assert d[0] != pytest.approx(1.0)

    def test_smooth_after_heat_refines_at_order_two(self, rng_np):
        errs = []
        for n in (256, 512):
            g = SpaceGrid(16.0, n)
            f = heat_semigroup(Field(g, np.cos(np.pi * g.x / g.half_length)), 0.5)
            d = dx_central(f).values
            exact = np.fft.irfft(1j * g.wavenumbers * np.fft.rfft(f.values), n=g.n_points)
            errs.append(np.max(np.abs(d - exact)))
        assert np.log2(errs[0] / errs[1]) >= 1.9
