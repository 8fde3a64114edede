import numpy as np
import pytest

from kpzlab.errors import DomainError, InstabilityError, PositivityError
from kpzlab.grid import Field, SpaceGrid, TimeGrid, heat_semigroup
from kpzlab.mollifier import mollifier_new
from kpzlab.noise import coarsen, pair_with_mollifier, sample_noise, zero_noise
from kpzlab.solvers import (
    brownian_initial,
    cosine_initial,
    cross_validate,
    flat_initial,
    hopf_cole,
    kpz_solve,
    she_ensemble_final,
    she_solve,
    zero_noise_gap,
)


@pytest.fixture(scope="module")
def setup():
    g = SpaceGrid(16.0, 256)
    tg = TimeGrid(0.5, 200)
    m = mollifier_new(2)
    return g, tg, m


class TestInitialConditions:
    def test_flat(self, setup):
        g, _, _ = setup
        ic = flat_initial(g)
        assert np.all(ic.h0.values == 0)
        assert np.all(ic.u0.values == 1)

    def test_cosine_smooth_and_periodic(self, setup):
        g, _, _ = setup
        ic = cosine_initial(g, 0.5)
        assert ic.h0.values[0] == pytest.approx(-0.5)
        assert abs(ic.h0.values.mean()) < 1e-12
        assert np.allclose(ic.h0_fn(g.x), ic.h0.values)

    def test_brownian_pinned_periodic_reproducible(self, setup):
        g, _, _ = setup
        a = brownian_initial(g, 7)
        b = brownian_initial(g, 7)
        np.testing.assert_array_equal(a.h0.values, b.h0.values)
        assert a.h0.values[g.index_of(0.0)] == 0.0
        assert a.a_p_probe == 0.5 and a.b_p_probe == 2.0
        c = brownian_initial(g, 8)
        assert not np.allclose(a.h0.values, c.h0.values)

    def test_brownian_local_roughness(self, setup):
        # increments have variance ~ dx (Brownian geometry)
        g, _, _ = setup
        ic = brownian_initial(g, 21)
        incs = np.diff(ic.h0.values)
        assert abs(incs.var() / g.dx - 1.0) < 0.3


class TestSheSolve:
    def test_zero_noise_is_pure_heat_flow(self, setup):
        g, tg, m = setup
        ic = cosine_initial(g, 0.8)
        out = she_solve(ic.u0, None, m, time_grid=tg)
        target = heat_semigroup(ic.u0, tg.horizon)
        np.testing.assert_allclose(out.final.values, target.values, atol=1e-12)

    def test_zero_xi_realization_keeps_compensator(self, setup):
        g, tg, m = setup
        ic = flat_initial(g)
        out = she_solve(ic.u0, pair_with_mollifier(zero_noise(g, tg), m), m)
        np.testing.assert_allclose(
            out.final.values, np.exp(-0.5 * m.ck0 * tg.horizon), rtol=1e-12)

    def test_requires_positive_initial_data(self, setup):
        g, tg, m = setup
        bad = Field(g, np.ones(g.n_points) - 2.0)
        with pytest.raises(DomainError):
            she_solve(bad, None, m, time_grid=tg)

    def test_positivity_along_noisy_run(self, setup):
        g, tg, m = setup
        sm = pair_with_mollifier(sample_noise(3, g, tg), m)
        out = she_solve(flat_initial(g).u0, sm, m)
        assert np.all(out.trajectory.values > 0)

    def test_one_step_unit_mean(self, setup):
        # E[psi_1(x)] = 1 for u0 = 1: exponential-martingale mean, MC check
        g, _, m = setup
        tg1 = TimeGrid(0.01, 1)
        n_mc = 4000
        vals = np.empty(n_mc)
        for i in range(n_mc):
            sm = pair_with_mollifier(sample_noise(40_000 + i, g, tg1), m)
            out = she_solve(flat_initial(g).u0, sm, m)
            vals[i] = out.final.values[g.index_of(0.0)]
        se = vals.std(ddof=1) / np.sqrt(n_mc)
        assert abs(vals.mean() - 1.0) < 3 * se

    def test_mean_preservation_under_heat_flow(self, setup):
        # E[psi_t] = G_t * u0 within 3 SE (smaller MC panel than acceptance)
        g, _, m = setup
        tg = TimeGrid(0.5, 50)
        ic = cosine_initial(g, 0.5)
        ix = g.index_of(1.0)
        members = np.arange(1500, dtype=np.uint64) + 70_000
        finals = she_ensemble_final(members, ic.u0.values, m, g, tg)
        target = heat_semigroup(ic.u0, 0.5).values[ix]
        vals = finals[:, ix]
        se = vals.std(ddof=1) / np.sqrt(len(vals))
        assert abs(vals.mean() - target) < 3 * se

    def test_euler_scheme_available(self, setup):
        g, tg, m = setup
        sm = pair_with_mollifier(sample_noise(5, g, tg), m)
        exp_run = she_solve(flat_initial(g).u0, sm, m, scheme="exponential")
        eul_run = she_solve(flat_initial(g).u0, sm, m, scheme="euler")
        # same Ito limit: fields close but not identical
        gap = np.max(np.abs(exp_run.final.values - eul_run.final.values))
        assert 0 < gap < 0.15

    def test_ensemble_rows_match_single_runs(self, setup):
        g, _, m = setup
        tg = TimeGrid(0.2, 40)
        ic = cosine_initial(g, 0.3)
        seeds = np.array([11, 12, 13], dtype=np.uint64)
        batch = she_ensemble_final(seeds, ic.u0.values, m, g, tg)
        for s, row in zip(seeds, batch):
            sm = pair_with_mollifier(sample_noise(int(s), g, tg), m)
            single = she_solve(ic.u0, sm, m).final.values
            np.testing.assert_allclose(row, single, atol=1e-12)


class TestKpzSolve:
    def test_flat_zero_noise_drift_exact(self, setup):
        g, tg, m = setup
        ic = flat_initial(g)
        for noise in (None, pair_with_mollifier(zero_noise(g, tg), m)):
            out = kpz_solve(ic.h0, noise, m, time_grid=tg)
            target = 0.5 * m.ck0 * tg.horizon
            np.testing.assert_allclose(out.final.values, target, atol=1e-10)
            assert zero_noise_gap(m, tg.horizon) == pytest.approx(target)

    def test_zero_noise_self_convergence(self, setup):
        # smooth data, no noise: sup error vs a 4x finer run halves with dt
        g, _, m = setup
        ic = cosine_initial(g, 0.8)
        ref = kpz_solve(ic.h0, None, m, time_grid=TimeGrid(0.5, 3200)).final.values
        errs = []
        for n in (200, 400):
            out = kpz_solve(ic.h0, None, m, time_grid=TimeGrid(0.5, n)).final.values
            errs.append(np.max(np.abs(out - ref)))
        assert errs[0] / errs[1] > 1.8

    @pytest.mark.parametrize("gradient", ["spectral", "central"])
    def test_gradient_variants_run(self, setup, gradient):
        g, tg, m = setup
        sm = pair_with_mollifier(sample_noise(6, g, tg), m)
        out = kpz_solve(flat_initial(g).h0, sm, m, gradient=gradient)
        assert np.all(np.isfinite(out.final.values))

    def test_instability_reports_step(self, setup):
        g, _, m = setup
        # reckless dt for an O(1/dx) gradient: the quadratic term blows up
        rough = Field(g, 500.0 * np.sign(np.sin(40 * g.x)))
        with pytest.raises(InstabilityError) as err:
            kpz_solve(rough, None, m, time_grid=TimeGrid(1.0, 4), gradient="central")
        assert err.value.step_index is not None


class TestHopfCole:
    def test_unit_field_maps_to_zero(self, setup):
        g, tg, m = setup
        out = she_solve(flat_initial(g).u0, None, m, time_grid=tg)
        h = hopf_cole(out)
        np.testing.assert_allclose(h.final.values, 0.0, atol=1e-12)

    def test_constant_field(self, setup):
        g, tg, m = setup
        c = 1.7
        state = she_solve(Field(g, np.full(g.n_points, np.exp(-c))), None, m, time_grid=tg)
        np.testing.assert_allclose(hopf_cole(state).final.values, c, atol=1e-12)

    def test_round_trip_exact(self, setup):
        g, tg, m = setup
        sm = pair_with_mollifier(sample_noise(9, g, tg), m)
        psi = she_solve(flat_initial(g).u0, sm, m)
        back = np.exp(-hopf_cole(psi).trajectory.values)
        np.testing.assert_allclose(back, psi.trajectory.values, rtol=1e-12)

    def test_positivity_guard(self, setup):
        g, tg, m = setup
        psi = she_solve(flat_initial(g).u0, None, m, time_grid=tg)
        object.__setattr__(psi.trajectory, "values", psi.trajectory.values.copy())
        psi.trajectory.values[3, 5] = -1.0
        with pytest.raises(PositivityError):
            hopf_cole(psi)


class TestCrossValidate:
    def test_gap_decreases_on_shared_noise(self, setup):
        g, _, m = setup
        ic = flat_initial(g)
        master = sample_noise(77, g, TimeGrid(0.5, 4000))
        rep = cross_validate(ic.h0, master, m, factors=(4, 2, 1), window=4.0)
        gaps = [lv.sup_gap for lv in rep.levels]
        assert rep.monotone, gaps
        assert rep.levels[0].dt == pytest.approx(4 * rep.levels[-1].dt)
        assert min(rep.observed_orders) > 0.3

    def test_pathwise_partnership_full_noise(self, setup):
        # kpz_solve vs -log(she_solve) agree to the time-stepping error
        g, _, m = setup
        tg = TimeGrid(0.5, 2000)
        sm = pair_with_mollifier(sample_noise(13, g, tg), m)
        ic = flat_initial(g)
        direct = kpz_solve(ic.h0, sm, m)
        partner = hopf_cole(she_solve(ic.u0, sm, m))
        window = np.abs(g.x) <= 4.0
        gap = np.max(np.abs(direct.final.values - partner.final.values)[window])
        assert gap < 0.05

    def test_zero_noise_requires_realization(self, setup):
        g, _, m = setup
        with pytest.raises(DomainError):
            cross_validate(flat_initial(g).h0, None, m)

    def test_coarsen_divisibility_guard(self, setup):
        g, _, m = setup
        master = sample_noise(1, g, TimeGrid(0.5, 30))
        with pytest.raises(DomainError):
            coarsen(master, 4)


class TestDomainTruncation:
    """Truncation error is controlled empirically: doubling L at fixed dx
    must not move anything inside the observation window."""

    def test_deterministic_flow_insensitive_to_box_doubling(self):
        m = mollifier_new(2)
        vals = {}
        for L, n in ((16.0, 512), (32.0, 1024)):
            g = SpaceGrid(L, n)
            ic = Field(g, np.exp(-2.0 * np.exp(-g.x ** 2)))  # in [e^-2, 1]
            out = she_solve(ic, None, m, time_grid=TimeGrid(1.0, 100))
            window = np.abs(g.x) <= 4.0
            vals[L] = out.final.values[window]
        np.testing.assert_allclose(vals[16.0], vals[32.0], atol=1e-10)

    def test_zero_noise_fk_value_insensitive(self):
        from kpzlab.fbsde import feynman_kac_u
        from kpzlab.noise import zero_noise as zn

        m = mollifier_new(2)
        flat = lambda y: np.ones_like(np.asarray(y, dtype=np.float64))
        out = []
        for L, n in ((16.0, 512), (32.0, 1024)):
            g = SpaceGrid(L, n)
            tg = TimeGrid(1.0, 50)
            est, _ = feynman_kac_u(50, 1.0, zn(g, tg), m, None, flat, 200, 3)
            out.append(est)
        assert out[0] == pytest.approx(out[1], rel=1e-9)
