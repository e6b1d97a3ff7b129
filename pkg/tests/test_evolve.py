import numpy as np
import pytest

from pnflow.errors import InvalidArgument, StepFailure
from pnflow.evolve import (EvolveConfig, Semigroup, barrier_harness,
                           comparison_harness, dislocation_datum, reaction_rhs,
                           run, run_dislocations, step, zero_rhs)
from pnflow.grid import Field, Grid, integrate
from pnflow.potential import lipschitz_wprime


@pytest.fixture(scope="module")
def small_grid():
    return Grid(200.0, 2**13)


@pytest.fixture(scope="module")
def lay(layer_cache):
    return layer_cache(0.5, L=200.0, n=2**13)


class TestStep:
    def test_integer_plateau_is_equilibrium(self, cosine, small_grid):
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                           t0=0.0, t1=1.0)
        u = Field(small_grid, np.full(small_grid.n, 2.0), 2.0, 2.0)
        for scheme in ("etd_picard", "imex_spectral"):
            cfg.scheme = scheme
            out = step(u, cfg)
            assert np.max(np.abs(out.values - 2.0)) <= 1e-12

    def test_default_dt_rule(self, cosine, small_grid):
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=small_grid)
        lip = lipschitz_wprime(cosine)
        from pnflow.fracop import symbol_constant

        expected = min(0.25 / lip,
                       0.5 * small_grid.h / symbol_constant(0.5).value)
        assert cfg.resolved_dt() == pytest.approx(expected)

    def test_picard_failure_on_huge_dt(self, cosine, small_grid):
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                           dt=1.0, picard_max_iters=5)
        u = Field(small_grid, np.sin(small_grid.nodes / 10.0), 0.0, 0.0)
        with pytest.raises(StepFailure):
            step(u, cfg)

    def test_config_validation(self, cosine, small_grid):
        with pytest.raises(InvalidArgument):
            EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                         t0=1.0, t1=0.5)
        with pytest.raises(InvalidArgument):
            EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                         scheme="leapfrog")


class TestStationaryLayer:
    def test_layer_barely_drifts(self, cosine, small_grid, lay):
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                           t0=0.0, t1=2.0)
        res = run(lay.field(), cfg, snapshot_times=[2.0])
        drift = np.max(np.abs(res.last().values - lay.w))
        assert drift <= 1e-3

    def test_schemes_agree_to_first_order(self, cosine, small_grid, lay):
        u0 = Field(small_grid,
                   lay.w + 0.1 * np.exp(-(small_grid.nodes / 8.0) ** 2),
                   0.0, 1.0)
        outs = {}
        for scheme in ("etd_picard", "imex_spectral"):
            cfg = EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                               t0=0.0, t1=0.5, dt=0.005, scheme=scheme)
            outs[scheme] = run(u0, cfg, snapshot_times=[0.5]).last().values
        gap = np.max(np.abs(outs["etd_picard"] - outs["imex_spectral"]))
        assert gap <= 0.05 * 0.005 / 1e-2  # O(dt) margin
        assert gap > 0.0


def test_dt_refinement_self_convergence(cosine, layer_cache):
    g = Grid(100.0, 2**12)
    lay = layer_cache(0.5, L=100.0, n=2**12)
    u0 = Field(g, lay.w + 0.2 * np.exp(-(g.nodes / 6.0) ** 2), 0.0, 1.0)

    def solve(dt):
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=g, t0=0.0, t1=1.0,
                           dt=dt, scheme="etd_picard", picard_tol=1e-11,
                           picard_max_iters=300)
        return run(u0, cfg, snapshot_times=[1.0]).last().values

    # the midpoint-resolved Duhamel quadrature is second order: halving dt
    # divides the t=1 error by about four (Richardson self-convergence)
    ref = solve(0.000625)
    errs = [np.max(np.abs(solve(dt) - ref)) for dt in (0.02, 0.01, 0.005)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(3.4 <= r <= 4.6 for r in ratios), (errs, ratios)


class TestHeatFlowInvariants:
    def test_mass_conserved_wide_window(self, cosine):
        # window and horizon sized so the physical tail escape past the
        # window is itself below the tolerance
        g = Grid(4000.0, 2**13)
        bump = Field(g, np.exp(-(g.nodes / 2.0) ** 2), 0.0, 0.0)
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=g, t0=0.0, t1=1e-6,
                           dt=1e-6, scheme="etd_picard")
        res = run(bump, cfg, g=zero_rhs, snapshot_times=[1e-6])
        assert abs(integrate(res.last()) - integrate(bump)) <= 1e-8

    def test_mass_loss_matches_tail_escape(self, cosine):
        # over longer horizons the window mass decreases by no more than
        # the analytic kernel-tail budget, and never increases
        from pnflow.heatkernel import tail_mass
        from pnflow.fracop import symbol_constant

        g = Grid(1000.0, 2**13)
        bump = Field(g, np.exp(-(g.nodes / 2.0) ** 2), 0.0, 0.0)
        m0 = integrate(bump)
        t1 = 1e-3
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=g, t0=0.0, t1=t1,
                           dt=2e-4, scheme="etd_picard")
        res = run(bump, cfg, g=zero_rhs, snapshot_times=[t1])
        loss = m0 - integrate(res.last())
        budget = 2.0 * m0 * tail_mass(0.5, symbol_constant(0.5).value * t1,
                                      g.half_width - 10.0)
        assert 0.0 <= loss <= 3.0 * budget

    def test_extremum_principles(self, cosine):
        g = Grid(100.0, 2**12)
        rng = np.random.default_rng(7)
        vals = np.exp(-(g.nodes / 5.0) ** 2) * (1.0 + 0.3 * np.sin(g.nodes))
        u = Field(g, vals, 0.0, 0.0)
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=g, t0=0.0, t1=0.5,
                           dt=0.01)
        sups, infs = [vals.max()], [vals.min()]
        res = run(u, cfg, g=zero_rhs,
                  watch=lambda t, f: (sups.append(f.values.max()),
                                      infs.append(f.values.min())))
        assert all(s2 <= s1 + 1e-12 for s1, s2 in zip(sups, sups[1:]))
        assert all(i2 >= i1 - 1e-12 for i1, i2 in zip(infs, infs[1:]))

    def test_odd_symmetry_preserved(self, cosine, small_grid, lay):
        u0 = dislocation_datum(lay, np.array([-4.0, 4.0]), small_grid)
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                           t0=0.0, t1=1.0)
        res = run(u0, cfg, snapshot_times=[1.0])
        v = res.last().values - 1.0
        assert np.max(np.abs(v + v[::-1])) <= 1e-8


class TestDislocations:
    def test_single_reduces_to_stationary(self, cosine, small_grid, lay):
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                           t0=1.0, t1=3.0)
        res = run_dislocations(np.array([0.0]), cfg, lay, n_snapshots=3)
        assert np.max(np.abs(res.last().values - lay.w)) <= 1e-3

    def test_spacing_grows(self, cosine, small_grid, lay):
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                           t0=1.0, t1=20.0, scheme="imex_spectral")
        res = run_dislocations(np.array([-5.0, 5.0]), cfg, lay, n_snapshots=7)
        from pnflow.tracker import positions_by_level

        gaps = [np.diff(positions_by_level(f, 2))[0] for f in res.snapshots]
        assert all(b > a for a, b in zip(gaps, gaps[1:]))

    def test_spacing_guard(self, cosine, small_grid, lay):
        with pytest.raises(InvalidArgument):
            dislocation_datum(lay, np.array([0.0, small_grid.h]), small_grid)


class TestComparison:
    def test_layer_vs_bumped(self, cosine, small_grid, lay):
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                           t0=0.0, t1=2.0)
        hi = Field(small_grid,
                   lay.w + 0.1 * np.exp(-(small_grid.nodes / 4.0) ** 2),
                   0.0, 1.0)
        rep = comparison_harness(lay.field(), hi, cfg)
        assert rep.passed

    def test_equal_data_stay_equal(self, cosine, small_grid, lay):
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                           t0=0.0, t1=1.0)
        rep = comparison_harness(lay.field(), lay.field(), cfg)
        assert abs(rep.min_margin) <= 1e-12

    def test_translates_stay_ordered(self, cosine, small_grid, lay):
        x = small_grid.nodes
        lo = Field(small_grid, lay.profile(x), 0.0, 1.0)
        hi = Field(small_grid, lay.profile(x + 1.0), 0.0, 1.0)
        cfg = EvolveConfig(s=0.5, potential=cosine, grid=small_grid,
                           t0=0.0, t1=1.0)
        rep = comparison_harness(lo, hi, cfg)
        assert rep.passed


def test_barrier_harness(cosine):
    g = Grid(200.0, 2**12)
    cfg = EvolveConfig(s=0.5, potential=cosine, grid=g, dt=0.02,
                       scheme="imex_spectral")
    rep = barrier_harness(0.5, 1.0, 1.0, cfg)
    assert rep.positive_decay
    assert rep.c_decay <= 20.0
    assert rep.positive_forced
    assert np.isfinite(rep.c_forced)
    # the decay-problem datum equals the weight itself, so C starts near 1
    assert rep.c_decay >= 0.9
