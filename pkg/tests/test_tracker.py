import numpy as np
import pytest

from pnflow.dynsys import beta_solve
from pnflow.errors import InvalidWindow, TrackLoss
from pnflow.grid import Field, Grid
from pnflow.tracker import (DiagnosticsRecord, calibrate_time_origin,
                            diagnostics, fit_xi_orthogonal,
                            positions_by_level, rate_report, track_history)


@pytest.fixture(scope="module")
def lay(layer_cache):
    return layer_cache(0.5, L=200.0, n=2**13)


@pytest.fixture(scope="module")
def grid(lay):
    return lay.grid


def pair_field(lay, grid, a, b):
    vals = lay.profile(grid.nodes - a) + lay.profile(grid.nodes - b)
    return Field(grid, vals, 0.0, 2.0)


class TestPositionsByLevel:
    def test_single_layer_at_origin(self, lay, grid):
        u = Field(grid, lay.w.copy(), 0.0, 1.0)
        assert abs(positions_by_level(u, 1)[0]) <= grid.h

    def test_superposition(self, lay, grid):
        u = pair_field(lay, grid, -3.0, 3.0)
        pos = positions_by_level(u, 2)
        assert np.max(np.abs(pos - [-3.0, 3.0])) <= 0.05

    def test_track_loss_on_bad_field(self, lay, grid):
        vals = lay.w * 0.4  # never reaches the half level
        with pytest.raises(TrackLoss):
            positions_by_level(Field(grid, vals, 0.0, 1.0), 1)


class TestOrthogonalFit:
    def test_exact_superposition_recovered(self, lay, grid):
        u = pair_field(lay, grid, -5.5, 4.0)
        xi, psi, ok = fit_xi_orthogonal(u, lay, np.array([-5.2, 4.4]))
        assert ok
        assert np.max(np.abs(xi - [-5.5, 4.0])) <= 1e-8
        assert np.max(np.abs(psi.values)) <= 1e-8

    def test_even_bump_barely_moves_xi(self, lay, grid):
        bump = 0.01 * np.exp(-grid.nodes**2)
        u = Field(grid, pair_field(lay, grid, -5.0, 5.0).values + bump,
                  0.0, 2.0)
        xi, psi, ok = fit_xi_orthogonal(u, lay, np.array([-5.0, 5.0]))
        assert ok
        assert np.max(np.abs(xi - [-5.0, 5.0])) <= 1e-4

    def test_extractors_agree(self, lay, grid):
        u = pair_field(lay, grid, -6.0, 6.0)
        lvl = positions_by_level(u, 2)
        xi, _, _ = fit_xi_orthogonal(u, lay, lvl)
        assert np.max(np.abs(xi - lvl)) <= 0.1

    def test_orthogonality_residual(self, lay, grid):
        from scipy.integrate import simpson

        u = pair_field(lay, grid, -4.0, 4.4)
        u.values += 0.02 * np.exp(-((grid.nodes - 1.0) / 3.0) ** 2)
        xi, psi, ok = fit_xi_orthogonal(u, lay, positions_by_level(u, 2))
        assert ok
        wp_l1 = simpson(np.abs(lay.wp), x=grid.nodes)
        bound = 1e-6 * np.max(np.abs(u.values)) * wp_l1
        for p in xi:
            val = simpson(psi.values * lay.profile(grid.nodes - p, 1),
                          x=grid.nodes)
            assert abs(val) <= bound


class TestDiagnostics:
    @pytest.fixture(scope="class")
    def rec(self, lay, grid):
        beta = beta_solve(2, 0.5, lay.gamma)
        u = pair_field(lay, grid, -6.0, 6.0)
        return diagnostics(u, lay, beta, 10.0, 0.5, lay.gamma,
                           np.array([-0.02, 0.02]), keep_psi=True)

    def test_diagonal_is_inverse_gamma(self, rec, lay):
        assert np.allclose(np.diag(rec.a_matrix), 1.0 / lay.gamma, atol=2e-3)

    def test_a_symmetric(self, rec):
        assert np.allclose(rec.a_matrix, rec.a_matrix.T)

    def test_m_differs_by_psi_wpp_diagonal(self, rec):
        off = rec.a_matrix - rec.m_matrix
        assert np.allclose(off - np.diag(np.diag(off)), 0.0)

    def test_exact_z_gives_zero_nonlinearity(self, rec):
        assert rec.sup_n_phi <= 1e-10

    def test_antisymmetric_xi_for_odd_data(self, rec):
        assert abs(rec.xi[0] + rec.xi[1]) <= 2 * 1e-6

    def test_c_solves_system(self, rec):
        assert np.allclose(rec.a_matrix @ rec.c, rec.b, atol=1e-12)


class TestRateReport:
    def test_requires_span(self):
        recs = [DiagnosticsRecord(t=float(t), xi=np.array([-1.0, 1.0]),
                                  h=np.zeros(2), anorm_psi=0.1,
                                  a_matrix=np.eye(2), m_matrix=np.eye(2),
                                  b=np.zeros(2), c=np.zeros(2), d=np.zeros(2),
                                  sup_e1_phi=0.0, sup_e2_phi=0.0,
                                  sup_e0_phi=np.zeros(2), sup_n_phi=0.0,
                                  offdiag_a_max=0.0, orthogonality=0.0)
                for t in (1, 2, 3)]
        with pytest.raises(InvalidWindow):
            rate_report(recs, 0.5)

    def test_synthetic_self_similar_history(self):
        # records following the exact self-similar law must fit exponent 1/2
        beta = beta_solve(2, 0.5, 0.5)
        times = np.geomspace(1.0, 1e3, 25)
        recs = []
        for t in times:
            xi = beta.beta * t**0.5
            recs.append(DiagnosticsRecord(
                t=float(t), xi=xi, h=xi - beta.beta * t**0.5,
                anorm_psi=0.05 + 0.001 * np.sin(t),
                a_matrix=2 * np.eye(2), m_matrix=2 * np.eye(2),
                b=np.zeros(2), c=np.zeros(2), d=np.zeros(2),
                sup_e1_phi=0.0, sup_e2_phi=0.0, sup_e0_phi=np.zeros(2),
                sup_n_phi=0.0, offdiag_a_max=0.0, orthogonality=0.0))
        rep = rate_report(recs, 0.5)
        assert rep.spacing_exponent == pytest.approx(0.5, abs=1e-6)
        assert rep.anorm_max <= 0.06


def test_calibrate_time_origin():
    beta = beta_solve(2, 0.5, 0.5)
    times = np.geomspace(2.0, 200.0, 12)
    shift = 3.0
    xi = beta.beta[None, :] * (times[:, None] + shift) ** 0.5
    t0 = calibrate_time_origin(times, xi, beta, 0.5)
    assert t0 == pytest.approx(shift, abs=1e-9)


def test_track_history_on_synthetic_motion(lay, grid):
    beta = beta_solve(2, 0.5, lay.gamma)
    times = np.geomspace(50.0, 200.0, 5)
    snaps = []
    for t in times:
        xi = beta.beta * t**0.5
        snaps.append((t, pair_field(lay, grid, xi[0], xi[1])))
    recs = track_history(snaps, lay, beta, 0.5, lay.gamma)
    fitted = np.array([r.xi for r in recs])
    expected = beta.beta[None, :] * times[:, None] ** 0.5
    assert np.max(np.abs(fitted - expected)) <= 1e-6
    assert np.max(np.abs([r.h for r in recs])) <= 1e-6
