import numpy as np
import pytest

from pnflow.asymlab import (build_auxiliary, expansion_check,
                            fraclap_pointwise, half_line_mass,
                            layer_profile_exact, omega, omega_ratio_scan)
from pnflow.errors import InvalidArgument


class TestOmegaFamily:
    def test_parity(self):
        x = np.linspace(0.1, 5.0, 11)
        for s in (0.25, 0.5, 0.75):
            assert np.allclose(omega(1, s, x), omega(1, s, -x))
            assert np.allclose(omega(2, s, x), -omega(2, s, -x))
            assert np.allclose(omega(3, s, x), -omega(3, s, -x))
        assert omega(3, 0.5, 0.0) == 0.0

    @pytest.mark.parametrize("which", [1, 2, 3])
    @pytest.mark.parametrize("s", [0.3, 0.6])
    def test_derivatives_match_fd(self, which, s):
        x = np.linspace(-3.0, 3.0, 41)
        h = 1e-6
        fd1 = (omega(which, s, x + h) - omega(which, s, x - h)) / (2 * h)
        assert np.allclose(fd1, omega(which, s, x, 1), atol=1e-7)
        fd2 = (omega(which, s, x + h) - 2 * omega(which, s, x)
               + omega(which, s, x - h)) / h**2
        assert np.allclose(fd2, omega(which, s, x, 2), atol=1e-3)

    def test_bad_index(self):
        with pytest.raises(InvalidArgument):
            omega(4, 0.5, 1.0)


def test_half_line_mass_half():
    assert half_line_mass(0.5) == pytest.approx(np.pi / 2.0, rel=1e-12)


def test_fraclap_odd_at_origin():
    val = fraclap_pointwise(lambda t: omega(3, 0.5, t), 0.5, 0.0,
                            fpp=lambda t: omega(3, 0.5, t, 2))
    assert abs(val) <= 1e-10


class TestRatioScans:
    def test_omega1_limit_is_minus_full_mass(self):
        scan = omega_ratio_scan(1, 0.5, (1e-2, 1e2), 30)
        assert abs(scan.ratio[-1] + np.pi) <= 0.01 * np.pi
        assert np.isfinite(scan.c_bound)

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
    def test_bounds_finite(self, s):
        for which in (1, 2, 3):
            scan = omega_ratio_scan(which, s, (1e-2, 1e2), 24)
            assert scan.c_bound <= 50.0

    def test_lambda1_equals_lambda2_at_half(self):
        # V'''(0) = 0 for s = 1/2 forces the two correction constants to
        # agree (both extrapolate to zero)
        l1 = omega_ratio_scan(1, 0.5, (1e-1, 3e2), 40).lambda_fit
        l2 = omega_ratio_scan(2, 0.5, (1e-1, 3e2), 40).lambda_fit
        assert abs(l1 - l2) <= 0.02


class TestAuxiliary:
    @pytest.fixture(scope="class")
    def aux(self):
        return build_auxiliary(0.5, 4.0 * np.pi**2)

    def test_omega_at_origin(self):
        assert layer_profile_exact(0.5, 0.0) == pytest.approx(0.5)

    def test_omega_monotone(self):
        x = np.linspace(-30.0, 30.0, 301)
        assert np.all(np.diff(layer_profile_exact(0.5, x)) > 0)

    def test_vpp0_is_twice_mass(self, aux):
        assert abs(aux.vpp0 - np.pi) <= 0.01 * np.pi

    def test_v_even(self, aux):
        r = np.linspace(0.05, 0.45, 17)
        assert np.max(np.abs(aux.v(r) - aux.v(1.0 - r))) <= 1e-8

    def test_v_endpoint_values(self, aux):
        assert abs(aux.v_vals[0]) <= 1e-5
        assert abs(aux.v_vals[-1]) <= 1e-5

    def test_scaled_residual(self, aux):
        xs = np.array([0.5, 2.0, 10.0, 40.0])
        assert np.max(aux.residual_scaled(xs)) <= 1e-3

    def test_scale_matches_target(self, aux):
        # a = (W''(0)/(2A))^{1/(2s)} = 4 pi for the cosine well at s = 1/2
        assert aux.scale_a == pytest.approx(4.0 * np.pi, rel=1e-10)

    def test_rejects_bad_target(self):
        with pytest.raises(InvalidArgument):
            build_auxiliary(0.5, -1.0)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_expansion_pointwise_bound(s):
    xs = np.concatenate([np.linspace(2.0, 10.0, 9), [20.0, 50.0, 100.0]])
    margins = expansion_check(s, np.concatenate([xs, -xs]))
    assert np.all(margins >= 0.0)
