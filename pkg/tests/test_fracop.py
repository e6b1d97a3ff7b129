import numpy as np
import pytest

from conftest import explicit_layer
from pnflow.errors import InvalidArgument
from pnflow.fracop import (apply_quadrature, apply_reference_spectral,
                           apply_spectral, symbol_constant)
from pnflow.grid import Field, Grid


class TestSymbolConstant:
    def test_half_is_pi(self):
        sc = symbol_constant(0.5)
        assert sc.value == pytest.approx(np.pi, abs=1e-12)
        assert sc.mismatch <= 1e-10

    def test_quarter(self):
        sc = symbol_constant(0.25)
        assert sc.value == pytest.approx(5.01326, abs=1e-5)

    @pytest.mark.parametrize("s", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    def test_quadrature_matches_closed_form(self, s):
        assert symbol_constant(s).mismatch <= 1e-10

    def test_invalid_s(self):
        with pytest.raises(InvalidArgument):
            symbol_constant(1.0)


class TestQuadratureBackend:
    def test_constants_annihilated(self):
        g = Grid(50.0, 2048)
        f = Field(g, np.full(g.n, 3.0), 3.0, 3.0)
        out = apply_quadrature(f, 0.5)
        assert np.max(np.abs(out.values)) <= 1e-10

    def test_explicit_layer_value(self):
        # (-Delta)^{1/2} w = 16 pi^2 x / (1 + 16 pi^2 x^2); at x = 1/(4 pi)
        # the value is 2 pi
        g = Grid(80.0, 2**20 + 1)
        f = Field(g, explicit_layer(g.nodes), 0.0, 1.0)
        out = apply_quadrature(f, 0.5)
        i = int(np.argmin(np.abs(g.nodes - 1.0 / (4.0 * np.pi))))
        exact = 16 * np.pi**2 * g.nodes[i] / (1 + 16 * np.pi**2 * g.nodes[i] ** 2)
        assert abs(out.values[i] - exact) <= 1e-3
        assert abs(exact - 2.0 * np.pi) < 2e-4

    def test_linearity(self):
        g = Grid(30.0, 1024)
        a = np.exp(-(g.nodes / 3.0) ** 2)
        b = np.exp(-((g.nodes - 2.0) / 4.0) ** 2)
        lhs = apply_quadrature(Field(g, 2.0 * a - 0.5 * b, 0.0, 0.0), 0.6).values
        rhs = (2.0 * apply_quadrature(Field(g, a, 0.0, 0.0), 0.6).values
               - 0.5 * apply_quadrature(Field(g, b, 0.0, 0.0), 0.6).values)
        assert np.allclose(lhs, rhs, atol=1e-12)

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
    def test_parity_preservation(self, s):
        g = Grid(30.0, 1025)
        even = apply_quadrature(Field(g, np.exp(-g.nodes**2), 0.0, 0.0), s).values
        assert np.max(np.abs(even - even[::-1])) <= 1e-11
        odd_in = g.nodes * np.exp(-g.nodes**2)
        odd = apply_quadrature(Field(g, odd_in, 0.0, 0.0), s).values
        assert np.max(np.abs(odd + odd[::-1])) <= 1e-11

    def test_scaling_relation(self):
        # (-Delta)^s f(a.) (x) = a^{2s} ((-Delta)^s f)(ax)
        s, a = 0.4, 2.0
        g1 = Grid(40.0, 2**13 + 1)
        g2 = Grid(20.0, 2**13 + 1)
        f = lambda x: np.exp(-(x / 4.0) ** 2)
        base = apply_quadrature(Field(g1, f(g1.nodes), 0.0, 0.0), s).values
        scaled = apply_quadrature(Field(g2, f(a * g2.nodes), 0.0, 0.0), s).values
        # compare at shared points ax for x in g2 core
        idx2 = np.arange(0, g2.n, 64)
        xs = g2.nodes[idx2]
        keep = np.abs(xs) <= 8.0
        from scipy.interpolate import CubicSpline

        base_at = CubicSpline(g1.nodes, base)(a * xs[keep])
        assert np.max(np.abs(scaled[idx2][keep] - a ** (2 * s) * base_at)) < 5e-4


class TestSpectralBackend:
    def test_constant_sequence(self):
        out = apply_spectral(np.full(128, 2.5), 10.0, 0.3)
        assert np.max(np.abs(out)) <= 1e-12

    def test_single_mode(self):
        P, n = 10.0, 256
        x = np.arange(n) * P / n
        v = np.cos(2 * np.pi * x / P)
        out = apply_spectral(v, P, 0.5)
        pred = symbol_constant(0.5).value * (2 * np.pi / P) * v
        assert np.max(np.abs(out - pred)) <= 1e-10

    def test_translation_equivariance(self):
        P, n = 20.0, 512
        x = np.arange(n) * P / n
        v = np.exp(np.sin(2 * np.pi * x / P))
        out_shifted = apply_spectral(np.roll(v, 3), P, 0.7)
        assert np.allclose(out_shifted, np.roll(apply_spectral(v, P, 0.7), 3),
                           atol=1e-12)

    def test_length_guard(self):
        with pytest.raises(InvalidArgument):
            apply_spectral(np.ones(3), 1.0, 0.5)


def test_backend_agreement_on_bump():
    s = 0.5
    g = Grid(30.0, 60001)
    bump = lambda x: np.exp(-(x / 3.0) ** 2)
    quadv = apply_quadrature(Field(g, bump(g.nodes), 0.0, 0.0), s).values
    # spectral route on a much larger period, sampled on the same lattice
    period = 32 * g.half_width
    m = int(round(period / g.h))
    xs = -period / 2 + np.arange(m) * g.h
    spec = apply_spectral(bump(xs), period, s)
    j0 = int(round((-g.half_width + period / 2) / g.h))
    core = np.abs(g.nodes) <= 6.0
    assert np.max(np.abs(quadv[core] - spec[j0: j0 + g.n][core])) <= 1e-4


def test_reference_spectral_cross_check():
    g = Grid(120.0, 2**14)
    f = Field(g, explicit_layer(g.nodes), 0.0, 1.0)
    ref = apply_reference_spectral(f, 0.5)
    exact = 16 * np.pi**2 * g.nodes / (1 + 16 * np.pi**2 * g.nodes**2)
    core = np.abs(g.nodes) <= 30.0
    assert np.max(np.abs(ref.values - exact)[core]) <= 1e-4
