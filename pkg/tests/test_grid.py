import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnflow.errors import InvalidArgument, OutOfDomain
from pnflow.grid import (Field, Grid, WeightPhi, anorm, integrate, interp,
                         phi, read_field_csv, write_field_csv)


class TestPhi:
    def test_space_branch(self):
        assert phi(WeightPhi(0.5), 2.0, 1.0) == pytest.approx(0.5)

    def test_time_branch_at_origin(self):
        assert phi(WeightPhi(0.5), 0.0, 8.0) == pytest.approx(8.0**-0.5)

    def test_quarter(self):
        assert phi(WeightPhi(0.25), 16.0, 1.0) == pytest.approx(0.25)

    def test_t_below_one_rejected(self):
        with pytest.raises(InvalidArgument):
            phi(WeightPhi(0.5), 1.0, 0.5)

    def test_s_range(self):
        with pytest.raises(InvalidArgument):
            WeightPhi(1.0)


class TestAnorm:
    def test_zero_field(self):
        g = Grid(10.0, 64)
        assert anorm(Field(g, np.zeros(g.n)), 2.0, WeightPhi(0.5)) == 0.0

    def test_phi_itself(self):
        g = Grid(10.0, 129)
        w = WeightPhi(0.5)
        vals = phi(w, g.nodes, 3.0)
        assert anorm(Field(g, vals), 3.0, w) == pytest.approx(1.0, abs=1e-12)

    def test_half_scaled(self):
        g = Grid(4.0, 257)
        w = WeightPhi(0.3)
        with np.errstate(divide="ignore"):
            decay = np.abs(g.nodes) ** (-2 * 0.3)
        vals = 0.5 * np.minimum(1.0, decay)
        # at t=1 the weight is min(|x|^{-2s}, 1), so the ratio is 1/2
        assert anorm(Field(g, vals), 1.0, w) == pytest.approx(0.5, abs=1e-10)

    @given(c=st.floats(-100.0, 100.0))
    @settings(max_examples=40)
    def test_homogeneity(self, c):
        g = Grid(5.0, 65)
        w = WeightPhi(0.5)
        base = np.sin(g.nodes)
        a1 = anorm(Field(g, c * base), 2.0, w)
        a0 = anorm(Field(g, base), 2.0, w)
        assert a1 == pytest.approx(abs(c) * a0, rel=1e-12, abs=1e-12)


class TestIntegrate:
    def test_constant(self):
        g = Grid(1.0, 101)
        assert integrate(Field(g, np.ones(g.n))) == pytest.approx(2.0)

    def test_odd(self):
        g = Grid(3.0, 301)
        assert integrate(Field(g, g.nodes)) == pytest.approx(0.0, abs=1e-14)

    def test_lorentzian(self):
        g = Grid(1000.0, 2**17 + 1)
        val = integrate(Field(g, 1.0 / (1.0 + g.nodes**2)))
        assert val == pytest.approx(np.pi, abs=3e-3)

    def test_exact_for_cubics(self):
        g = Grid(2.0, 1001)
        x = g.nodes
        val = integrate(Field(g, 1.0 + x + x**2 + x**3))
        exact = 2.0 * 2.0 + 2.0 * 8.0 / 3.0
        assert val == pytest.approx(exact, rel=1e-12)

    def test_linearity(self):
        g = Grid(2.0, 65)
        f1, f2 = np.sin(g.nodes), np.cos(g.nodes)
        lhs = integrate(Field(g, 2.0 * f1 - 3.0 * f2))
        rhs = 2.0 * integrate(Field(g, f1)) - 3.0 * integrate(Field(g, f2))
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_interp_out_of_domain():
    g = Grid(1.0, 33)
    with pytest.raises(OutOfDomain):
        interp(Field(g, np.ones(g.n)), 1.5)


def test_interp_cubic_accuracy():
    g = Grid(2.0, 257)
    f = Field(g, np.sin(g.nodes))
    xs = np.linspace(-1.9, 1.9, 17)
    assert np.max(np.abs(interp(f, xs) - np.sin(xs))) < 1e-8


def test_csv_roundtrip(tmp_path):
    g = Grid(3.0, 33)
    f = Field(g, np.cos(g.nodes), -1.5, 2.5)
    path = tmp_path / "field.csv"
    write_field_csv(path, f)
    back = read_field_csv(path)
    assert np.array_equal(back.values, f.values)
    assert back.left_exterior == f.left_exterior
    assert back.right_exterior == f.right_exterior
    assert back.grid.n == g.n and back.grid.half_width == g.half_width


def test_grid_invariants():
    g = Grid(400.0, 2**14)
    assert g.h * (g.n - 1) == pytest.approx(2 * g.half_width, rel=1e-15)
    assert np.all(np.diff(g.nodes) > 0)
    with pytest.raises(InvalidArgument):
        Grid(400.0, 8)
