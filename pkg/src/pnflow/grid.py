"""Uniform 1D grids, fields with exterior Dirichlet constants, and the
space-time weight used to normalize corrector decay."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import InvalidArgument, OutOfDomain


@dataclass(frozen=True)
class Grid:
    """Uniform grid of n nodes on [-L, L]; h = 2L/(n-1)."""

    half_width: float
    n: int

    def __post_init__(self):
        if self.half_width <= 0:
            raise InvalidArgument("half_width must be positive")
        if self.n < 16:
            raise InvalidArgument("need at least 16 nodes")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n)


@dataclass
class Field:
    """Sampled function on a grid, constant outside [-L, L]."""

    grid: Grid
    values: np.ndarray
    left_exterior: float = 0.0
    right_exterior: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise InvalidArgument("values length must match grid")
        if not (np.all(np.isfinite(self.values))
                and np.isfinite(self.left_exterior)
                and np.isfinite(self.right_exterior)):
            raise InvalidArgument("field values must be finite")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.left_exterior, self.right_exterior)


@dataclass(frozen=True)
class WeightPhi:
    s: float

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise InvalidArgument("s must lie strictly inside (0, 1)")


def phi(weight: WeightPhi, x, t: float):
    """Decay envelope min{|x|^(-2s), t^(-2s/(1+2s))} for t >= 1."""
    if t < 1.0:
        raise InvalidArgument("phi requires t >= 1")
    s = weight.s
    x = np.asarray(x, dtype=float)
    tb = t ** (-2.0 * s / (1.0 + 2.0 * s))
    with np.errstate(divide="ignore"):
        xb = np.where(x == 0.0, np.inf, np.abs(x) ** (-2.0 * s))
    out = np.minimum(xb, tb)
    return out if out.ndim else float(out)


def anorm(psi: Field, t: float, weight: WeightPhi) -> float:
    """Max over nodes of |psi| / Phi(x, t)."""
    w = phi(weight, psi.grid.nodes, t)
    return float(np.max(np.abs(psi.values) / w))


def integrate(f: Field) -> float:
    """Composite Simpson integral over [-L, L]; exterior constants excluded."""
    return float(simpson(f.values, x=f.grid.nodes))


def interp(f: Field, x):
    """Cubic interpolation of the field at |x| <= L."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > f.grid.half_width):
        raise OutOfDomain("interpolation point outside the grid")
    spl = CubicSpline(f.grid.nodes, f.values)
    out = spl(x_arr)
    return out if out.ndim else float(out)


def write_field_csv(path, f: Field, value_name: str = "value"):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# left={f.left_exterior!r}, right={f.right_exterior!r}\n")
        fh.write(f"x,{value_name}\n")
        for x, v in zip(f.grid.nodes, f.values):
            fh.write(f"{float(x)!r},{float(v)!r}\n")


def read_field_csv(path) -> Field:
    with open(path) as fh:
        meta = fh.readline().strip()
        assert meta.startswith("#")
        parts = dict(p.strip().split("=") for p in meta[1:].split(","))
        fh.readline()  # header
        rows = [line.strip().split(",") for line in fh if line.strip()]
    x = np.array([float(r[0]) for r in rows])
    v = np.array([float(r[1]) for r in rows])
    grid = Grid(half_width=float(x[-1]), n=len(x))
    return Field(grid, v, float(parts["left"]), float(parts["right"]))
