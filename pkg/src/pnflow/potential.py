"""1-periodic even multi-well potentials and their derivatives up to 4th order.

The default model is W(r) = 1 - cos(2*pi*r). Tabulated potentials are
interpolated with a periodic quintic spline so that the fourth derivative
exists and is continuous.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import InvalidArgument, InvalidSpec

TWO_PI = 2.0 * np.pi

MIN_TABULATED_SAMPLES = 12


@dataclass(frozen=True)
class PotentialSpec:
    """Specification of the periodic potential.

    kind: "cosine" for W(r) = 1 - cos(2*pi*r), or "tabulated" with samples
    of W on [0, 1)."""

    kind: str = "cosine"
    sample_r: Optional[np.ndarray] = None
    sample_w: Optional[np.ndarray] = None
    _spline_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("cosine", "tabulated"):
            raise InvalidSpec(f"unknown potential kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.sample_r is None or self.sample_w is None:
                raise InvalidSpec("tabulated potential requires samples")
            if len(self.sample_r) < MIN_TABULATED_SAMPLES:
                raise InvalidSpec(
                    f"tabulated potential needs >= {MIN_TABULATED_SAMPLES} samples"
                )

    def _spline(self):
        if "spl" not in self._spline_cache:
            r = np.asarray(self.sample_r, dtype=float)
            w = np.asarray(self.sample_w, dtype=float)
            order = np.argsort(r)
            r, w = r[order], w[order]
            # close the period so the spline sees W(1) = W(0)
            rr = np.concatenate([r, [r[0] + 1.0]])
            ww = np.concatenate([w, [w[0]]])
            self._spline_cache["spl"] = make_interp_spline(
                rr, ww, k=5, bc_type="periodic"
            )
        return self._spline_cache["spl"]


def cosine_potential() -> PotentialSpec:
    return PotentialSpec(kind="cosine")


def tabulated_potential(r, w) -> PotentialSpec:
    return PotentialSpec(
        kind="tabulated",
        sample_r=np.asarray(r, dtype=float),
        sample_w=np.asarray(w, dtype=float),
    )


def eval_potential(spec: PotentialSpec, r, order: int = 0):
    """Evaluate the order-th derivative of W at r (scalar or array).

    Periodic in r for every order; order must lie in 0..4."""
    if order not in (0, 1, 2, 3, 4):
        raise InvalidArgument(f"derivative order {order} outside 0..4")
    r = np.asarray(r, dtype=float)
    if spec.kind == "cosine":
        a = TWO_PI * r
        if order == 0:
            out = 1.0 - np.cos(a)
        elif order == 1:
            out = TWO_PI * np.sin(a)
        elif order == 2:
            out = TWO_PI**2 * np.cos(a)
        elif order == 3:
            out = -(TWO_PI**3) * np.sin(a)
        else:
            out = -(TWO_PI**4) * np.cos(a)
    else:
        spl = spec._spline()
        base = spec.sample_r.min()
        rr = np.mod(r - base, 1.0) + base
        out = spl(rr, nu=order)
    return out if out.ndim else float(out)


@dataclass
class PotentialCheck:
    name: str
    passed: bool
    worst_r: float
    worst_value: float


@dataclass
class PotentialReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self):
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{c.name}: {status} (worst at r={c.worst_r:.6g}, value={c.worst_value:.3e})")
        return "\n".join(lines)


def validate(spec: PotentialSpec, tol: float = 1e-8) -> PotentialReport:
    """Check the structural requirements on W; returns a pass/fail report.

    Checks periodicity, evenness about 1/2, positivity on (0,1), the
    double-zero at r=0, nondegeneracy W''(0) > 0, smoothness across r=0,
    and consistency of W' with centered differences of W."""
    checks = []
    r = np.linspace(0.0, 1.0, 1001, endpoint=False)[1:]

    def record(name, err_arr, r_arr, bound):
        i = int(np.argmax(np.abs(err_arr)))
        checks.append(
            PotentialCheck(name, bool(np.abs(err_arr[i]) <= bound), float(r_arr[i]), float(err_arr[i]))
        )

    w = eval_potential(spec, r)
    per_err = np.array([np.max(np.abs(eval_potential(spec, r + k) - w)) for k in (-2, -1, 1, 2)])
    checks.append(PotentialCheck("periodicity", bool(per_err.max() <= tol), 0.0, float(per_err.max())))

    record("evenness", w - eval_potential(spec, 1.0 - r), r, tol)

    i_min = int(np.argmin(w))
    checks.append(PotentialCheck("positivity", bool(w.min() > 0.0), float(r[i_min]), float(w.min())))

    w0 = float(eval_potential(spec, 0.0))
    wp0 = float(eval_potential(spec, 0.0, 1))
    checks.append(PotentialCheck("W(0)=0", bool(abs(w0) <= tol), 0.0, w0))
    checks.append(PotentialCheck("W'(0)=0", bool(abs(wp0) <= tol), 0.0, wp0))

    wpp0 = float(eval_potential(spec, 0.0, 2))
    checks.append(PotentialCheck("W''(0)>0", bool(wpp0 > 0.0), 0.0, wpp0))

    # the centered second difference across r=0 must match the one-sided
    # interior ones (a kink in W' at the period seam shows up here); for
    # tabulated potentials this uses the raw samples, not the interpolant
    if spec.kind == "tabulated":
        order_idx = np.argsort(np.mod(spec.sample_r, 1.0))
        ws = np.asarray(spec.sample_w, dtype=float)[order_idx]
        hs = 1.0 / len(ws)
        centered = (ws[1] - 2 * ws[0] + ws[-1]) / hs**2
        right = (ws[2] - 2 * ws[1] + ws[0]) / hs**2
        left = (ws[0] - 2 * ws[-1] + ws[-2]) / hs**2
    else:
        hs = 1e-3
        centered = (eval_potential(spec, hs) - 2 * w0 + eval_potential(spec, -hs)) / hs**2
        right = (eval_potential(spec, 2 * hs) - 2 * eval_potential(spec, hs) + w0) / hs**2
        left = (eval_potential(spec, -2 * hs) - 2 * eval_potential(spec, -hs) + w0) / hs**2
    mismatch = float(abs(centered - 0.5 * (right + left)))
    scale = max(abs(wpp0), 1.0)
    checks.append(PotentialCheck("smoothness at 0", bool(mismatch <= 0.05 * scale + tol), 0.0, mismatch))

    hd = 1e-4
    fd = (eval_potential(spec, r + hd) - eval_potential(spec, r - hd)) / (2 * hd)
    record("W' vs centered FD", fd - eval_potential(spec, r, 1), r, 1e-5 * max(1.0, float(np.max(np.abs(fd)))))

    return PotentialReport(checks)


def lipschitz_wprime(spec: PotentialSpec) -> float:
    """Global Lipschitz constant of W' (sup of |W''| over one period)."""
    r = np.linspace(0.0, 1.0, 4001)
    return float(np.max(np.abs(eval_potential(spec, r, 2))))
