"""Barrier functions with controlled fractional Laplacians, and the
auxiliary potential whose exact layer is the normalized primitive of the
first barrier.

omega1(x) = (1+x^2)^(-(1+2s)/2)        (even)
omega2(x) = x (1+x^2)^(-(3+2s)/2)      (odd, = -omega1'/(1+2s))
omega3(x) = x (1+x^2)^(-(1+4s)/2)      (odd)

Omega(x) = (1 + (1/A) int_0^x omega1)/2 with A = int_0^infty omega1 is an
increasing 0-to-1 profile solving (-Delta)^s Omega + V'(Omega) = 0 for the
auxiliary potential V built from it; the scaling a = (W''(0)/(2A))^(1/2s)
matches V''(0) to a target potential.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.special import hyp2f1
from scipy.special import gamma as gamma_fn

from .errors import AccuracyWarning, InvalidArgument



def omega(which: int, s: float, x, deriv: int = 0):
    """The three barrier profiles and their first two derivatives."""
    x = np.asarray(x, dtype=float)
    q = 1.0 + x * x
    if which == 1:
        p = (1.0 + 2.0 * s) / 2.0
        if deriv == 0:
            out = q ** (-p)
        elif deriv == 1:
            out = -(1.0 + 2.0 * s) * x * q ** (-p - 1.0)
        elif deriv == 2:
            out = (1.0 + 2.0 * s) * (2.0 * (1.0 + s) * x * x - 1.0) * q ** (-p - 2.0)
        else:
            raise InvalidArgument("deriv must be 0..2")
    elif which == 2:
        p = (3.0 + 2.0 * s) / 2.0
        if deriv == 0:
            out = x * q ** (-p)
        elif deriv == 1:
            out = (1.0 - 2.0 * (1.0 + s) * x * x) * q ** (-p - 1.0)
        elif deriv == 2:
            out = (3.0 + 2.0 * s) * x * (2.0 * (1.0 + s) * x * x - 3.0) * q ** (-p - 2.0)
        else:
            raise InvalidArgument("deriv must be 0..2")
    elif which == 3:
        if deriv == 0:
            out = x * q ** (-(1.0 + 4.0 * s) / 2.0)
        elif deriv == 1:
            out = (1.0 - 4.0 * s * x * x) * q ** (-(4.0 * s + 3.0) / 2.0)
        elif deriv == 2:
            out = (4.0 * s + 1.0) * (4.0 * s * x * x - 3.0) * x * q ** (-(4.0 * s + 5.0) / 2.0)
        else:
            raise InvalidArgument("deriv must be 0..2")
    else:
        raise InvalidArgument("which must be 1, 2 or 3")
    return out if out.ndim else float(out)


def half_line_mass(s: float) -> float:
    """A = int_0^infty (1+x^2)^(-(1+2s)/2) dx, in closed form."""
    return float(np.sqrt(np.pi) * gamma_fn(s) / (2.0 * gamma_fn(s + 0.5)))


def fraclap_pointwise(fn, s: float, x: float, fpp=None, tol: float = 1e-10) -> float:
    """(-Delta)^s of a scalar function at one point by adaptive quadrature
    of the symmetric second difference, with a Taylor model near z = 0."""
    z0 = 1e-4
    if fpp is not None:
        near = -fpp(x) * z0 ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    else:
        d2 = (fn(x + z0) - 2.0 * fn(x) + fn(x - z0)) / z0**2
        near = -d2 * z0 ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)

    def integrand(z):
        return (2.0 * fn(x) - fn(x + z) - fn(x - z)) / z ** (1.0 + 2.0 * s)

    total, err = near, 0.0
    breaks = sorted({z0, 1.0, max(abs(x), 1.0), 2.0 * max(abs(x), 1.0), 50.0 + 2.0 * abs(x)})
    pieces = list(zip(breaks[:-1], breaks[1:])) + [(breaks[-1], np.inf)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for a, b in pieces:
            v, e = quad(integrand, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)
            total += v
            err += e
    if err > tol * max(1.0, abs(total)):
        warnings.warn(f"quadrature tolerance not reached (err {err:.1e})",
                      AccuracyWarning)
    return total


@dataclass
class RatioScan:
    which: int
    s: float
    x: np.ndarray
    values: np.ndarray          # (-Delta)^s omega at the scan points
    ratio: np.ndarray           # values / omega
    c_bound: float              # sup |ratio|
    lambda_fit: float | None    # for omega1/omega2: the x^{-2s} correction


def omega_ratio_scan(which: int, s: float, x_range=(1e-2, 1e2),
                     n_points: int = 60) -> RatioScan:
    """Scan |(-Delta)^s omega| / |omega| and, for the profiles with the
    -2A limit, fit the x^{-2s} correction coefficient."""
    x = np.geomspace(x_range[0], x_range[1], n_points)
    fn = lambda t: omega(which, s, t)
    fpp = lambda t: omega(which, s, t, 2)
    vals = np.array([fraclap_pointwise(fn, s, float(xx), fpp=fpp) for xx in x])
    om = omega(which, s, x)
    ratio = vals / om
    lam = None
    if which in (1, 2):
        # the ratio expands as -2A + lambda x^{-2s} + O(next); extrapolate
        # the window values against the next-order 1/x correction
        a2 = 2.0 * half_line_mass(s)
        far = x >= x_range[1] / 30.0
        y = (ratio[far] + a2) * x[far] ** (2.0 * s)
        design = np.column_stack([np.ones(far.sum()), 1.0 / x[far]])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        lam = float(coef[0])
    return RatioScan(which=which, s=s, x=x, values=vals, ratio=ratio,
                     c_bound=float(np.max(np.abs(ratio))), lambda_fit=lam)


def omega1_primitive(s: float, x):
    """int_0^x omega1, via the hypergeometric closed form."""
    x = np.asarray(x, dtype=float)
    out = x * hyp2f1(0.5, (1.0 + 2.0 * s) / 2.0, 1.5, -x * x)
    return out if out.ndim else float(out)


def layer_profile_exact(s: float, x):
    """Omega(x) = (1 + primitive/A)/2, the exact auxiliary layer."""
    return 0.5 * (1.0 + omega1_primitive(s, x) / half_line_mass(s))


@dataclass
class AuxiliaryPotential:
    s: float
    a_mass: float                  # A
    x_nodes: np.ndarray
    omega_vals: np.ndarray         # Omega on the nodes
    lap_vals: np.ndarray           # -(-Delta)^s Omega on the nodes
    r_nodes: np.ndarray            # Omega(x_nodes)
    v_vals: np.ndarray             # V(r_nodes)
    vpp0: float                    # measured V''(0)
    scale_a: float                 # a = (W''(0)/(2A))^{1/2s}
    target_wpp0: float

    def v(self, r):
        return PchipInterpolator(self.r_nodes, self.v_vals)(r)

    def vprime(self, r):
        return PchipInterpolator(self.r_nodes, -self.lap_vals)(r)

    def omega_scaled(self, x):
        return layer_profile_exact(self.s, self.scale_a * np.asarray(x))

    def residual_scaled(self, x) -> np.ndarray:
        """|(-Delta)^s Omega_a + V_a'(Omega_a)| at the given points, with
        V_a'(r) = a^{2s} V'(r) through the interpolated table."""
        a = self.scale_a
        s = self.s
        x = np.asarray(x, dtype=float)
        fn = lambda t: layer_profile_exact(s, a * t)
        lap = np.array([fraclap_pointwise(fn, s, float(xx)) for xx in x])
        vp = a ** (2.0 * s) * self.vprime(layer_profile_exact(s, a * x))
        return np.abs(lap + vp)


def build_auxiliary(s: float, target_wpp0: float, n_nodes: int = 241,
                    x_max: float = 60.0) -> AuxiliaryPotential:
    """Assemble A, Omega, L = -(-Delta)^s Omega, the potential V by the
    change of variables V(r) = int L(y) Omega'(y) dy, and the rescaled
    exact layer matching the target W''(0)."""
    if target_wpp0 <= 0.0:
        raise InvalidArgument("target W''(0) must be positive")
    a_mass = half_line_mass(s)
    # symmetric log-stretched nodes: the integrand L * Omega' is odd, so a
    # symmetric trapezoid rule keeps V exactly even about 1/2
    x_far = 8.0 * x_max
    half = np.geomspace(1e-3, x_far, n_nodes)
    x_nodes = np.concatenate([-half[::-1], [0.0], half])
    om = layer_profile_exact(s, x_nodes)
    fn = lambda t: layer_profile_exact(s, t)
    lap_half = np.array([-fraclap_pointwise(fn, s, float(xx)) for xx in half])
    lap = np.concatenate([-lap_half[::-1], [0.0], lap_half])  # L is odd

    # V(r) = int_0^r L(Omega^{-1}(rho)) drho = int_{-inf}^{Omega^{-1}(r)} L * Omega' dy
    op = omega(1, s, x_nodes) / (2.0 * a_mass)          # Omega'
    integrand = lap * op
    v_vals = np.concatenate([
        [0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(x_nodes))
    ])
    # analytic tail below the first node: L*Omega' ~ (2A Omega)(omega1/(2A))
    kappa = 1.0 / (4.0 * s * a_mass)
    v_vals += kappa * x_far ** (-4.0 * s) / (4.0 * s)

    i0 = np.searchsorted(x_nodes, -0.6 * x_max)
    vpp0 = 2.0 * v_vals[i0] / om[i0] ** 2
    scale_a = (target_wpp0 / (2.0 * a_mass)) ** (1.0 / (2.0 * s))
    return AuxiliaryPotential(s=s, a_mass=a_mass, x_nodes=x_nodes,
                              omega_vals=om, lap_vals=-lap, r_nodes=om,
                              v_vals=v_vals, vpp0=vpp0, scale_a=scale_a,
                              target_wpp0=target_wpp0)


def expansion_check(s: float, x) -> np.ndarray:
    """Pointwise margin of the tail expansion of Omega:
    bound - |Omega - step + x/(4sA|x|^{1+2s})| (nonnegative when it holds)."""
    x = np.asarray(x, dtype=float)
    a_mass = half_line_mass(s)
    om = layer_profile_exact(s, x)
    step = (x > 0.0).astype(float)
    lead = x / (4.0 * s * a_mass * np.abs(x) ** (1.0 + 2.0 * s))
    bound = np.abs(x) ** (-2.0 - 2.0 * s) / (2.0 * a_mass)
    return bound - np.abs(om - step + lead)
