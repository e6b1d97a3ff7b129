"""The 1D fractional Laplacian with the constant-free kernel normalization.

Two independent backends: a singular-integral quadrature acting on fields
with exterior Dirichlet constants, and a Fourier-symbol method for periodic
sequences. The Fourier symbol of the operator is A_s |xi|^{2s} with

    A_s = integral over R of (1 - cos t) / |t|^{1+2s} dt
        = pi / (Gamma(1+2s) * sin(pi s)).

Also houses the padded-FFT machinery (smooth reference step + decaying
remainder) shared by the layer solver and the mild-solution stepper.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import fft, ifft, rfft, irfft
from scipy.integrate import quad
from scipy.signal import fftconvolve
from scipy.special import erf, gamma

from .errors import InvalidArgument
from .grid import Field, Grid

PAD_FACTOR = 2


@dataclass(frozen=True)
class SymbolConstant:
    """Multiplier A_s making the kernel form and the symbol form agree."""

    s: float
    value: float        # closed form
    quadrature: float   # independent integral evaluation

    @property
    def mismatch(self) -> float:
        return abs(self.value - self.quadrature)


@lru_cache(maxsize=None)
def symbol_constant(s: float) -> SymbolConstant:
    """A_s by adaptive quadrature and by the Gamma closed form."""
    if not 0.0 < s < 1.0:
        raise InvalidArgument("s must lie in (0, 1)")
    closed = np.pi / (gamma(1.0 + 2.0 * s) * np.sin(np.pi * s))
    # head: subtract two Taylor terms (integrated exactly) so the integrand
    # is smooth; tail: weighted QUADPACK rule for the cosine part
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        head_smooth = quad(
            lambda t: 2.0 * (1.0 - np.cos(t) - 0.5 * t * t + t**4 / 24.0) / t ** (1.0 + 2.0 * s),
            0.0, 1.0, epsabs=1e-14, epsrel=1e-14,
        )[0]
    head = head_smooth + 1.0 / (2.0 - 2.0 * s) - 1.0 / (12.0 * (4.0 - 2.0 * s))
    tail_cos = quad(lambda t: t ** (-1.0 - 2.0 * s), 1.0, np.inf,
                    weight="cos", wvar=1.0)[0]
    quadval = head + 2.0 * (1.0 / (2.0 * s) - tail_cos)
    return SymbolConstant(s=s, value=float(closed), quadrature=float(quadval))


# ---------------------------------------------------------------------------
# quadrature backend

@lru_cache(maxsize=32)
def _cell_weights(n: int, h: float, s: float):
    """Node weights for product integration of the kernel against a
    piecewise-linear numerator on cells [mh, (m+1)h], m = 1..n-2, plus the
    quadratic-model cell (0, h]. Returns (a_m for m=1..n-1, far cutoff)."""
    m = np.arange(1, n, dtype=float)
    zm = m * h
    if abs(s - 0.5) < 1e-14:
        prim0 = -1.0 / zm            # antiderivative of z^{-2}
        prim1 = np.log(zm)           # antiderivative of z^{-1}
    else:
        prim0 = zm ** (-2.0 * s) / (-2.0 * s)
        prim1 = zm ** (1.0 - 2.0 * s) / (1.0 - 2.0 * s)
    i0 = prim0[1:] - prim0[:-1]                    # cells m=1..n-2
    j = (prim1[1:] - prim1[:-1]) - zm[:-1] * i0
    a = np.zeros(n - 1)
    a[0] = h ** (-2.0 * s) / (2.0 - 2.0 * s)       # near cell, phi ~ phi_1 (z/h)^2
    a[: n - 2] += i0 - j / h
    a[1:] += j / h
    far = ((n - 1) * h) ** (-2.0 * s) / (2.0 * s)
    return a, far


def apply_quadrature(f: Field, s: float) -> Field:
    """Node-wise (-Delta)^s f via the symmetric second-difference kernel.

    Near field by a Taylor model, mid field by product integration of the
    kernel against piecewise-linear data, far field integrated analytically
    against the exterior constants."""
    if not 0.0 < s < 1.0:
        raise InvalidArgument("s must lie in (0, 1)")
    n, h = f.grid.n, f.grid.h
    a, far = _cell_weights(n, h, s)
    asum = float(np.sum(a))

    # f extended by exterior constants: indices -(n-1) .. 2n-2
    fpad = np.concatenate([
        np.full(n - 1, f.left_exterior), f.values, np.full(n - 1, f.right_exterior)
    ])
    kernel = np.zeros(2 * n - 1)
    kernel[n - 1 + np.arange(1, n)] = a
    kernel[n - 1 - np.arange(1, n)] = a
    neigh = fftconvolve(fpad, kernel[::-1], mode="valid")  # sum_m a_m (f_{i+m} + f_{i-m})

    out = 2.0 * asum * f.values - neigh
    out += (2.0 * f.values - f.left_exterior - f.right_exterior) * far
    return Field(f.grid, out, 0.0, 0.0)


# ---------------------------------------------------------------------------
# periodic spectral backend

def apply_spectral(values, period: float, s: float):
    """(-Delta)^s of a smooth periodic sequence via the exact symbol."""
    if not 0.0 < s < 1.0:
        raise InvalidArgument("s must lie in (0, 1)")
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or len(values) < 4:
        raise InvalidArgument("need a 1D sequence of length >= 4")
    a_s = symbol_constant(s).value
    xi = 2.0 * np.pi * np.fft.rfftfreq(len(values), d=period / len(values))
    return irfft(rfft(values) * a_s * np.abs(xi) ** (2.0 * s), n=len(values))


# ---------------------------------------------------------------------------
# padded-lattice helpers shared by the field solvers

def padded_length(n: int) -> int:
    from scipy.fft import next_fast_len

    return next_fast_len(PAD_FACTOR * n, real=True)


def profile_from_fourier(grid: Grid, fhat, npad: int | None = None) -> np.ndarray:
    """Sample f on the grid nodes from an analytic Fourier transform.

    fhat(xi) must accept an array of signed frequencies and is assumed to
    decay; the node values come from an inverse DFT on the padded lattice
    anchored at x = -L."""
    n, h, L = grid.n, grid.h, grid.half_width
    if npad is None:
        npad = padded_length(n)
    xi = 2.0 * np.pi * np.fft.fftfreq(npad, d=h)
    spec = fhat(xi) * np.exp(1j * xi * (-L)) / h
    return np.real(ifft(spec))[:n]


def step_reference(grid: Grid, sigma: float | None = None):
    """Smooth odd reference step G(x) = erf(x / sigma) sampled on the grid.

    Returns (values, sigma). sigma defaults to L/8 so the step saturates to
    machine precision well inside the domain."""
    if sigma is None:
        sigma = grid.half_width / 8.0
    return erf(grid.nodes / sigma), sigma


def reference_step_hat(sigma: float):
    """Fourier transform of erf(x/sigma): -2i exp(-sigma^2 xi^2/4) / xi."""

    def fhat(xi):
        out = np.zeros_like(xi, dtype=complex)
        nz = xi != 0.0
        out[nz] = -2j * np.exp(-(sigma**2) * xi[nz] ** 2 / 4.0) / xi[nz]
        return out

    return fhat


def _reference_tail_terms(s: float, sigma: float):
    """Asymptotic expansion of (-Delta)^s erf(x/sigma) for x >> sigma:
    sum of coef * x^(-alpha) with alpha = 2s, 2+2s, 4+2s."""
    return (
        (1.0 / s, 2.0 * s),
        ((1.0 + 2.0 * s) * sigma**2 / 2.0, 2.0 + 2.0 * s),
        ((1.0 + 2.0 * s) * (2.0 + 2.0 * s) * (3.0 + 2.0 * s) / 6.0
         * 3.0 * sigma**4 / 8.0, 4.0 + 2.0 * s),
    )


def reference_tail_images(grid: Grid, s: float, sigma: float, npad: int) -> np.ndarray:
    """Periodization images sum_{k!=0} D_s erf((x+kP)/sigma) on the padded
    lattice of period P = npad*h, evaluated from the algebraic tails (the
    erfc remainders are negligible at distance P - L)."""
    from scipy.special import zeta

    period = npad * grid.h
    x = grid.nodes
    k = np.arange(1.0, 33.0)[:, None]
    out = np.zeros_like(x)
    for coef, alpha in _reference_tail_terms(s, sigma):
        direct = ((period * k + x) ** (-alpha) - (period * k - x) ** (-alpha)).sum(axis=0)
        kc = 33.0
        tail = (-2.0 * alpha * x * period ** (-alpha - 1.0) * zeta(alpha + 1.0, kc)
                - alpha * (alpha + 1.0) * (alpha + 2.0) / 3.0
                * x**3 * period ** (-alpha - 3.0) * zeta(alpha + 3.0, kc))
        out += coef * (direct + tail)
    return out


def fraclap_of_reference(grid: Grid, s: float, sigma: float) -> np.ndarray:
    """(-Delta)^s of erf(x/sigma) on the grid nodes (odd, algebraic tails).

    The sampled-spectrum inversion yields the periodized profile; the
    periodization images are removed through their tail expansion."""
    a_s = symbol_constant(s).value
    npad = padded_length(grid.n)

    def fhat(xi):
        out = np.zeros_like(xi, dtype=complex)
        nz = xi != 0.0
        out[nz] = (a_s * np.abs(xi[nz]) ** (2.0 * s)
                   * -2j * np.exp(-(sigma**2) * xi[nz] ** 2 / 4.0) / xi[nz])
        return out

    sampled = profile_from_fourier(grid, fhat, npad)
    return sampled - reference_tail_images(grid, s, sigma, npad)


def apply_reference_spectral(f: Field, s: float, sigma: float | None = None) -> Field:
    """(-Delta)^s of a field via reference-step subtraction and the padded
    Fourier symbol; third route used to cross-check the quadrature backend."""
    grid = f.grid
    gvals, sigma = step_reference(grid, sigma)
    ubar = 0.5 * (f.left_exterior + f.right_exterior)
    du = f.right_exterior - f.left_exterior
    v = f.values - (ubar + 0.5 * du * gvals)
    npad = padded_length(grid.n)
    a_s = symbol_constant(s).value
    xi = 2.0 * np.pi * np.fft.rfftfreq(npad, d=grid.h)
    vhat = rfft(v, n=npad)
    dv = irfft(vhat * a_s * xi ** (2.0 * s), n=npad)[: grid.n]
    dref = fraclap_of_reference(grid, s, sigma)
    return Field(grid, dv + 0.5 * du * dref, 0.0, 0.0)
