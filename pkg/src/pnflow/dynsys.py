"""Repulsive dislocation-point dynamics.

The positions obey

    xi_i' = (gamma / 2s) * sum_{j != i} (xi_i - xi_j) / |xi_i - xi_j|^{1+2s}

whose unique ordered self-similar solution is xi_i(t) = beta_i t^{1/(1+2s)}.
beta is found by Newton on the gradient of the strictly convex interaction
functional; trajectories are integrated with an adaptive embedded
Runge-Kutta pair with dense output.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (DegenerateState, InvalidArgument, SingularConfiguration,
                     SolverFailure)
from .fitting import fit_powerlaw


@dataclass
class ParticleState:
    t: float
    xi: np.ndarray

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        if self.t <= 0.0:
            raise InvalidArgument("time must be positive")
        if np.any(np.diff(self.xi) <= 0.0):
            raise SingularConfiguration("positions must be strictly increasing")


@dataclass
class BetaVector:
    s: float
    gamma: float
    n: int
    beta: np.ndarray

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(_beta_equation(self.beta, self.s, self.gamma))))


def _pair_forces(xi, s, gamma):
    """Antisymmetric pairwise forces; summing rows preserves the barycenter
    exactly in floating point."""
    diff = xi[:, None] - xi[None, :]
    np.fill_diagonal(diff, 1.0)
    mag = diff / np.abs(diff) ** (1.0 + 2.0 * s)
    np.fill_diagonal(mag, 0.0)
    return gamma / (2.0 * s) * mag


def rhs(state: ParticleState, s: float, gamma: float) -> np.ndarray:
    """Velocity of each dislocation point (equals -R(xi))."""
    xi = state.xi
    if np.any(np.diff(xi) <= 0.0):
        raise SingularConfiguration("coincident or disordered points")
    forces = _pair_forces(xi, s, gamma)
    upper = np.triu(forces, k=1)
    # assemble from the strict upper triangle so F_ij = -F_ji exactly
    return upper.sum(axis=1) - upper.sum(axis=0)


def jacobian(state: ParticleState, s: float, gamma: float) -> np.ndarray:
    """D_xi R, the (symmetric, positive semi-definite) derivative of the
    negated velocity field; a weighted graph Laplacian."""
    xi = state.xi
    if np.any(np.diff(xi) <= 0.0):
        raise SingularConfiguration("coincident or disordered points")
    diff = xi[:, None] - xi[None, :]
    np.fill_diagonal(diff, 1.0)
    k = np.abs(diff) ** (-1.0 - 2.0 * s)
    np.fill_diagonal(k, 0.0)
    jac = -gamma * k
    np.fill_diagonal(jac, gamma * k.sum(axis=1))
    return jac


def delta_coercivity(n: int, gamma: float, beta_n: float, s: float) -> float:
    """delta = N gamma / (16 beta_N^{1+2s})."""
    return n * gamma / (16.0 * beta_n ** (1.0 + 2.0 * s))


@dataclass
class CoercivityReport:
    s: float
    gamma: float
    n: int
    t: float
    delta: float
    min_sampled: float      # min over sampled zero-sum unit eta of <J eta, eta> t/(2 delta)
    min_eig: float          # exact minimum on the zero-sum subspace, same scaling
    passed: bool


def coercivity_check(state: ParticleState, s: float, gamma: float,
                     beta: BetaVector, n_samples: int = 1000,
                     rng=None) -> CoercivityReport:
    """Verify <D_xi R(xi) eta, eta> >= (2 delta / t) |eta|^2 on zero-sum eta."""
    rng = np.random.default_rng(rng)
    jac = jacobian(state, s, gamma)
    n = len(state.xi)
    delta = delta_coercivity(n, gamma, float(beta.beta[-1]), s)
    scale = state.t / (2.0 * delta)

    etas = rng.standard_normal((n_samples, n))
    etas -= etas.mean(axis=1, keepdims=True)
    etas /= np.linalg.norm(etas, axis=1, keepdims=True)
    quad = np.einsum("ki,ij,kj->k", etas, jac, etas)
    min_sampled = float(quad.min() * scale)

    # exact minimum: eigenvalues of the Jacobian restricted to the zero-sum
    # subspace via an orthonormal basis of it
    basis = np.linalg.svd(np.eye(n) - np.ones((n, n)) / n)[0][:, : n - 1]
    sub = basis.T @ jac @ basis
    min_eig = float(np.linalg.eigvalsh(sub)[0] * scale)

    return CoercivityReport(s=s, gamma=gamma, n=n, t=state.t, delta=delta,
                            min_sampled=min_sampled, min_eig=min_eig,
                            passed=bool(min_sampled >= 1.0 and min_eig >= 1.0 - 1e-12))


def _beta_equation(b, s, gamma):
    diff = b[:, None] - b[None, :]
    np.fill_diagonal(diff, 1.0)
    mag = diff / np.abs(diff) ** (1.0 + 2.0 * s)
    np.fill_diagonal(mag, 0.0)
    return b - (1.0 + 2.0 * s) * gamma / (2.0 * s) * mag.sum(axis=1)


def beta_solve(n: int, s: float, gamma: float, tol: float = 1e-12) -> BetaVector:
    """Unique increasing zero-sum solution of the self-similar profile
    equation, by damped Newton with the exact Hessian of the interaction
    functional (identity plus a weighted graph Laplacian)."""
    if n < 2:
        raise InvalidArgument("need at least two dislocations")
    b = np.linspace(-1.0, 1.0, n)
    for _ in range(200):
        r = _beta_equation(b, s, gamma)
        if np.max(np.abs(r)) <= tol:
            break
        diff = b[:, None] - b[None, :]
        np.fill_diagonal(diff, 1.0)
        k = np.abs(diff) ** (-1.0 - 2.0 * s)
        np.fill_diagonal(k, 0.0)
        hess = (1.0 + 2.0 * s) * gamma * (-k)
        np.fill_diagonal(hess, 1.0 + (1.0 + 2.0 * s) * gamma * k.sum(axis=1))
        step = np.linalg.solve(hess, -r)
        lam = 1.0
        while lam > 1e-8:
            cand = b + lam * step
            if np.all(np.diff(cand) > 0.0):
                b = cand
                break
            lam *= 0.5
        else:
            raise SolverFailure("beta Newton could not stay ordered")
    else:
        raise SolverFailure("beta Newton did not converge",
                            residual=float(np.max(np.abs(r))))
    b = b - b.mean()
    return BetaVector(s=s, gamma=gamma, n=n, beta=b)


def beta_closed_form_n2(s: float, gamma: float) -> float:
    return 0.5 * ((1.0 + 2.0 * s) * gamma / s) ** (1.0 / (1.0 + 2.0 * s))


def beta_closed_form_n3(s: float, gamma: float) -> float:
    return ((1.0 + 2.0 * s) * (1.0 + 4.0 ** (-s)) * gamma
            / (2.0 * s)) ** (1.0 / (1.0 + 2.0 * s))


@dataclass
class Trajectory:
    s: float
    gamma: float
    times: np.ndarray
    xi: np.ndarray          # shape (len(times), N)

    def state(self, k: int) -> ParticleState:
        return ParticleState(t=float(self.times[k]), xi=self.xi[k].copy())

    def spacing_exponent(self, t_min: float) -> float:
        """Growth exponent p of the outer gap, gap ~ t^p."""
        keep = self.times >= t_min
        gap = self.xi[keep, -1] - self.xi[keep, 0]
        return -fit_powerlaw(self.times[keep], gap).exponent

    def barycenter_drift(self) -> float:
        b = self.xi.mean(axis=1)
        return float(np.max(np.abs(b - b[0])))


def integrate(state0: ParticleState, s: float, gamma: float, t_end: float,
              rtol: float = 1e-9, atol: float = 1e-12,
              n_out: int = 200) -> Trajectory:
    """Adaptive RK45 trajectory with log-spaced dense output; the ordering
    is asserted at every output time."""
    if t_end <= state0.t:
        raise InvalidArgument("t_end must exceed the initial time")

    def f(t, y):
        forces = _pair_forces(y, s, gamma)
        upper = np.triu(forces, k=1)
        return upper.sum(axis=1) - upper.sum(axis=0)

    times = np.geomspace(state0.t, t_end, n_out)
    sol = solve_ivp(f, (state0.t, t_end), state0.xi, method="RK45",
                    rtol=rtol, atol=atol, t_eval=times, dense_output=True)
    if not sol.success:
        raise SolverFailure(f"ODE integration failed: {sol.message}")
    xi = sol.y.T
    if np.any(np.diff(xi, axis=1) <= 0.0):
        raise DegenerateState("ordering violated along the trajectory "
                              "(step-size failure)")
    return Trajectory(s=s, gamma=gamma, times=times, xi=xi)


def write_trajectory_csv(path, traj: Trajectory):
    n = traj.xi.shape[1]
    with open(path, "w", newline="\n") as fh:
        fh.write("t," + ",".join(f"xi_{i+1}" for i in range(n)) + "\n")
        for t, row in zip(traj.times, traj.xi):
            fh.write(repr(float(t)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
