"""Closed-form ground truth for the LQ environment.

Everything needed to score a learned Gaussian policy N(phi x, Gamma) without
learning: the optimal gain phi*, the value decomposition

    Jbar(phi, Gamma) = f(a(phi)) + (sum_j D_j^T Gamma D_j) * g(a(phi)),

the Riccati-type functions k1/k3 of the entropy-regularized problem, and the
shrinking variance fixed point Gamma*_n.  `a` is the mean-square growth rate
of the closed-loop state: d/dt E[x^2] = a(phi) E[x^2] + (sum_j D_j^T Gamma D_j).
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .errors import BadCGamma
from .model import DerivedModel, ModelParams

# f and g are 0/0 at a = 0; below this threshold the explicit a = 0 limit
# branch is used (both branches agree to ~1e-6 in double precision there).
A_BRANCH_EPS = 1e-8


def phi_star(p: ModelParams, d: DerivedModel) -> np.ndarray:
    """Optimal feedback gain -(sum_j D_j D_j^T)^{-1} (B + sum_j C_j D_j)."""
    return -np.linalg.solve(d.ddt, p.B + d.cd)


def a_of_phi(phi, p: ModelParams, d: DerivedModel) -> float:
    """Mean-square growth rate 2A + 2B^T phi + sum_j (C_j^2 + 2 C_j D_j^T phi + |D_j^T phi|^2)."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    return float(
        2.0 * p.A
        + np.sum(p.C * p.C)
        + 2.0 * (p.B + d.cd) @ phi
        + phi @ d.ddt @ phi
    )


def a_scalar_batch(phi, A, B, C, D):
    """Vectorized a(phi) for the l = m = 1 case (any broadcastable arrays)."""
    return 2.0 * A + C * C + 2.0 * (B + C * D) * phi + D * D * phi * phi


def f_scalar_batch(a, Q, H, x0, T):
    """f(a), vectorized, with the a = 0 limit branch below A_BRANCH_EPS.

    Written through expm1 so the a != 0 branch stays accurate arbitrarily
    close to the switch point: the textbook form Q - e^{aT} Q - H e^{aT} a
    cancels catastrophically as a -> 0.
    """
    a = np.asarray(a, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        em1 = np.expm1(a * T)
        fa = (-Q * em1 - H * a * (em1 + 1.0)) * (x0 * x0) / (2.0 * a)
    f0 = x0 * x0 * (-H - Q * T) / 2.0
    return np.where(np.abs(a) < A_BRANCH_EPS, f0, fa)


def g_scalar_batch(a, Q, H, T):
    """g(a), vectorized, with the a = 0 limit branch below A_BRANCH_EPS.

    The numerator QTa + Q + Ha - e^{aT}(Q + Ha) is O(a^2) near zero, so it
    is evaluated as -Q (expm1(aT) - aT) - H a expm1(aT), which keeps full
    relative precision down to the branch switch.
    """
    a = np.asarray(a, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        em1 = np.expm1(a * T)
        ga = (-Q * (em1 - a * T) - H * a * em1) / (2.0 * a * a)
    g0 = T * (-2.0 * H - Q * T) / 4.0
    return np.where(np.abs(a) < A_BRANCH_EPS, g0, ga)


def f_of_a(a: float, p: ModelParams) -> float:
    return float(f_scalar_batch(a, p.Q, p.H, p.x0, p.T))


def g_of_a(a: float, p: ModelParams) -> float:
    return float(g_scalar_batch(a, p.Q, p.H, p.T))


def gamma_trace(Gamma, p: ModelParams) -> float:
    """sum_j D_j^T Gamma D_j, the exploration-noise load of covariance Gamma."""
    G = np.atleast_2d(np.asarray(Gamma, dtype=float))
    return float(np.einsum("ji,ik,jk->", p.D, G, p.D))


def jbar(phi, Gamma, p: ModelParams, d: DerivedModel) -> float:
    """Value of policy N(phi x, Gamma) under the plain (entropy-free) objective."""
    a = a_of_phi(phi, p, d)
    return f_of_a(a, p) + gamma_trace(Gamma, p) * g_of_a(a, p)


def instant_regret(phi, Gamma, p: ModelParams, d: DerivedModel) -> float:
    """Jbar(phi*, 0) - Jbar(phi, Gamma); nonnegative for PSD Gamma."""
    ph_star = phi_star(p, d)
    return jbar(ph_star, np.zeros_like(d.ddt), p, d) - jbar(phi, Gamma, p, d)


@dataclass(frozen=True)
class K1Solution:
    """Closed-form solution of k1' = -a k1 - Q with k1(T) = H."""

    a: float
    Q: float
    H: float
    T: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if abs(self.a) < A_BRANCH_EPS:
            return self.H + self.Q * (self.T - t)
        e = np.exp(self.a * (self.T - t))
        return self.H * e + (self.Q / self.a) * (e - 1.0)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if abs(self.a) < A_BRANCH_EPS:
            return -self.Q * np.ones_like(t)
        e = np.exp(self.a * (self.T - t))
        return -self.a * (self.H + self.Q / self.a) * e


def solve_k1(p: ModelParams, d: DerivedModel, phi_ref=None) -> K1Solution:
    """k1 for reference gain phi_ref (default: the optimal gain phi*).

    With phi_ref = phi* this is the k1 of the optimal value function; the unit
    model gives k1 == 1.
    """
    if phi_ref is None:
        phi_ref = phi_star(p, d)
    return K1Solution(a=a_of_phi(phi_ref, p, d), Q=p.Q, H=p.H, T=p.T)


@dataclass(frozen=True)
class K3Solution:
    """k3 tabulated on a uniform grid; linear interpolation in between."""

    grid: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)


K3_NODES = 1000


def solve_k3(p: ModelParams, d: DerivedModel, gamma: float,
             phi_ref=None, nodes: int = K3_NODES) -> K3Solution:
    """Entropy term of the optimal value function, by trapezoid quadrature.

    k3 solves  k3'(t) = (k1(t)/2) sum_j D_j^T Sigma(t) D_j
                        - (gamma/2) log((2 pi e)^l det Sigma(t)),  k3(T) = 0,
    with Sigma(t) = (gamma / k1(t)) (sum_j D_j D_j^T)^{-1}.

    At gamma = 0 the log-det term degenerates; k3 is defined as identically 0
    by convention.  Display-only: the learner never consumes k3.
    """
    grid = np.linspace(0.0, p.T, nodes)
    if gamma == 0.0:
        return K3Solution(grid=grid, values=np.zeros_like(grid))
    k1 = solve_k1(p, d, phi_ref)
    l = p.l
    ddt_inv = np.linalg.inv(d.ddt)
    k1_vals = k1(grid)
    # sum_j D_j^T Sigma(t) D_j with Sigma(t) = (gamma/k1) ddt^{-1}
    trace_load = np.einsum("ji,ik,jk->", p.D, ddt_inv, p.D)
    quad_term = 0.5 * k1_vals * (gamma / k1_vals) * trace_load
    sign, logdet_inv = np.linalg.slogdet(ddt_inv)
    logdet_sigma = l * np.log(gamma / k1_vals) + logdet_inv
    ent_term = 0.5 * gamma * (l * np.log(2.0 * np.pi * np.e) + logdet_sigma)
    deriv = quad_term - ent_term
    # integrate k3(t) = -int_t^T k3'(s) ds by trapezoid, right to left
    h = grid[1] - grid[0]
    seg = 0.5 * h * (deriv[1:] + deriv[:-1])
    values = -np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    return K3Solution(grid=grid, values=values)


def gamma_star_n(b_n: float, c_gamma: float, d: DerivedModel) -> np.ndarray:
    """Variance fixed point (c_gamma / b_n) (sum_j D_j D_j^T)^{-1}.

    Requires c_gamma > lambda_max(sum_j D_j D_j^T) so that the fixed point
    stays above (1/b_n) I.
    """
    if c_gamma <= d.lambda_max_ddt:
        raise BadCGamma(
            f"c_gamma={c_gamma:g} must exceed the largest eigenvalue "
            f"{d.lambda_max_ddt:g} of sum_j D_j D_j^T"
        )
    return (c_gamma / float(b_n)) * np.linalg.inv(d.ddt)


@dataclass(frozen=True)
class OracleSolution:
    """Bundle of the closed-form optimum for one environment."""

    phi_star: np.ndarray
    k1: K1Solution
    a_star: float
    jbar_opt: float


def solve(p: ModelParams, d: DerivedModel) -> OracleSolution:
    ph = phi_star(p, d)
    a_star = a_of_phi(ph, p, d)
    return OracleSolution(
        phi_star=ph,
        k1=solve_k1(p, d, ph),
        a_star=a_star,
        jbar_opt=f_of_a(a_star, p),
    )
