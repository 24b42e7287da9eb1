"""Gaussian policy machinery and the parameterized critic.

The actor is pi(u | x) = N(phi x, Gamma).  The critic approximates the value
function as J(t, x; theta, gamma) = -1/2 k1(t; theta) x^2 + k3(t; theta, gamma)
with k1 bounded in [1/c2, c2].  Score functions are taken with respect to the
Gamma^{-1} parameterization of the covariance (free-entry convention), which
makes the exploration update's mean increment a clean quadratic in Gamma.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import CholeskyFail, ConfigError
from .model import CriticState, PolicyParams


class CriticKind(Enum):
    # k1 == 1, k3 == 0: no learnable parameters, used by all the experiments
    CONSTANT_ORACLE_FREE = "constant_oracle_free"
    # k1 = clamp(exp(theta_1), 1/c2, c2), k3 = theta_2, both time-constant
    LEARNED_CONSTANT = "learned_constant"


@dataclass(frozen=True)
class CriticParameterization:
    """Critic family plus the bound constants of its admissible set.

    c1, c2, c3 bound |k1'|, k1 (two-sided) and |k3'|; c_theta and c_gamma_cap
    are the projection radii for theta and gamma (may be inf).
    """

    kind: CriticKind = CriticKind.CONSTANT_ORACLE_FREE
    c1: float = 1.0
    c2: float = 2.0
    c3: float = 1.0
    c_theta: float = np.inf
    c_gamma_cap: float = np.inf

    def __post_init__(self):
        if self.c2 < 1.0:
            raise ConfigError("c2 must be >= 1 so that k1 == 1 is admissible")
        if min(self.c1, self.c3) < 0 or self.c_theta <= 0 or self.c_gamma_cap <= 0:
            raise ConfigError("bound constants must be positive")

    def n_theta(self) -> int:
        return 0 if self.kind is CriticKind.CONSTANT_ORACLE_FREE else 2

    def k1(self, t, theta) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind is CriticKind.CONSTANT_ORACLE_FREE:
            return np.ones_like(t)
        return np.clip(np.exp(theta[0]), 1.0 / self.c2, self.c2) * np.ones_like(t)

    def k3(self, t, theta, gamma) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind is CriticKind.CONSTANT_ORACLE_FREE:
            return np.zeros_like(t)
        return theta[1] * np.ones_like(t)

    def grad_theta(self, t, x, theta) -> np.ndarray:
        """dJ/dtheta at (t, x); zero-length for the constant critic."""
        if self.kind is CriticKind.CONSTANT_ORACLE_FREE:
            return np.zeros(0)
        e = np.exp(theta[0])
        dk1 = e if 1.0 / self.c2 < e < self.c2 else 0.0  # clamp is flat outside
        return np.array([-0.5 * x * x * dk1, 1.0])


def value(t, x, cs: CriticState, par: CriticParameterization) -> float:
    """Parameterized value J(t, x) = -1/2 k1(t) x^2 + k3(t)."""
    k1 = par.k1(t, cs.theta)
    k3 = par.k3(t, cs.theta, cs.gamma)
    return float(-0.5 * k1 * x * x + k3)


def _chol(Gamma: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(Gamma)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFail(f"covariance is not positive definite: {exc}") from exc


def entropy(Gamma) -> float:
    """Differential entropy 1/2 log((2 pi e)^l det Gamma) of N(., Gamma)."""
    G = np.atleast_2d(np.asarray(Gamma, dtype=float))
    L = _chol(G)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    l = G.shape[0]
    return float(0.5 * (l * np.log(2.0 * np.pi * np.e) + logdet))


def log_density(u, x: float, pol: PolicyParams) -> float:
    """log pi(u | x) for the Gaussian feedback policy."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    z = u - pol.phi * x
    L = _chol(pol.Gamma)
    w = np.linalg.solve(L, z)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    l = pol.phi.shape[0]
    return float(-0.5 * (l * np.log(2.0 * np.pi) + logdet + w @ w))


def score_phi(u, x: float, pol: PolicyParams) -> np.ndarray:
    """d log pi / d phi = Gamma^{-1} (u - phi x) x."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    z = u - pol.phi * x
    return np.linalg.solve(pol.Gamma, z) * x


def score_gamma_inv(u, x: float, pol: PolicyParams) -> np.ndarray:
    """d log pi / d Gamma^{-1} = 1/2 Gamma - 1/2 (u - phi x)(u - phi x)^T.

    Entries of Gamma^{-1} are treated as free (no symmetry tying), matching
    central finite differences of the log density entry by entry.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    z = u - pol.phi * x
    return 0.5 * pol.Gamma - 0.5 * np.outer(z, z)


def entropy_grad_gamma_inv(Gamma) -> np.ndarray:
    """d entropy / d Gamma^{-1} = -1/2 Gamma (free-entry convention)."""
    G = np.atleast_2d(np.asarray(Gamma, dtype=float))
    return -0.5 * G


def project_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the centered ball of the given radius."""
    v = np.asarray(v, dtype=float)
    if not np.isfinite(radius):
        return v
    nrm = float(np.linalg.norm(v))
    if nrm <= radius:
        return v
    return v * (radius / nrm)


def project_box(v: np.ndarray, lo, hi) -> np.ndarray:
    """Per-coordinate interval clamp (the experiments' phi projection)."""
    return np.clip(np.asarray(v, dtype=float), lo, hi)


# Positive-definiteness floor used when an interval override (e.g. [0, 1])
# includes 0, which would break action sampling.
GAMMA_PD_FLOOR = 1e-6


def project_gamma(G, lower: float, cap: float, override=None) -> np.ndarray:
    """Project a symmetric matrix onto the admissible covariance set.

    Without override: eigenvalues clamped to [lower, cap], the Frobenius
    projection onto {lower I <= Gamma <= cap I}.  With override = (lo, hi):
    the interval is intersected with the same lower bound, i.e. eigenvalues
    clamped to [max(lo, lower, GAMMA_PD_FLOOR), hi].  Keeping the theoretical
    floor active under the interval override matters: a bare near-zero floor
    is an absorbing trap (the variance-gradient signal scales with Gamma, so
    an early kick to ~0 freezes exploration for the rest of the run).
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    G = 0.5 * (G + G.T)
    if override is not None:
        lo, hi = override
        hi = float(hi)
        lo = min(max(float(lo), float(lower), GAMMA_PD_FLOOR), hi)
    else:
        lo, hi = float(lower), float(cap)
    if G.shape == (1, 1):
        return np.array([[min(max(G[0, 0], lo), hi)]])
    w, V = np.linalg.eigh(G)
    w = np.clip(w, lo, hi)
    return (V * w) @ V.T


@dataclass(frozen=True)
class ProjectionSpec:
    """Actor projection sets for one iteration index.

    phi: ball of radius `phi_radius`, or the box (phi_lo, phi_hi) when set.
    Gamma: SPD band [gamma_lower, gamma_cap], or the interval override.
    """

    phi_radius: float = np.inf
    phi_box: tuple | None = None
    gamma_lower: float = 0.0
    gamma_cap: float = np.inf
    gamma_override: tuple | None = None

    def project_phi(self, v: np.ndarray) -> np.ndarray:
        if self.phi_box is not None:
            return project_box(v, self.phi_box[0], self.phi_box[1])
        return project_ball(v, self.phi_radius)

    def project_Gamma(self, G) -> np.ndarray:
        return project_gamma(G, self.gamma_lower, self.gamma_cap, self.gamma_override)
