"""Episode simulation: Euler-Maruyama stepping of the controlled scalar SDE.

One episode rolls the state over a uniform grid t_k = k dt, sampling one
action per grid point from the Gaussian policy and holding it constant over
the step.  The per-episode noise is drawn as a single (K, l + m) block --
column layout [action noise | Brownian normals] -- so the stream consumed by
an episode depends only on (seed, K, l, m), never on how the episode ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CholeskyFail, NonFinite
from .model import ModelParams, PolicyParams


@dataclass
class RngStream:
    """Seeded noise source; identical seeds reproduce identical draws bit-for-bit."""

    seed: int
    calls: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._gen = np.random.default_rng(int(self.seed))

    def standard_normal(self, shape):
        self.calls += 1
        return self._gen.standard_normal(shape)

    def uniform(self, lo, hi, shape=None):
        self.calls += 1
        return self._gen.uniform(lo, hi, shape)


def n_steps(T: float, dt: float) -> int:
    """floor(T / dt) steps, robust to the usual floating-point shortfall."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    ratio = T / dt
    return int(np.floor(ratio * (1.0 + 1e-12)))


@dataclass(frozen=True)
class Trajectory:
    """One episode: uniform grid, states (K+1), actions (K, l)."""

    dt: float
    times: np.ndarray
    states: np.ndarray
    actions: np.ndarray

    def __post_init__(self):
        self.times.setflags(write=False)
        self.states.setflags(write=False)
        self.actions.setflags(write=False)


def cholesky_factor(Gamma: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(np.atleast_2d(Gamma))
    except np.linalg.LinAlgError as exc:
        raise CholeskyFail(
            f"policy covariance is not positive definite: {exc}"
        ) from exc


def sample_action(x: float, pol: PolicyParams, rng: RngStream) -> np.ndarray:
    """Draw u ~ N(phi x, Gamma) via the Cholesky factor of Gamma."""
    L = cholesky_factor(pol.Gamma)
    xi = rng.standard_normal(pol.phi.shape[0])
    return pol.phi * x + L @ xi


def euler_step(x: float, u, dt: float, dW, p: ModelParams) -> float:
    """x + (A x + B^T u) dt + sum_j (C_j x + D_j^T u) dW_j.

    dW is the vector of m Brownian increments (normals already scaled by
    sqrt(dt)).
    """
    u = np.asarray(u, dtype=float)
    dW = np.atleast_1d(np.asarray(dW, dtype=float))
    drift = p.A * x + p.B @ u
    sig = p.C * x + p.D @ u
    return float(x + drift * dt + sig @ dW)


def exploratory_coefficients(x: float, pol: PolicyParams, p: ModelParams):
    """Drift and per-channel volatility of the policy-averaged dynamics.

    drift = A x + B^T (phi x);
    sigma_j = sqrt((C_j x + D_j^T phi x)^2 + D_j^T Gamma D_j),
    the Gaussian-policy closed forms of the relaxed coefficients.
    """
    mean_u = pol.phi * x
    drift = float(p.A * x + p.B @ mean_u)
    lin = p.C * x + p.D @ mean_u
    quad = np.einsum("ji,ik,jk->j", p.D, pol.Gamma, p.D)
    return drift, np.sqrt(lin * lin + quad)


def rollout(pol: PolicyParams, dt: float, p: ModelParams, rng: RngStream) -> Trajectory:
    """Simulate one episode of length floor(T/dt) steps under the policy.

    Raises NonFinite if the state overflows (divergent policy); the noise
    block is consumed in full before stepping, so a raised episode leaves the
    stream in the same position as a completed one.
    """
    K = n_steps(p.T, dt)
    l, m = p.l, p.m
    L = cholesky_factor(pol.Gamma)
    block = rng.standard_normal((K, l + m))
    xi = block[:, :l]
    dW = block[:, l:] * np.sqrt(dt)
    states = np.empty(K + 1)
    actions = np.empty((K, l))
    x = p.x0
    states[0] = x
    for k in range(K):
        u = pol.phi * x + L @ xi[k]
        actions[k] = u
        x = x + (p.A * x + p.B @ u) * dt + (p.C * x + p.D @ u) @ dW[k]
        states[k + 1] = x
    if not np.isfinite(states).all():
        raise NonFinite("state overflowed to non-finite during rollout")
    times = np.arange(K + 1) * dt
    return Trajectory(dt=dt, times=times, states=states, actions=actions)
