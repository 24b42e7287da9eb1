"""Comparison algorithms: fixed-exploration model-free and plug-in model-based.

The fixed learner runs the same policy-gradient loop as the adaptive one but
freezes the temperature at gamma_0 and forces the deterministic variance
schedule Gamma_n = Gamma_0 / (n+1).  The model-based learner never looks at
scores: it estimates (A, B) by least squares on drift increments and (C, D)
by least squares of squared drift residuals, then plugs the estimates into
the known optimal-gain formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import oracle
from .errors import NonFinite, SingularRegression
from .learner import IterationRecord, ScheduleSet, compute_Y_hat
from .actor_critic import CriticParameterization
from .model import CriticState, DerivedModel, ModelParams, PolicyParams
from .sde import RngStream, Trajectory, rollout

# conditioning relative to the Gram diagonal (keeps estimates exactly
# invariant under duplicating the data)
REG_RIDGE = 1e-8
DHAT_SQ_FLOOR = 1e-6

# plug-in exploration Gamma_n = MB_GAMMA0 (n+1)^{MB_GAMMA_EXPONENT}; the
# -3/4 decay keeps the diffusion-coefficient information growing like n^{1/4}
MB_GAMMA_EXPONENT = -0.75


@dataclass(frozen=True)
class ParamEstimates:
    """Point estimates of the l = m = 1 environment coefficients."""

    A_hat: float
    B_hat: float
    C_hat: float
    D_hat: float


def plugin_gain(est) -> np.ndarray:
    """Certainty-equivalence gain -(D^2)^{-1} (B + C D), D^2 floored for invertibility."""
    dd = np.maximum(np.asarray(est.D_hat) ** 2, DHAT_SQ_FLOOR)
    return -(np.asarray(est.B_hat) + np.asarray(est.C_hat) * np.asarray(est.D_hat)) / dd


class CumulativeLS:
    """Growing-design two-stage weighted least squares over all past episodes.

    Drift stage: dx/dt regressed on (x, u).  Diffusion stage: the squared
    drift residual (dx - (A x + B u) dt)^2 / dt regressed on (x^2, 2xu, u^2),
    expanded into moment sums so the residuals always use the current drift
    estimates over the full data set at O(1) cost per episode.  Vectorized
    over R parallel runs.

    Diffusion rows are inverse-scale weighted by 1/(1 + x^2 + u^2)^2,
    matching the conditional noise variance ~2 sigma^4 of the squared
    residuals, which grows with the fourth power of the state scale.  Under
    multiplicative noise the closed-loop state has exploding high moments,
    so unweighted fourth-moment sums are dominated by rare huge-|x| episodes
    and the (C, D) estimates never settle.
    """

    def __init__(self, R: int = 1, prior: float = 10.0):
        self.R = R
        self.Ah = np.full(R, float(prior))
        self.Bh = np.full(R, float(prior))
        self.Ch = np.full(R, float(prior))
        self.Dh = np.full(R, float(prior))
        self._dt = np.nan
        self.steps = np.zeros(R)
        self.drift = np.zeros((5, R))   # Sxx, Sxu, Suu, Sxy, Suy (y = dx/dt)
        self.gram = np.zeros((6, R))    # upper triangle of sum g g^T
        self.mom = np.zeros((3, 6, R))  # per regressor: dx^2, x dx, u dx, x^2, xu, u^2

    def _acc(self, acc, idx, arr, ok):
        col = np.sum(arr, axis=0)
        acc[idx] += np.where(ok, col, 0.0)  # diverged episodes contribute nothing

    def add_steps(self, x, u, dx, dt: float, ok=None):
        """x, u, dx are (K, R) step arrays (or (K,) for R = 1)."""
        x = np.asarray(x, dtype=float).reshape(-1, self.R)
        u = np.asarray(u, dtype=float).reshape(-1, self.R)
        dx = np.asarray(dx, dtype=float).reshape(-1, self.R)
        if ok is None:
            ok = np.ones(self.R, dtype=bool)
        self._dt = float(dt)
        self.steps += np.where(ok, x.shape[0], 0)
        xx, xu, uu = x * x, x * u, u * u
        self._acc(self.drift, 0, xx, ok)
        self._acc(self.drift, 1, xu, ok)
        self._acc(self.drift, 2, uu, ok)
        self._acc(self.drift, 3, x * dx / dt, ok)
        self._acc(self.drift, 4, u * dx / dt, ok)
        g = (xx, 2.0 * xu, uu)
        w2 = (1.0 / (1.0 + xx + uu)) ** 2
        pairs = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
        for s, (i, j) in enumerate(pairs):
            self._acc(self.gram, s, w2 * g[i] * g[j], ok)
        dx2 = dx * dx
        for i in range(3):
            gi = w2 * g[i]
            self._acc(self.mom[i], 0, gi * dx2, ok)
            self._acc(self.mom[i], 1, gi * x * dx, ok)
            self._acc(self.mom[i], 2, gi * u * dx, ok)
            self._acc(self.mom[i], 3, gi * xx, ok)
            self._acc(self.mom[i], 4, gi * xu, ok)
            self._acc(self.mom[i], 5, gi * uu, ok)

    def solve(self) -> np.ndarray:
        """Refresh estimates from the accumulated sums.

        Returns the per-run 'solved' mask; runs with deficient or non-finite
        designs keep their previous estimates.
        """
        Sxx, Sxu, Suu, Sxy, Suy = self.drift
        lam = REG_RIDGE * 0.5 * (Sxx + Suu)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            det = (Sxx + lam) * (Suu + lam) - Sxu * Sxu
            good = np.isfinite(det) & (det > 0) & (Sxx + Suu > 0)
            Ah = ((Suu + lam) * Sxy - Sxu * Suy) / det
            Bh = ((Sxx + lam) * Suy - Sxu * Sxy) / det
        good &= np.isfinite(Ah) & np.isfinite(Bh)
        self.Ah = np.where(good, Ah, self.Ah)
        self.Bh = np.where(good, Bh, self.Bh)

        b = np.empty((3, self.R))
        with np.errstate(invalid="ignore", over="ignore"):
            for i in range(3):
                m = self.mom[i]
                b[i] = (m[0] / self._dt
                        - 2.0 * (self.Ah * m[1] + self.Bh * m[2])
                        + self._dt * (self.Ah ** 2 * m[3]
                                      + 2.0 * self.Ah * self.Bh * m[4]
                                      + self.Bh ** 2 * m[5]))
        G = np.empty((self.R, 3, 3))
        (G[:, 0, 0], G[:, 0, 1], G[:, 0, 2],
         G[:, 1, 1], G[:, 1, 2], G[:, 2, 2]) = self.gram
        G[:, 1, 0], G[:, 2, 0], G[:, 2, 1] = G[:, 0, 1], G[:, 0, 2], G[:, 1, 2]
        tr = G[:, 0, 0] + G[:, 1, 1] + G[:, 2, 2]
        usable = good & np.isfinite(tr) & (tr > 0)
        usable &= np.all(np.isfinite(G), axis=(1, 2)) & np.all(np.isfinite(b), axis=0)
        G[usable, 0, 0] += REG_RIDGE * tr[usable] / 3.0
        G[usable, 1, 1] += REG_RIDGE * tr[usable] / 3.0
        G[usable, 2, 2] += REG_RIDGE * tr[usable] / 3.0
        G[~usable] = np.eye(3)
        b[:, ~usable] = 0.0
        beta = np.linalg.solve(G, b.T[:, :, None])[:, :, 0].T
        usable &= np.all(np.isfinite(beta), axis=0)
        Dh = np.sqrt(np.maximum(beta[2], DHAT_SQ_FLOOR))
        Ch = np.sign(beta[1]) * np.sqrt(np.maximum(beta[0], 0.0))
        self.Ch = np.where(usable, Ch, self.Ch)
        self.Dh = np.where(usable, Dh, self.Dh)
        return good

    def plugin_gain(self) -> np.ndarray:
        return plugin_gain(ParamEstimates(self.Ah, self.Bh, self.Ch, self.Dh))


def estimate_params(trajectories: Sequence[Trajectory],
                    prior: float = 10.0) -> ParamEstimates:
    """Two-stage least squares over accumulated episodes (l = m = 1).

    Raises SingularRegression when there is no data or the drift design is
    rank deficient.
    """
    acc = CumulativeLS(R=1, prior=prior)
    total = 0
    for traj in trajectories:
        x = traj.states[:-1]
        u = traj.actions[:, 0]
        dx = traj.states[1:] - traj.states[:-1]
        acc.add_steps(x, u, dx, traj.dt)
        total += len(x)
    if total == 0:
        raise SingularRegression("no trajectory data to estimate from")
    good = acc.solve()
    if not bool(good[0]):
        raise SingularRegression("drift design matrix is rank deficient")
    return ParamEstimates(A_hat=float(acc.Ah[0]), B_hat=float(acc.Bh[0]),
                          C_hat=float(acc.Ch[0]), D_hat=float(acc.Dh[0]))


def run_fixed(p: ModelParams, d: DerivedModel, sch: ScheduleSet, init: dict,
              n_iters: int, rng: RngStream,
              par: CriticParameterization = CriticParameterization()) -> list[IterationRecord]:
    """Fixed-exploration learner: gamma frozen at gamma0, Gamma_n = Gamma0/(n+1)."""
    sch = sch.resolve(d)
    phi = np.atleast_1d(np.asarray(init["phi0"], dtype=float)).copy()
    Gamma0 = np.atleast_2d(np.asarray(init["Gamma0"], dtype=float)).copy()
    gamma = float(init["gamma0"])
    theta = np.asarray(init.get("theta0", np.zeros(par.n_theta())), dtype=float)
    ph_star = oracle.phi_star(p, d)
    jopt = oracle.jbar(ph_star, np.zeros_like(d.ddt), p, d)

    records: list[IterationRecord] = []
    for n in range(n_iters):
        Gamma = Gamma0 / (n + 1)
        dt_n = sch.dt_n(n)
        cs = CriticState(theta=theta, gamma=gamma)
        pol = PolicyParams(phi=phi, Gamma=Gamma)
        regret = jopt - oracle.jbar(phi, Gamma, p, d)
        try:
            traj = rollout(pol, dt_n, p, rng)
            Y = compute_Y_hat(traj, cs, pol, p, par)
            status = "ok"
        except NonFinite:
            status = "diverged"
        records.append(IterationRecord(
            n=n, phi=phi.copy(), Gamma=Gamma.copy(), gamma=gamma,
            theta=theta.copy(), instant_regret=regret, status=status,
        ))
        spec_next = sch.projection_spec(n + 1)
        if status == "ok":
            phi = spec_next.project_phi(phi + sch.a_phi(n) * Y)
        else:
            phi = spec_next.project_phi(phi)
    return records


def run_model_based(p: ModelParams, d: DerivedModel, sch: ScheduleSet, n_iters: int,
                    rng: RngStream, prior_estimate: float = 10.0,
                    mb_Gamma0: float = 0.5,
                    mb_Gamma_exponent: float = MB_GAMMA_EXPONENT) -> list[IterationRecord]:
    """Plug-in certainty-equivalence learner.

    Per iteration: project the plug-in gain, explore with the deterministic
    schedule Gamma_n = mb_Gamma0 (n+1)^{mb_Gamma_exponent}, roll out, append
    the episode to the cumulative design, re-estimate.  Only the l = m = 1
    case.
    """
    if p.l != 1 or p.m != 1:
        raise NotImplementedError("model-based baseline is implemented for l = m = 1")
    sch = sch.resolve(d)
    acc = CumulativeLS(R=1, prior=prior_estimate)
    ph_star = oracle.phi_star(p, d)
    jopt = oracle.jbar(ph_star, np.zeros_like(d.ddt), p, d)

    records: list[IterationRecord] = []
    for n in range(n_iters):
        phi = sch.projection_spec(n).project_phi(acc.plugin_gain())
        Gamma = np.array([[mb_Gamma0 * (n + 1.0) ** mb_Gamma_exponent]])
        pol = PolicyParams(phi=phi, Gamma=Gamma)
        regret = jopt - oracle.jbar(phi, Gamma, p, d)
        try:
            traj = rollout(pol, sch.dt_n(n), p, rng)
            status = "ok"
        except NonFinite:
            traj = None
            status = "diverged"
        records.append(IterationRecord(
            n=n, phi=phi.copy(), Gamma=Gamma.copy(), gamma=0.0,
            theta=np.zeros(0), instant_regret=regret, status=status,
        ))
        if traj is not None:
            acc.add_steps(traj.states[:-1], traj.actions[:, 0],
                          traj.states[1:] - traj.states[:-1], traj.dt)
            acc.solve()
    return records
