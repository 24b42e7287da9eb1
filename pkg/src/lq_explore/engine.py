"""Vectorized multi-run engine for the l = m = 1 experiments.

Runs R independent seeds in lockstep: state, policy parameters and update
accumulators are (R,) arrays, the episode loop is vectorized across runs.
Each run keeps its own generator (seeded base_seed + run index) and consumes
one (K, l + m) noise block per iteration in the same order as the scalar
reference loop, so a run's results do not depend on which batch it sits in,
and paired algorithms fed the same seeds see identical noise.

Divergent episodes (non-finite state or update summand) are recorded and
their data-driven updates skipped; projections keep every iterate bounded, so
a batch survives pathological random environments.

Restricted to the experiment setting: scalar control, one noise channel,
constant critic (k1 == 1, k3 == 0); the model-based mode additionally
requires a fixed time step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .actor_critic import GAMMA_PD_FLOOR, CriticKind, CriticParameterization
from .baselines import MB_GAMMA_EXPONENT, CumulativeLS
from .learner import C_GAMMA_LAMBDA_SCALE, DT_FIXED, ScheduleSet
from .oracle import a_scalar_batch, f_scalar_batch, g_scalar_batch
from .sde import n_steps

MODE_ADAPTIVE = "adaptive"
MODE_FIXED = "fixed"
MODE_MODEL_BASED = "model_based"

_NOISE_BUDGET_BYTES = 128 * 2 ** 20


@dataclass
class BatchSpec:
    """One vectorized experiment arm."""

    mode: str
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    phi0: np.ndarray
    Gamma0: np.ndarray
    gamma0: np.ndarray
    n_iters: int
    sch: ScheduleSet
    Q: float = 1.0
    H: float = 1.0
    x0: float = 1.0
    T: float = 1.0
    prior_estimate: float = 10.0      # model-based initial A/B/C/D estimates
    mb_Gamma0: float = 0.5            # model-based exploration scale
    mb_Gamma_exponent: float = MB_GAMMA_EXPONENT
    par: CriticParameterization = field(default_factory=CriticParameterization)


@dataclass
class BatchResult:
    """Thinned per-run trajectories plus per-run oracle references."""

    checkpoints: np.ndarray        # (n_ck,) iteration indices
    phi: np.ndarray                # (n_ck, R)
    Gamma: np.ndarray
    gamma: np.ndarray
    instant_regret: np.ndarray
    cum_regret: np.ndarray
    status: np.ndarray             # (n_ck, R) uint8, 0 = ok, 1 = diverged
    phi_star: np.ndarray           # (R,)
    diverged_total: np.ndarray     # (R,) per-run diverged episode count


def default_checkpoints(n_iters: int) -> np.ndarray:
    """Record thinning: every n <= 1e3, every 10th to 1e4, every 100th beyond."""
    n = np.arange(n_iters)
    keep = (n <= 1000) | ((n <= 10_000) & (n % 10 == 0)) | (n % 100 == 0)
    if n_iters > 0:
        keep[n_iters - 1] = True
    return n[keep]


def make_generators(base_seed: int, n_runs: int) -> list:
    """One independent stream per run, seeded base_seed + run_index."""
    return [np.random.default_rng(int(base_seed) + r) for r in range(n_runs)]


def _noise_chunks(Ks: np.ndarray, R: int) -> list:
    """Partition iterations into chunks whose flat noise fits the budget.

    Returns (start, end, flat_size) triples; each run draws one flat block of
    2 * sum(K_n) normals per chunk, which matches the per-iteration (K, 2)
    block draws value for value.
    """
    budget_vals = max(2 * int(Ks.max()), _NOISE_BUDGET_BYTES // (8 * R))
    chunks = []
    start = 0
    size = 0
    for n, K in enumerate(Ks):
        need = 2 * int(K)
        if size + need > budget_vals and size > 0:
            chunks.append((start, n, size))
            start, size = n, 0
        size += need
    chunks.append((start, len(Ks), size))
    return chunks


def run_batch(spec: BatchSpec, gens: list, checkpoints: Optional[np.ndarray] = None) -> BatchResult:
    if spec.par.kind is not CriticKind.CONSTANT_ORACLE_FREE:
        raise NotImplementedError("vectorized engine supports the constant critic only")
    if spec.mode == MODE_MODEL_BASED and spec.sch.dt_mode != DT_FIXED:
        raise NotImplementedError("model-based engine requires a fixed time step")
    R = len(gens)
    A, B, C, D = (np.asarray(v, dtype=float) for v in (spec.A, spec.B, spec.C, spec.D))
    Q, H, x0, T = spec.Q, spec.H, spec.x0, spec.T
    sch = spec.sch
    dts = np.array([sch.dt_n(n) for n in range(spec.n_iters)])
    Ks = np.array([n_steps(T, d) for d in dts], dtype=np.int64)
    if checkpoints is None:
        checkpoints = default_checkpoints(spec.n_iters)
    n_ck = len(checkpoints)
    ck_pos = {int(n): i for i, n in enumerate(checkpoints)}

    ddt = D * D
    phi_star = -(B + C * D) / ddt
    a_star = a_scalar_batch(phi_star, A, B, C, D)
    jbar_opt = f_scalar_batch(a_star, Q, H, x0, T)
    c_gamma = sch.c_gamma if sch.c_gamma is not None else C_GAMMA_LAMBDA_SCALE * ddt
    c_gamma = np.broadcast_to(np.asarray(c_gamma, dtype=float), (R,))

    phi = np.broadcast_to(np.asarray(spec.phi0, dtype=float), (R,)).copy()
    Gam = np.broadcast_to(np.asarray(spec.Gamma0, dtype=float), (R,)).copy()
    gam = np.broadcast_to(np.asarray(spec.gamma0, dtype=float), (R,)).copy()

    out = BatchResult(
        checkpoints=checkpoints,
        phi=np.empty((n_ck, R)), Gamma=np.empty((n_ck, R)), gamma=np.empty((n_ck, R)),
        instant_regret=np.empty((n_ck, R)), cum_regret=np.empty((n_ck, R)),
        status=np.zeros((n_ck, R), dtype=np.uint8),
        phi_star=phi_star, diverged_total=np.zeros(R, dtype=np.int64),
    )

    mb = CumulativeLS(R, spec.prior_estimate) if spec.mode == MODE_MODEL_BASED else None
    if mb is not None:
        phi = _project_phi(mb.plugin_gain(), sch, 0)
        Gam = np.full(R, spec.mb_Gamma0)
    fixed_Gamma0 = Gam.copy() if spec.mode == MODE_FIXED else None

    cum = np.zeros(R)
    log2pie = np.log(2.0 * np.pi * np.e)
    X = np.empty((int(Ks.max()) + 1, R)) if spec.n_iters else None

    chunks = _noise_chunks(Ks, R) if spec.n_iters else []
    buf = None

    with np.errstate(over="ignore", invalid="ignore"):
        for start, end, flat in chunks:
            if buf is None or buf.shape[0] < flat:
                buf = np.empty((flat, R))
            for r, g in enumerate(gens):
                buf[:flat, r] = g.standard_normal(flat)
            offset = 0
            for n in range(start, end):
                dt = float(dts[n])
                K = int(Ks[n])
                # per-iteration noise views: rows alternate action / Brownian
                xi = buf[offset:offset + 2 * K:2]
                dW = buf[offset + 1:offset + 2 * K:2] * np.sqrt(dt)
                offset += 2 * K

                # oracle score of the parameters deployed this episode
                a_n = a_scalar_batch(phi, A, B, C, D)
                trG = ddt * Gam
                inst = jbar_opt - (f_scalar_batch(a_n, Q, H, x0, T)
                                   + trG * g_scalar_batch(a_n, Q, H, T))
                cum = cum + inst

                # one episode per run, all runs in lockstep
                sqrtG = np.sqrt(Gam)
                x = np.full(R, x0)
                X[0] = x
                for k in range(K):
                    u = phi * x + sqrtG * xi[k]
                    x = x + (A * x + B * u) * dt + (C * x + D * u) * dW[k]
                    X[k + 1] = x

                if spec.mode == MODE_MODEL_BASED:
                    ok = np.isfinite(X[K])
                    u_all = phi[None, :] * X[:K] + sqrtG[None, :] * xi
                    mb.add_steps(X[:K], u_all, X[1:K + 1] - X[:K], dt, ok)
                    mb.solve()
                    new_phi = _project_phi(mb.plugin_gain(), sch, n + 1)
                    new_Gam = np.full(R, spec.mb_Gamma0 * (n + 2.0) ** spec.mb_Gamma_exponent)
                    new_gam = gam
                else:
                    z = sqrtG[None, :] * xi
                    Xs = X[:K + 1] * X[:K + 1]
                    br = (-0.5 * (Xs[1:] - Xs[:-1])
                          - (0.5 * Q * dt) * Xs[:-1]
                          + (gam * (0.5 * (log2pie + np.log(Gam))) * dt)[None, :])
                    Y = np.sum(z * X[:K] * br, axis=0) / Gam
                    new_gam = np.clip(c_gamma * (K * dt) / (sch.b(n) * T),
                                      -spec.par.c_gamma_cap, spec.par.c_gamma_cap)
                    if spec.mode == MODE_ADAPTIVE:
                        Z = (0.5 * np.sum(br, axis=0) * Gam
                             - 0.5 * np.sum(z * z * br, axis=0)
                             - 0.5 * gam * Gam * (K * dt))
                        ok = np.isfinite(Y) & np.isfinite(Z)
                        new_phi = _project_phi(np.where(ok, phi + sch.a_phi(n) * Y, phi),
                                               sch, n + 1)
                        new_Gam = _project_Gamma(np.where(ok, Gam - sch.a_Gamma(n) * Z, Gam),
                                                 sch, n + 1)
                    else:  # fixed exploration: gamma frozen, Gamma on its own schedule
                        ok = np.isfinite(Y)
                        new_phi = _project_phi(np.where(ok, phi + sch.a_phi(n) * Y, phi),
                                               sch, n + 1)
                        new_Gam = fixed_Gamma0 / (n + 2)  # Gamma_n = Gamma0/(n+1), exactly
                        new_gam = gam

                out.diverged_total += (~ok).astype(np.int64)
                pos = ck_pos.get(n)
                if pos is not None:
                    out.phi[pos] = phi
                    out.Gamma[pos] = Gam
                    out.gamma[pos] = gam
                    out.instant_regret[pos] = inst
                    out.cum_regret[pos] = cum
                    out.status[pos] = (~ok).astype(np.uint8)

                phi, Gam, gam = new_phi, new_Gam, new_gam

    return out


def _project_phi(v: np.ndarray, sch: ScheduleSet, idx: int) -> np.ndarray:
    if sch.phi_box is not None:
        return np.clip(v, sch.phi_box[0], sch.phi_box[1])
    c = sch.c_phi(idx)
    return np.clip(v, -c, c)


def _project_Gamma(v: np.ndarray, sch: ScheduleSet, idx: int) -> np.ndarray:
    if sch.Gamma_interval is not None:
        lo, hi = sch.Gamma_interval
        lo = min(max(lo, 1.0 / sch.b(idx), GAMMA_PD_FLOOR), hi)
        return np.clip(v, lo, hi)
    return np.clip(v, 1.0 / sch.b(idx), sch.c_Gamma(idx))
