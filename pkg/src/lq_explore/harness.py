"""Experiment harness: seed management, run farming, aggregation, CSV output.

Four experiments, mirroring the reference setups:

  exp1  adaptive learner on the unit model (convergence-rate and regret slopes)
  exp2  plug-in model-based baseline on the unit model
  exp3  adaptive vs fixed exploration, excessive / insufficient scenarios
  exp4  adaptive vs fixed over randomized environments and initial exploration

Per-run CSV schema:   n,phi,Gamma,gamma,instant_regret,cum_regret,status
Aggregate CSV schema: n,mse_Gamma,mse_phi,median_cum_regret,runs_ok
Floats are written in shortest round-trip decimal; identical configs and
seeds reproduce byte-identical files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .engine import (
    MODE_ADAPTIVE,
    MODE_FIXED,
    MODE_MODEL_BASED,
    BatchResult,
    BatchSpec,
    default_checkpoints,
    make_generators,
    run_batch,
)
from .errors import ConfigError, DegenerateFit
from .learner import DT_FIXED, DT_THEOREM, ScheduleSet, appendix_schedules
from .model import draw_random_model, model_from_config

RUN_HEADER = "n,phi,Gamma,gamma,instant_regret,cum_regret,status"
AGG_HEADER = "n,mse_Gamma,mse_phi,median_cum_regret,runs_ok"

# (n_runs, n_iters) per experiment and scale
PRESETS = {
    ("exp1", "paper"): (100, 100_000),
    ("exp1", "small"): (20, 20_000),
    ("exp2", "paper"): (100, 100_000),
    ("exp2", "small"): (20, 20_000),
    ("exp3", "paper"): (1000, 10_000),
    ("exp3", "small"): (200, 2_000),
    ("exp4", "paper"): (10_000, 10_000),
    ("exp4", "small"): (500, 2_000),
}

SCENARIOS = {
    "excessive": dict(phi0=-1.8, gamma0=20.0, Gamma0=20.0),
    "insufficient": dict(phi0=0.0, gamma0=0.02, Gamma0=0.02),
}


@dataclass
class ExperimentConfig:
    experiment: str                      # exp1 | exp2 | exp3 | exp4
    scenario: Optional[str] = None       # exp3: excessive | insufficient
    n_runs: Optional[int] = None
    n_iters: Optional[int] = None
    base_seed: int = 1
    output_dir: Optional[str] = None
    scale: str = "paper"
    overrides: dict = field(default_factory=dict)
    write_per_run: bool = True

    def label(self) -> str:
        if self.experiment == "exp3":
            return f"exp3-{self.scenario}"
        return self.experiment


@dataclass
class RunLog:
    """One run's thinned iteration records (views into the batch arrays)."""

    n: np.ndarray
    phi: np.ndarray
    Gamma: np.ndarray
    gamma: np.ndarray
    instant_regret: np.ndarray
    cum_regret: np.ndarray
    status: np.ndarray
    phi_star: float


@dataclass
class AggregateSeries:
    n: np.ndarray
    mse_Gamma: np.ndarray        # mean over runs of |Gamma_n|^2
    mse_phi: np.ndarray          # mean over runs of |phi_n - phi*|^2
    regret_cum: np.ndarray       # median over runs of cumulative regret
    runs_ok: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    series: dict                 # arm name -> AggregateSeries
    failed_runs: dict            # arm name -> runs with zero successful episodes
    out_dir: Optional[str]


def batch_to_runlogs(res: BatchResult) -> list[RunLog]:
    return [
        RunLog(
            n=res.checkpoints, phi=res.phi[:, r], Gamma=res.Gamma[:, r],
            gamma=res.gamma[:, r], instant_regret=res.instant_regret[:, r],
            cum_regret=res.cum_regret[:, r], status=res.status[:, r],
            phi_star=float(res.phi_star[r]),
        )
        for r in range(res.phi.shape[1])
    ]


def aggregate(runs: Sequence[RunLog]) -> AggregateSeries:
    """Across-run mean of squared errors, median of cumulative regret."""
    if len(runs) == 0:
        raise ConfigError("nothing to aggregate")
    n = runs[0].n
    for r in runs:
        if not np.array_equal(r.n, n):
            raise ConfigError("runs disagree on the checkpoint grid")
    G = np.stack([r.Gamma for r in runs], axis=1)
    P = np.stack([r.phi - r.phi_star for r in runs], axis=1)
    C = np.stack([r.cum_regret for r in runs], axis=1)
    return AggregateSeries(
        n=np.asarray(n),
        mse_Gamma=np.mean(G * G, axis=1),
        mse_phi=np.mean(P * P, axis=1),
        regret_cum=np.median(C, axis=1),
        runs_ok=len(runs),
    )


def aggregate_batch(res: BatchResult) -> AggregateSeries:
    err = res.phi - res.phi_star[None, :]
    return AggregateSeries(
        n=res.checkpoints,
        mse_Gamma=np.mean(res.Gamma * res.Gamma, axis=1),
        mse_phi=np.mean(err * err, axis=1),
        regret_cum=np.median(res.cum_regret, axis=1),
        runs_ok=res.phi.shape[1],
    )


# --- log-log slope fitting ---------------------------------------------------

FIT_MAX_POINTS = 1000


def _thin_log_spaced(ns: np.ndarray, max_points: int) -> np.ndarray:
    """Indices of <= max_points entries of (sorted) ns, evenly log-spaced."""
    if len(ns) <= max_points:
        return np.arange(len(ns))
    logn = np.log10(ns)
    targets = np.linspace(logn[0], logn[-1], max_points)
    pos = np.searchsorted(logn, targets)
    pos = np.clip(pos, 1, len(ns) - 1)
    left = pos - 1
    choose_left = (targets - logn[left]) <= (logn[pos] - targets)
    return np.unique(np.where(choose_left, left, pos))


def loglog_slope(ns, values, window) -> tuple[float, float, float]:
    """OLS of log10(value) on log10(n) over the window [n_lo, n_hi].

    Thins to <= 1000 evenly log-spaced points first.  Returns
    (slope, intercept, r_squared).  Raises DegenerateFit when the window
    holds fewer than two distinct usable abscissae.
    """
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (ns >= lo) & (ns <= hi) & (ns > 0) & (values > 0) & np.isfinite(values)
    ns, values = ns[mask], values[mask]
    order = np.argsort(ns)
    ns, values = ns[order], values[order]
    if len(np.unique(ns)) < 2:
        raise DegenerateFit(f"need >= 2 distinct points in window {window}")
    idx = _thin_log_spaced(ns, FIT_MAX_POINTS)
    x = np.log10(ns[idx])
    y = np.log10(values[idx])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


# --- CSV emission ------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_run_csv(path: str, log: RunLog) -> None:
    lines = [RUN_HEADER]
    status_names = ("ok", "diverged")
    for i in range(len(log.n)):
        lines.append(
            f"{int(log.n[i])},{_fmt(log.phi[i])},{_fmt(log.Gamma[i])},"
            f"{_fmt(log.gamma[i])},{_fmt(log.instant_regret[i])},"
            f"{_fmt(log.cum_regret[i])},{status_names[int(log.status[i])]}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_aggregate_csv(path: str, agg: AggregateSeries) -> None:
    lines = [AGG_HEADER]
    for i in range(len(agg.n)):
        lines.append(
            f"{int(agg.n[i])},{_fmt(agg.mse_Gamma[i])},{_fmt(agg.mse_phi[i])},"
            f"{_fmt(agg.regret_cum[i])},{agg.runs_ok}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv_columns(path: str) -> dict:
    """Tiny reader for the two documented schemas (used by tests and demos)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        cols = {h: [] for h in header}
        for line in fh:
            for h, tok in zip(header, line.strip().split(",")):
                cols[h].append(tok)
    out = {}
    for h, vals in cols.items():
        if h == "status":
            out[h] = np.array(vals)
        else:
            out[h] = np.array([float(v) for v in vals])
    return out


# --- experiment assembly ------------------------------------------------------


def _schedule_from_overrides(ov: dict, base: ScheduleSet) -> ScheduleSet:
    """Apply the documented config keys onto a schedule set."""
    import dataclasses as _dc

    kw = {}
    for key in ("alpha", "beta", "c_gamma", "dt", "b_scale",
                "a_phi_scale", "a_Gamma_scale"):
        if key in ov:
            kw[key] = float(ov[key])
    if "dt_mode" in ov:
        mode = str(ov["dt_mode"]).lower()
        if mode not in (DT_FIXED, DT_THEOREM):
            raise ConfigError(f"dt_mode must be 'fixed' or 'theorem', got {mode!r}")
        kw["dt_mode"] = mode
    if "phi_box_lo" in ov or "phi_box_hi" in ov:
        kw["phi_box"] = (float(ov["phi_box_lo"]), float(ov["phi_box_hi"]))
    if "Gamma_lo" in ov or "Gamma_hi" in ov:
        kw["Gamma_interval"] = (float(ov["Gamma_lo"]), float(ov["Gamma_hi"]))
    return _dc.replace(base, **kw)


def _draw_exp4_setup(gens: list):
    """Per-run random environment and initial exploration levels.

    Consumes the same number of draws from every run's stream in both arms,
    keeping paired noise aligned.
    """
    R = len(gens)
    A = np.empty(R); B = np.empty(R); C = np.empty(R); D = np.empty(R)
    Gamma0 = np.empty(R); gamma0 = np.empty(R)
    for r, g in enumerate(gens):
        m = draw_random_model(g)
        A[r], B[r], C[r], D[r] = m.A, m.B[0], m.C[0], m.D[0, 0]
        Gamma0[r] = g.uniform(0.0, 5.0)
        gamma0[r] = g.uniform(0.0, 5.0)
    return A, B, C, D, Gamma0, gamma0


def _resolve_scale(cfg: ExperimentConfig) -> tuple[int, int]:
    if cfg.scale not in ("paper", "small"):
        raise ConfigError(f"scale must be 'paper' or 'small', got {cfg.scale!r}")
    runs, iters = PRESETS[(cfg.experiment, cfg.scale)]
    if cfg.n_runs is not None:
        runs = int(cfg.n_runs)
    if "n_iters" in cfg.overrides:
        iters = int(float(cfg.overrides["n_iters"]))
    if cfg.n_iters is not None:
        iters = int(cfg.n_iters)
    if runs < 1 or iters < 1:
        raise ConfigError("n_runs and n_iters must be >= 1")
    return runs, iters


def _init_value(ov: dict, key: str, default: float) -> float:
    return float(ov.get(key, default))


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run all arms of one experiment, write CSVs, return the aggregates."""
    if cfg.experiment not in ("exp1", "exp2", "exp3", "exp4"):
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    if cfg.experiment == "exp3":
        if cfg.scenario not in SCENARIOS:
            raise ConfigError("exp3 requires --scenario excessive|insufficient")
    R, n_iters = _resolve_scale(cfg)
    ov = cfg.overrides
    checkpoints = default_checkpoints(n_iters)

    # model keys default to the unit environment; exp4 draws its own models
    model = None if cfg.experiment == "exp4" else model_from_config(ov)

    arms: list[tuple[str, str]] = {
        "exp1": [("adaptive", MODE_ADAPTIVE)],
        "exp2": [("model_based", MODE_MODEL_BASED)],
        "exp3": [("adaptive", MODE_ADAPTIVE), ("fixed", MODE_FIXED)],
        "exp4": [("adaptive", MODE_ADAPTIVE), ("fixed", MODE_FIXED)],
    }[cfg.experiment]

    out_root = None
    if cfg.output_dir is not None:
        out_root = os.path.join(cfg.output_dir, cfg.label())
        os.makedirs(out_root, exist_ok=True)

    series: dict[str, AggregateSeries] = {}
    failed: dict[str, int] = {}
    for arm_name, mode in arms:
        gens = make_generators(cfg.base_seed, R)
        T = float(ov.get("T", 1.0))
        if cfg.experiment == "exp4":
            A, B, C, D, Gamma0, gamma0 = _draw_exp4_setup(gens)
            phi0 = np.full(R, _init_value(ov, "phi0", 0.0))
            sch = ScheduleSet(
                T=T, a_phi_scale=0.05, a_Gamma_scale=1.0, b_scale=20.0,
                dt_mode=DT_FIXED, dt=0.01,
                c_phi_const=100.0, c_Gamma_const=100.0,
            )
        else:
            A = np.full(R, model.A); B = np.full(R, model.B[0])
            C = np.full(R, model.C[0]); D = np.full(R, model.D[0, 0])
            T = model.T
            if cfg.experiment == "exp3":
                scen = SCENARIOS[cfg.scenario]
                phi0 = np.full(R, _init_value(ov, "phi0", scen["phi0"]))
                Gamma0 = np.full(R, _init_value(ov, "Gamma0", scen["Gamma0"]))
                gamma0 = np.full(R, _init_value(ov, "gamma0", scen["gamma0"]))
                sch = ScheduleSet(
                    T=T, a_phi_scale=0.05, a_Gamma_scale=1.0, b_scale=20.0,
                    dt_mode=DT_FIXED, dt=0.01,
                    c_phi_const=20.0, c_Gamma_const=20.0,
                )
            else:
                phi0 = np.full(R, _init_value(ov, "phi0", -1.1))
                Gamma0 = np.full(R, _init_value(ov, "Gamma0", 0.5))
                default_gamma0 = 0.0 if cfg.experiment == "exp2" else 2.0
                gamma0 = np.full(R, _init_value(ov, "gamma0", default_gamma0))
                sch = appendix_schedules(T=T)
        sch = _schedule_from_overrides(ov, sch)
        spec = BatchSpec(
            mode=mode, A=A, B=B, C=C, D=D,
            phi0=phi0, Gamma0=Gamma0, gamma0=gamma0,
            n_iters=n_iters, sch=sch,
            Q=float(ov.get("Q", 1.0)), H=float(ov.get("H", 1.0)),
            x0=float(ov.get("x0", 1.0)), T=T,
            prior_estimate=_init_value(ov, "prior_estimate", 10.0),
            mb_Gamma0=_init_value(ov, "Gamma0", 0.5),
        )
        res = run_batch(spec, gens, checkpoints)
        series[arm_name] = aggregate_batch(res)
        failed[arm_name] = int(np.sum(res.diverged_total >= n_iters))
        if out_root is not None:
            write_aggregate_csv(os.path.join(out_root, f"{arm_name}_aggregate.csv"),
                                series[arm_name])
            if cfg.write_per_run:
                run_dir = os.path.join(out_root, "runs", arm_name)
                os.makedirs(run_dir, exist_ok=True)
                for r, log in enumerate(batch_to_runlogs(res)):
                    write_run_csv(os.path.join(run_dir, f"run_{r:05d}.csv"), log)
        del res
    return ExperimentResult(config=cfg, series=series, failed_runs=failed,
                            out_dir=out_root)
