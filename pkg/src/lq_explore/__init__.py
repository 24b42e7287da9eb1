"""Continuous-time indefinite LQ reinforcement learning with data-driven
exploration: environment, closed-form oracle, simulator, adaptive learner,
baselines and experiment harness."""

from .model import (
    CriticState,
    DerivedModel,
    ModelParams,
    PolicyParams,
    model_from_config,
    parse_config,
    sample_random_model,
    unit_model,
    validate_model,
)
from .oracle import (
    OracleSolution,
    a_of_phi,
    f_of_a,
    g_of_a,
    gamma_star_n,
    instant_regret,
    jbar,
    phi_star,
    solve,
    solve_k1,
    solve_k3,
)
from .actor_critic import (
    CriticKind,
    CriticParameterization,
    ProjectionSpec,
    entropy,
    entropy_grad_gamma_inv,
    log_density,
    project_ball,
    project_gamma,
    score_gamma_inv,
    score_phi,
    value,
)
from .sde import RngStream, Trajectory, euler_step, exploratory_coefficients, rollout, sample_action
from .learner import (
    IterationRecord,
    ScheduleSet,
    appendix_schedules,
    compute_Y_hat,
    compute_Z_hat,
    gamma_update,
    pe_update,
    train,
    validate_schedules,
)
from .baselines import ParamEstimates, estimate_params, plugin_gain, run_fixed, run_model_based
from .harness import (
    AggregateSeries,
    ExperimentConfig,
    RunLog,
    aggregate,
    loglog_slope,
    run_experiment,
)

__version__ = "0.1.0"
