"""Active anomaly search over heterogeneous processes.

A deterministic divergence-guided probing policy and the randomized
Chernoff test for locating L anomalous cells among M, probing K at a time,
plus rate-function analysis and a reproducible Monte Carlo harness.
"""

from .chernoff import (
    ActionDistribution,
    DegenerateGameError,
    ml_estimate,
    pairwise_kl,
    rate_chernoff,
    select_chernoff,
    solve_maximin,
)
from .distributions import (
    AbsoluteContinuityError,
    DistributionError,
    DistributionSpec,
    ProcessModel,
    bernoulli,
    discrete,
    exponential,
    gaussian,
    kl_divergence,
    kl_divergence_numerical,
    log_density,
    sample,
)
from .harness import (
    ExperimentReport,
    TrialResult,
    run_experiment,
    run_sweep,
    run_trial,
    trial_seed,
)
from .policy import (
    InstanceError,
    PolicyAction,
    ProblemInstance,
    decide,
    policy_action,
    select_multi,
    select_multitarget,
    select_probes,
    select_single,
    should_stop,
)
from .rates import (
    RateReport,
    build_rate_report,
    car_oracle,
    f_bar,
    f_kappa,
    i_dgfi,
    i_m_dgfi,
    i_m_star,
    i_star,
    i_star_L,
    k_tilde,
    multitarget_rates,
    optimality_check,
    pathological_k,
    u_star,
)
from .state import SearchState, apply_observations, delta_s, init_state

__version__ = "0.1.0"

__all__ = [
    "ActionDistribution",
    "AbsoluteContinuityError",
    "DegenerateGameError",
    "DistributionError",
    "DistributionSpec",
    "ExperimentReport",
    "InstanceError",
    "PolicyAction",
    "ProblemInstance",
    "ProcessModel",
    "RateReport",
    "SearchState",
    "TrialResult",
    "apply_observations",
    "bernoulli",
    "build_rate_report",
    "car_oracle",
    "decide",
    "delta_s",
    "discrete",
    "exponential",
    "f_bar",
    "f_kappa",
    "gaussian",
    "i_dgfi",
    "i_m_dgfi",
    "i_m_star",
    "i_star",
    "i_star_L",
    "init_state",
    "k_tilde",
    "kl_divergence",
    "kl_divergence_numerical",
    "log_density",
    "ml_estimate",
    "multitarget_rates",
    "optimality_check",
    "pairwise_kl",
    "pathological_k",
    "policy_action",
    "rate_chernoff",
    "run_experiment",
    "run_sweep",
    "run_trial",
    "sample",
    "select_chernoff",
    "select_multi",
    "select_multitarget",
    "select_probes",
    "select_single",
    "should_stop",
    "solve_maximin",
    "trial_seed",
    "u_star",
]
