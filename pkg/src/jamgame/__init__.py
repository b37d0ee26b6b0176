"""Saddle points and first-order Nash equilibria for remote estimation under jamming."""

__version__ = "0.1.0"

from . import cli, gaussian, largescale, network, proactive, reactive
from .gaussian import (
    DiagonalGaussian,
    GeneralGaussian,
    ScalarGaussian,
    clipped_sq_loss,
    norm_sq_tail_moment,
    philox_rng,
    sample,
    tail_prob,
    tail_second_moment,
    whiten,
)
from .largescale import (
    CapacityFraction,
    LargeScaleSaddle,
    asymptotic_objective,
    classify_and_solve,
    lagrangian_value,
    solve_l_lambda,
    solve_l_phi,
)
from .network import (
    ChannelOutcome,
    EmpiricalEstimate,
    NetworkConfig,
    RoundPolicies,
    binomial_cdf,
    chernoff_upper_bound,
    convergence_probe,
    estimate_cost,
    jn_analytic,
    simulate_round,
)
from .proactive import (
    ConvergenceError,
    GameCosts,
    NoInteriorRoot,
    ProactiveSaddle,
    ReprSymbols,
    jammer_marginal,
    objective_tilde,
    objective_with_threshold,
    solve_phi_tilde,
    solve_saddle,
    solve_saddle_vector,
)
from .reactive import (
    ExactScalarModel,
    FneReport,
    McVectorModel,
    ReactivePolicy,
    SolverConfig,
    TraceRow,
    TransmitRegion,
    box_lp_gap,
    ccp_update,
    default_init,
    fne_index,
    project_box,
    random_init,
    solve_gda,
    solve_pga_ccp,
    transmit_region,
)

__all__ = [
    "CapacityFraction",
    "ChannelOutcome",
    "ConvergenceError",
    "DiagonalGaussian",
    "EmpiricalEstimate",
    "ExactScalarModel",
    "FneReport",
    "GameCosts",
    "GeneralGaussian",
    "LargeScaleSaddle",
    "McVectorModel",
    "NetworkConfig",
    "NoInteriorRoot",
    "ProactiveSaddle",
    "ReactivePolicy",
    "ReprSymbols",
    "RoundPolicies",
    "ScalarGaussian",
    "SolverConfig",
    "TraceRow",
    "TransmitRegion",
    "asymptotic_objective",
    "binomial_cdf",
    "box_lp_gap",
    "ccp_update",
    "chernoff_upper_bound",
    "classify_and_solve",
    "cli",
    "clipped_sq_loss",
    "convergence_probe",
    "default_init",
    "estimate_cost",
    "fne_index",
    "gaussian",
    "jammer_marginal",
    "jn_analytic",
    "lagrangian_value",
    "largescale",
    "network",
    "norm_sq_tail_moment",
    "objective_tilde",
    "objective_with_threshold",
    "philox_rng",
    "proactive",
    "project_box",
    "random_init",
    "reactive",
    "sample",
    "simulate_round",
    "solve_gda",
    "solve_l_lambda",
    "solve_l_phi",
    "solve_pga_ccp",
    "solve_phi_tilde",
    "solve_saddle",
    "solve_saddle_vector",
    "tail_prob",
    "tail_second_moment",
    "transmit_region",
    "whiten",
    "__version__",
]
