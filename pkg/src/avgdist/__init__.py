"""Distributional bias evaluation for average-reward Markov reward processes.

State-indexed bias laws are represented by categorical weights on a fixed
grid and identified up to a common translation. The package provides the
exact and projected evaluation operators, centered and gain-coupled
stochastic iterations with residual diagnostics, two-phase step-size
schedules with their explicit constants, and an experiment CLI.
"""

__version__ = "0.1.0"

from .categorical import (
    ExactLawFamily,
    SupportGrid,
    align_common_shift,
    coeff_mean,
    cramer,
    cramer_exact,
    cramer_sup,
    cramer_sup_exact,
    cumulative,
    equal_up_to_translation,
    project,
    shift_project,
    uniform_family,
)
from .mrp import (
    MarkovRewardProcess,
    SamplerConfig,
    ScalarSolution,
    StationaryDistribution,
    Transition,
    TransitionSampler,
    center,
    deterministic_rewards,
    expected_reward_vector,
    gain,
    solve_poisson,
    stationary_distribution,
    validate,
)
from .operators import (
    OperatorContext,
    apply_G,
    apply_G_g,
    apply_T,
    apply_T_g,
    augmented_update,
    gain_error,
    mean_field,
    one_sample_backup,
    one_sample_backup_gain,
    product_metric,
    residual_G,
    residual_mean_field,
    residual_product,
    synchronous_backup,
)
from .recursions import (
    IterateTrace,
    RunConfig,
    run,
    run_ablation_g0,
    run_exact_km,
    run_skm_coupled,
    run_skm_iid,
    run_skm_markov,
)
from .schedules import (
    StepSchedule,
    TauAccumulator,
    TwoPhaseConstants,
    constant_schedule,
    iid_constants,
    markov_two_phase_info,
    polynomial_schedule,
    rate_guide,
    tau,
    threshold_iteration,
    two_phase_iid_schedule,
    two_phase_markov_schedule,
)
