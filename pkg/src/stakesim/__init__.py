"""Simulator and analytics for stake evolution under proof-of-stake reward schemes."""

from .analytics import (
    AnalyticPrediction,
    BetaParams,
    SampleStats,
    beta_limit_params,
    empirical_stats,
    exact_stake_moments,
    ks_distance,
    limiting_mean_fraction,
    predict,
    predict_fraction,
    predict_mean_stake,
    predict_var_stake,
)
from .montecarlo import (
    ExperimentConfig,
    ExperimentResult,
    RecordPolicy,
    RunningMoments,
    TimeSeries,
    merge_results,
    run_experiment,
    time_series_stats,
)
from .schemes import (
    BalancedParams,
    Regime,
    RewardMatrix,
    classify_regime,
    constant_matrix,
    custom_matrix,
    frd_matrix,
)
from .urn import (
    Trajectory,
    UrnState,
    apply_reward,
    fractional_stakes,
    new_state,
    recorded_steps,
    select_proposer,
    simulate_trajectory,
    stake_vector,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticPrediction",
    "BalancedParams",
    "BetaParams",
    "ExperimentConfig",
    "ExperimentResult",
    "RecordPolicy",
    "Regime",
    "RewardMatrix",
    "RunningMoments",
    "SampleStats",
    "TimeSeries",
    "Trajectory",
    "UrnState",
    "apply_reward",
    "beta_limit_params",
    "classify_regime",
    "constant_matrix",
    "custom_matrix",
    "empirical_stats",
    "exact_stake_moments",
    "fractional_stakes",
    "frd_matrix",
    "ks_distance",
    "limiting_mean_fraction",
    "merge_results",
    "new_state",
    "predict",
    "predict_fraction",
    "predict_mean_stake",
    "predict_var_stake",
    "recorded_steps",
    "run_experiment",
    "select_proposer",
    "simulate_trajectory",
    "stake_vector",
    "time_series_stats",
]
