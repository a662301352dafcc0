"""Bayesian revenue-per-visitor decisions for A/B/n experiments."""
from .decision import (
    Decision,
    RpvSampleMatrix,
    VariantState,
    Verdict,
    compute_expected_loss,
    compute_pbb,
    decide,
    derive_rpv_samples,
)
from .diagnostics import PpcResult, posterior_predictive_check
from .estimators import BayesianRpvTest, PeekingZTest
from .frequentist import ZTestResult, peeking_step, two_proportion_z
from .posterior import (
    BetaPosterior,
    NigPosterior,
    StudentTParams,
    ValueSummary,
    marginal_mean,
    sample_conversion,
    sample_mean_value,
    update_conversion,
    update_value,
)
from .simulation import (
    PRESETS,
    AggregateReport,
    EngineConfig,
    Outcome,
    RunRecord,
    ScenarioConfig,
    VariantTruth,
    gamma_params_from_moments,
    run_experiment,
    run_study,
    simulate_day,
)

__all__ = [
    "AggregateReport", "BayesianRpvTest", "BetaPosterior", "Decision", "EngineConfig", "NigPosterior",
    "Outcome", "PRESETS", "PeekingZTest", "PpcResult", "RpvSampleMatrix", "RunRecord", "ScenarioConfig",
    "StudentTParams", "ValueSummary", "VariantState", "VariantTruth", "Verdict", "ZTestResult",
    "compute_expected_loss", "compute_pbb", "decide", "derive_rpv_samples", "gamma_params_from_moments",
    "marginal_mean", "peeking_step", "posterior_predictive_check", "run_experiment", "run_study",
    "sample_conversion", "sample_mean_value", "simulate_day", "two_proportion_z", "update_conversion",
    "update_value",
]
