"""Historical-control priors for binomial trials."""

from ._core import (
    AggregatedOC,
    BetaComponent,
    BetaMixture,
    NormalDist,
    NormalStudy,
    NumericalError,
    OCRow,
    ScenarioSpec,
    StudyResult,
    TrialDesign,
    bias_model_posterior,
    build_prior,
    conditional_power_prior,
    decision,
    default_methods,
    delta_log_marginal_likelihood,
    eb_combined,
    eb_pooled,
    eb_separate,
    fb_power_prior,
    fit_beta_mixture,
    map_predictive_prior,
    normal_map_prior,
    normal_power_posterior,
    oc_curve,
    prior_sample_size,
    prob_treatment_better,
    robustify,
    run_cli,
    run_scenario,
    theta_grid,
)

__all__ = [name for name in dir() if not name.startswith("_")]
