"""Divergence bounds and posterior rate studies for binned binary regression."""

from .complexity import (CoverSummary, covering_number_uniform,
                         log_covering_number_uniform,
                         log_norm_complexity_analytic,
                         log_norm_complexity_mixture, norm_complexity_grid,
                         norm_complexity_mixture,
                         parametric_norm_complexity_bound)
from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .divergence import (KL, DiscreteDensity, DivergenceOrder,
                         PiecewiseConstantMean, QuadratureError,
                         RegressionDensity, SmoothMean, d_t_squared,
                         d_t_squared_product, kl_divergence, l1_distance)
from .models import (BestApproximation, Dataset, PriorSpec, TrueModel,
                     WithinModelPrior, best_approximation, log_odds_to_mean,
                     mean_to_log_odds, model_log_prior, model_prior_mass,
                     simulate_data)
from .penalized import (BoxCandidate, PenalizedDivergenceResult,
                        box_prior_log_mass, default_delta_grid,
                        default_m_grid, penalized_divergence_upper,
                        penalized_value_at, sup_divergence_over_box)
from .posterior import (BinnedCounts, DivergenceSummary, OracleResult,
                        PosteriorState, bin_counts,
                        empirical_divergence_quantiles,
                        exact_enumeration_oracle, log_evidence,
                        model_posterior, random_oracle_config,
                        sample_posterior_density)
from .rate_bounds import (VARIANTS, RateBoundBreakdown, bound_prefactor,
                          floor_to_unit_fraction, posterior_mass_bound_rhs,
                          rate_bound)
from .rng import stream
from .study import (SlopeFit, StudyResult, StudyRow, StudySummary,
                    VariantBounds, fit_slope, format_study_csv,
                    run_rate_study, variant_bounds_for_n, write_study_csv)

__version__ = "0.1.0"

__all__ = [
    "BestApproximation",
    "BinnedCounts",
    "BoxCandidate",
    "ConfigError",
    "CoverSummary",
    "Dataset",
    "DiscreteDensity",
    "DivergenceOrder",
    "DivergenceSummary",
    "ExperimentConfig",
    "KL",
    "OracleResult",
    "PenalizedDivergenceResult",
    "PiecewiseConstantMean",
    "PosteriorState",
    "PriorSpec",
    "QuadratureError",
    "RateBoundBreakdown",
    "RegressionDensity",
    "SlopeFit",
    "SmoothMean",
    "StudyResult",
    "StudyRow",
    "StudySummary",
    "TrueModel",
    "VARIANTS",
    "VariantBounds",
    "WithinModelPrior",
    "best_approximation",
    "bin_counts",
    "bound_prefactor",
    "box_prior_log_mass",
    "covering_number_uniform",
    "d_t_squared",
    "default_delta_grid",
    "default_m_grid",
    "d_t_squared_product",
    "empirical_divergence_quantiles",
    "exact_enumeration_oracle",
    "fit_slope",
    "floor_to_unit_fraction",
    "format_study_csv",
    "kl_divergence",
    "l1_distance",
    "load_config",
    "log_covering_number_uniform",
    "log_evidence",
    "log_norm_complexity_analytic",
    "log_norm_complexity_mixture",
    "log_odds_to_mean",
    "mean_to_log_odds",
    "model_log_prior",
    "model_posterior",
    "model_prior_mass",
    "norm_complexity_grid",
    "norm_complexity_mixture",
    "parametric_norm_complexity_bound",
    "parse_config_text",
    "penalized_divergence_upper",
    "penalized_value_at",
    "posterior_mass_bound_rhs",
    "random_oracle_config",
    "rate_bound",
    "run_rate_study",
    "sample_posterior_density",
    "simulate_data",
    "stream",
    "sup_divergence_over_box",
    "variant_bounds_for_n",
    "write_study_csv",
]
