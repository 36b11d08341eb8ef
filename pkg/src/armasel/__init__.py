"""ARMA order selection by minimum message length and classical criteria.

The package fits zero-mean Gaussian ARMA(p, q) models by exact maximum
likelihood, scores candidate orders under MML87, AIC, AICc, BIC and HQ,
and benchmarks the criteria against each other by rolling one-step
forecasts on simulated and observed series.
"""

__version__ = "0.1.0"

from .arma import (
    ArmaCoefficients,
    ArmaOrder,
    TimeSeries,
    ar_to_pacf,
    is_invertible,
    is_stationary,
    pacf_to_ar,
    residuals_css,
    simulate,
    theoretical_acvf,
)
from .criteria import CriterionScore, MmlConfig, message_length, penalized_criterion
from .estimation import FitConfig, FittedModel, fit
from .exceptions import (
    ArmaError,
    FitError,
    NonInvertibleError,
    NonStationaryError,
    NotPositiveDefiniteError,
)
from .experiments import (
    EXPERIMENT_FIT_PROFILE,
    DgpSpec,
    ExperimentConfig,
    SegmentationSpec,
    ingest_csv,
    run_financial_experiment,
    run_simulated_experiment,
    segment_series,
)
from .fisher import FisherMatrix, fisher_logdet, fisher_matrix
from .likelihood import build_covariance, css_sum_squares, exact_loglik, sigma2_profile
from .report import ExperimentReport, ScenarioResult, emit_report, merge_reports
from .selection import (
    BacktestResult,
    CandidateGrid,
    SelectionResult,
    compare_criteria,
    rolling_forecast,
    select,
)

__all__ = [
    "EXPERIMENT_FIT_PROFILE",
    "ArmaCoefficients",
    "ArmaError",
    "ArmaOrder",
    "BacktestResult",
    "CandidateGrid",
    "CriterionScore",
    "DgpSpec",
    "ExperimentConfig",
    "ExperimentReport",
    "FisherMatrix",
    "FitConfig",
    "FitError",
    "FittedModel",
    "MmlConfig",
    "NonInvertibleError",
    "NonStationaryError",
    "NotPositiveDefiniteError",
    "ScenarioResult",
    "SegmentationSpec",
    "SelectionResult",
    "TimeSeries",
    "ar_to_pacf",
    "build_covariance",
    "compare_criteria",
    "css_sum_squares",
    "emit_report",
    "exact_loglik",
    "fisher_logdet",
    "fisher_matrix",
    "fit",
    "ingest_csv",
    "is_invertible",
    "is_stationary",
    "merge_reports",
    "message_length",
    "pacf_to_ar",
    "penalized_criterion",
    "residuals_css",
    "rolling_forecast",
    "run_financial_experiment",
    "run_simulated_experiment",
    "segment_series",
    "select",
    "sigma2_profile",
    "simulate",
    "theoretical_acvf",
]
