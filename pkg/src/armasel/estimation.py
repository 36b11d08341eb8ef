"""Maximum-likelihood parameter estimation for a fixed ARMA order.

The search runs in partial-autocorrelation coordinates, where the
stationarity (AR block) and invertibility (MA block) constraints become
a simple box: every iterate maps to a valid model, so the objective is
always defined.  Stage one minimises the conditional sum of squares from
multiple starts; stage two (optional, on by default) polishes the winner
on the exact profile log-likelihood.  sigma2 is always set by its
profile estimator rather than searched.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import _fastpath
from .arma import ArmaCoefficients, ArmaOrder, TimeSeries, pacf_to_ar
from .exceptions import FitError
from .likelihood import css_sum_squares, profile_loglik

_OBJECTIVE_KINDS = ("css", "exact_likelihood")
_START_BOX = 0.8  # random multi-start draws live in (-0.8, 0.8) per coordinate
_STAGE1_STEP = 0.1  # initial simplex edge for the CSS stage
_POLISH_STEP = 0.02  # initial simplex edge for the likelihood polish


@dataclass(frozen=True)
class FitConfig:
    """Search settings for :func:`fit`.

    objective_tolerance is interpreted relative to the objective scale:
    a simplex whose value spread falls below tol * (1 + |best|) (and
    whose coordinate spread falls below sqrt(tol) * (1 + max|coord|))
    counts as converged.  objective_kind "exact_likelihood" means the
    conditional-sum-of-squares search is followed by an exact-likelihood
    polish; "css" stops after the sum-of-squares stage.
    """

    max_iterations: int = 2000
    objective_tolerance: float = 1e-10
    restart_count: int = 4
    pacf_bound: float = 1.0 - 1e-4
    objective_kind: str = "exact_likelihood"
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not (self.objective_tolerance > 0.0):
            raise ValueError("objective_tolerance must be positive")
        if self.restart_count < 0:
            raise ValueError("restart_count must be non-negative")
        if not (0.0 < self.pacf_bound < 1.0):
            raise ValueError("pacf_bound must lie in (0, 1)")
        if self.objective_kind not in _OBJECTIVE_KINDS:
            raise ValueError(f"objective_kind must be one of {_OBJECTIVE_KINDS}")


@dataclass(frozen=True, eq=False)
class FittedModel:
    """Estimation result: coefficients plus fit diagnostics."""

    coeffs: ArmaCoefficients
    order: ArmaOrder
    loglik: float
    css: float
    converged: bool
    n_obs: int

    def __eq__(self, other):
        if not isinstance(other, FittedModel):
            return NotImplemented
        return (
            self.coeffs == other.coeffs
            and self.order == other.order
            and self.loglik == other.loglik
            and self.css == other.css
            and self.converged == other.converged
            and self.n_obs == other.n_obs
        )


def _multi_start_points(dim: int, config: FitConfig) -> np.ndarray:
    starts = np.zeros((1 + config.restart_count, dim))
    if config.restart_count > 0:
        ss = np.random.SeedSequence(entropy=config.seed, spawn_key=(dim,))
        rng = np.random.Generator(np.random.PCG64(ss))
        starts[1:] = rng.uniform(-_START_BOX, _START_BOX, size=(config.restart_count, dim))
    return starts


def fit(series: TimeSeries, order: ArmaOrder, config: FitConfig = FitConfig()) -> FittedModel:
    """Estimate ARMA(p, q) coefficients on a series.

    Parameters
    ----------
    series : TimeSeries
        Observations; length must be at least p + q + 2.
    order : ArmaOrder
        Candidate order; white noise (0, 0) is allowed and handled in
        closed form.
    config : FitConfig

    Returns
    -------
    FittedModel
        Stationary/invertible coefficients with sigma2 at its profile
        estimate and loglik evaluated by the exact (dense) likelihood.

    Raises
    ------
    FitError
        "insufficient data" when the series is too short;
        "fit failed" when no start produces a finite objective.
    """
    y = series.values
    n = y.size
    p, q = order.p, order.q
    if n < p + q + 2:
        raise FitError("insufficient data")

    if p == 0 and q == 0:
        sigma2, lik = profile_loglik([], [], series)
        coeffs = ArmaCoefficients([], [], sigma2)
        return FittedModel(coeffs, order, lik.loglik, css_sum_squares(coeffs, series), True, n)

    dim = p + q
    starts = _multi_start_points(dim, config)
    best_x = None
    best_f = np.inf
    best_conv = False
    for s in range(starts.shape[0]):
        x, f, conv, _ = _fastpath.nelder_mead(
            _fastpath.OBJ_CSS,
            y,
            p,
            q,
            starts[s],
            config.pacf_bound,
            config.max_iterations,
            config.objective_tolerance,
            _STAGE1_STEP,
        )
        if np.isfinite(f) and f < best_f:
            best_x, best_f, best_conv = x, f, conv
    if best_x is None:
        raise FitError("fit failed")

    converged = best_conv
    if config.objective_kind == "exact_likelihood":
        x2, f2, conv2, _ = _fastpath.nelder_mead(
            _fastpath.OBJ_PROFILE_DEVIANCE,
            y,
            p,
            q,
            best_x,
            config.pacf_bound,
            config.max_iterations,
            config.objective_tolerance,
            _POLISH_STEP,
        )
        if np.isfinite(f2):
            best_x = x2
            converged = converged and conv2

    phi = pacf_to_ar(best_x[:p])
    theta = pacf_to_ar(best_x[p:])
    sigma2, lik = profile_loglik(phi, theta, series)
    coeffs = ArmaCoefficients(phi, theta, sigma2)
    return FittedModel(coeffs, order, lik.loglik, css_sum_squares(coeffs, series), converged, n)


def with_seed(config: FitConfig, seed: int) -> FitConfig:
    """Copy of config with a different multi-start seed."""
    return dataclasses.replace(config, seed=seed)
