"""Model-selection scores: AIC, AICc, BIC, HQ and the MML87 message length.

All five criteria are oriented the same way: smaller is better.  The
classical criteria are per-observation deviance penalties; the message
length is in nats and combines the likelihood with a uniform prior over
the stationarity/invertibility region, the Fisher determinant, and the
lattice quantisation constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .arma import ArmaOrder, TimeSeries, is_invertible, is_stationary
from .estimation import FittedModel
from .fisher import fisher_logdet, fisher_matrix

CRITERIA = ("MML87", "AIC", "AICc", "BIC", "HQ")

# Optimal quantising-lattice constants: exact for dimensions 1..3, the
# asymptotic limit 1/(2*pi*e) beyond.
_KAPPA_EXACT = {
    1: 1.0 / 12.0,
    2: 5.0 / (36.0 * math.sqrt(3.0)),
    3: 19.0 / (192.0 * 2.0 ** (1.0 / 3.0)),
}
_KAPPA_ASYMPTOTIC = 1.0 / (2.0 * math.pi * math.e)


@dataclass(frozen=True)
class CriterionScore:
    """One criterion value for one candidate order; lower is preferred."""

    name: str
    value: float
    order: ArmaOrder

    def __post_init__(self):
        if self.name not in CRITERIA:
            raise ValueError(f"unknown criterion {self.name!r}")


@dataclass(frozen=True)
class MmlConfig:
    """Message-length constants.

    accuracy_quantum is the measurement precision epsilon of the data
    (its term is the same for every candidate, so rankings never depend
    on it); model_grid_size sets the uniform model prior h(k) = 1/size.
    include_constant_terms keeps those model-independent terms in the
    reported value for auditability; dropping them changes values by a
    constant and no argmin.
    """

    accuracy_quantum: float = 0.01
    model_grid_size: int = 30
    include_constant_terms: bool = True

    def __post_init__(self):
        if not (self.accuracy_quantum > 0.0):
            raise ValueError("accuracy_quantum must be positive")
        if self.model_grid_size < 1:
            raise ValueError("model_grid_size must be positive")


@dataclass(frozen=True)
class LatticeConstants:
    """kappa_k table: exact dimensions 1..3, asymptotic 1/(2 pi e) beyond."""

    exact: tuple = (_KAPPA_EXACT[1], _KAPPA_EXACT[2], _KAPPA_EXACT[3])
    asymptotic: float = _KAPPA_ASYMPTOTIC

    def value(self, k: int) -> float:
        if k < 1:
            raise ValueError("lattice dimension must be positive")
        if k <= len(self.exact):
            return self.exact[k - 1]
        return self.asymptotic


def lattice_constant(k: int) -> float:
    """Quantisation constant kappa_k of the optimal k-dimensional lattice."""
    return LatticeConstants().value(k)


@lru_cache(maxsize=None)
def _volume_fraction(p: int) -> Fraction:
    # The stationary region in coefficient space is the image of the box
    # (-1,1)^p under the Durbin-Levinson map, whose Jacobian determinant
    # factors per coordinate as (1-x)^ceil((k-1)/2) * (1+x)^floor((k-1)/2).
    # Integrating coordinate k over (-1,1) contributes
    #   M_k = 2^k * ceil((k-1)/2)! * floor((k-1)/2)! / k!
    # and the region volume is the product of the M_k.  Exact rational
    # arithmetic; the constants match the Monte-Carlo volume oracle and
    # the odd-step recursion M_1 = 2, M_{k+2} = (k+1)/(k+2) * M_k, which
    # leaves even steps unseeded -- the integral fixes M_{2j} = M_{2j-1}.
    vol = Fraction(1)
    for k in range(1, p + 1):
        a = (k - 1 + 1) // 2  # ceil((k-1)/2)
        b = (k - 1) // 2
        vol *= Fraction(2**k * math.factorial(a) * math.factorial(b), math.factorial(k))
    return vol


def stationarity_volume(p: int) -> float:
    """Lebesgue volume R_p of the stationary AR(p) coefficient region.

    R_0 = 1 (empty product), R_1 = 2, R_2 = 4, R_3 = 16/3, R_4 = 64/9.
    """
    if p < 0:
        raise ValueError("p must be non-negative")
    return float(_volume_fraction(p))


def invertibility_volume(q: int) -> float:
    """Volume of the invertible MA(q) region; identical to the AR case."""
    return stationarity_volume(q)


def log_prior(coeffs, order: ArmaOrder) -> float:
    """Log density of the uniform-over-region prior with scale prior 1/sigma2.

    log pi(beta) = -log R_p - log R_q - log sigma2.  Improper in sigma2;
    used as a density inside the message length.
    """
    if len(coeffs.phi) != order.p or len(coeffs.theta) != order.q:
        raise ValueError("coefficients do not match order")
    if not (is_stationary(coeffs.phi) and is_invertible(coeffs.theta)):
        raise ValueError("outside prior support")
    return (
        -math.log(stationarity_volume(order.p))
        - math.log(invertibility_volume(order.q))
        - math.log(coeffs.sigma2)
    )


def penalized_criterion(
    name: str, loglik: float, order: ArmaOrder, intercept_flag: int, n_obs: int
) -> CriterionScore:
    """AIC / AICc / BIC / HQ on the per-observation deviance scale.

    With g = -2 loglik / N and m = p + q + intercept_flag + 1 parameters:

        AIC  = g + 2m/N
        AICc = g + 2m/(N - m - 1)
        BIC  = g + m log(N)/N
        HQ   = g + 2m log(log N)/N

    The intercept flag is carried for completeness; this package never
    fits an intercept, so callers pass 0.
    """
    if intercept_flag not in (0, 1):
        raise ValueError("intercept_flag must be 0 or 1")
    if n_obs < 1:
        raise ValueError("n_obs must be positive")
    if name == "MML87":
        raise ValueError("MML87 is computed by message_length, not a penalty formula")
    if name not in CRITERIA:
        raise ValueError(f"unknown criterion {name!r}")

    n = float(n_obs)
    m = order.p + order.q + intercept_flag + 1
    g = -2.0 * loglik / n
    if name == "AIC":
        value = g + 2.0 * m / n
    elif name == "AICc":
        denom = n - m - 1.0
        if denom <= 0.0:
            raise ValueError("sample too small for AICc")
        value = g + 2.0 * m / denom
    elif name == "BIC":
        value = g + m * math.log(n) / n
    else:  # HQ
        if n_obs <= math.e:
            raise ValueError("sample too small for HQ")
        value = g + 2.0 * m * math.log(math.log(n)) / n
    return CriterionScore(name, value, order)


def message_length(fitted: FittedModel, series: TimeSeries, cfg: MmlConfig = None) -> CriterionScore:
    """MML87 message length of the fitted model, in nats.

    value = -log pi(beta) - loglik + (1/2) log|F(beta)|
            + (k/2)(1 + log kappa_k)
            [+ n log(1/epsilon) + log(grid size)]   (constant terms)

    with k = p + q + 1 continuous parameters.  The bracketed terms are
    identical for every candidate on a fixed dataset and are controlled
    by cfg.include_constant_terms.

    Raises
    ------
    NotPositiveDefiniteError
        When the Fisher matrix at the fitted coefficients is not
        positive definite (parameter near the boundary or a redundant
        common factor); selection treats the model as unscorable.
    """
    if cfg is None:
        cfg = MmlConfig()
    if len(series) != fitted.n_obs:
        raise ValueError("series length does not match fitted model")
    k = fitted.order.k_params
    fm = fisher_matrix(fitted.coeffs, fitted.n_obs)
    logdet_f = fisher_logdet(fm)
    kappa = lattice_constant(k)
    value = (
        -log_prior(fitted.coeffs, fitted.order)
        - fitted.loglik
        + 0.5 * logdet_f
        + 0.5 * k * (1.0 + math.log(kappa))
    )
    if cfg.include_constant_terms:
        value += -fitted.n_obs * math.log(cfg.accuracy_quantum) + math.log(cfg.model_grid_size)
    return CriterionScore("MML87", float(value), fitted.order)
