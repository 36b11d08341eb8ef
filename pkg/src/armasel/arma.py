"""Core ARMA(p, q) process algebra.

Models are zero-mean Gaussian ARMA processes written as

    y_t = phi_1 y_{t-1} + ... + phi_p y_{t-p}
          + e_t - theta_1 e_{t-1} - ... - theta_q e_{t-q}

with e_t ~ N(0, sigma2) i.i.d., i.e. phi(B) y_t = theta(B) e_t with lag
polynomials phi(z) = 1 - phi_1 z - ... - phi_p z^p and
theta(z) = 1 - theta_1 z - ... - theta_q z^q.  Note the minus sign on the
MA side; some texts use the opposite convention.
"""
from __future__ import annotations

from dataclasses import InitVar, dataclass, field

import numpy as np
from scipy import signal

from .exceptions import NonInvertibleError, NonStationaryError

# Roots of the lag polynomial must lie strictly outside the unit circle by
# this margin for the process to count as stationary (resp. invertible).
ROOT_MARGIN = 1e-8


def _as_coef_array(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class ArmaOrder:
    """Candidate order (p, q).

    White noise (0, 0) is rejected unless explicitly allowed, so that
    selection grids cannot silently degenerate.
    """

    p: int
    q: int
    allow_white_noise: InitVar[bool] = False

    def __post_init__(self, allow_white_noise):
        if not (isinstance(self.p, (int, np.integer)) and isinstance(self.q, (int, np.integer))):
            raise ValueError("order components must be integers")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))
        if self.p < 0 or self.q < 0:
            raise ValueError("order components must be non-negative")
        if self.p == 0 and self.q == 0 and not allow_white_noise:
            raise ValueError("white noise order (0, 0) must be explicitly allowed")

    @property
    def k_params(self) -> int:
        """Number of continuous parameters: p + q + 1 (innovation variance)."""
        return self.p + self.q + 1

    def __str__(self) -> str:
        return f"({self.p},{self.q})"


@dataclass(frozen=True, eq=False)
class ArmaCoefficients:
    """Parameter point (phi, theta, sigma2) of an ARMA model."""

    phi: np.ndarray
    theta: np.ndarray
    sigma2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phi", _as_coef_array(self.phi, "phi"))
        object.__setattr__(self, "theta", _as_coef_array(self.theta, "theta"))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be finite and positive")

    @property
    def order(self) -> ArmaOrder:
        return ArmaOrder(len(self.phi), len(self.theta), allow_white_noise=True)

    def ar_poly(self) -> np.ndarray:
        """Coefficients of phi(z) in increasing powers: [1, -phi_1, ..., -phi_p]."""
        return np.concatenate(([1.0], -self.phi))

    def ma_poly(self) -> np.ndarray:
        """Coefficients of theta(z) in increasing powers: [1, -theta_1, ..., -theta_q]."""
        return np.concatenate(([1.0], -self.theta))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ArmaCoefficients):
            return NotImplemented
        return (
            np.array_equal(self.phi, other.phi)
            and np.array_equal(self.theta, other.theta)
            and self.sigma2 == other.sigma2
        )

    def __hash__(self):
        return hash((self.phi.tobytes(), self.theta.tobytes(), self.sigma2))

    def __repr__(self) -> str:
        return (
            f"ArmaCoefficients(phi={self.phi.tolist()}, "
            f"theta={self.theta.tolist()}, sigma2={self.sigma2})"
        )


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Observed real-valued series, optionally labelled (e.g. with dates)."""

    values: np.ndarray
    labels: tuple = field(default=None)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            raise ValueError("series values must be one-dimensional")
        if arr.size < 1:
            raise ValueError("series must contain at least one observation")
        if not np.all(np.isfinite(arr)):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "values", arr)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != arr.size:
                raise ValueError("labels length must match series length")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return np.array_equal(self.values, other.values) and self.labels == other.labels

    def slice(self, start: int, stop: int) -> "TimeSeries":
        labels = self.labels[start:stop] if self.labels is not None else None
        return TimeSeries(self.values[start:stop], labels)


def polynomial_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of 1 - c_1 z - ... - c_m z^m, after trimming trailing zero c_m."""
    c = np.asarray(coeffs, dtype=float)
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        return np.empty(0, dtype=complex)
    c = c[: nz[-1] + 1]
    # np.roots wants decreasing powers: [-c_m, ..., -c_1, 1]
    return np.roots(np.concatenate((-c[::-1], [1.0])))


def is_stationary(phi, margin: float = ROOT_MARGIN) -> bool:
    """True when all AR roots satisfy ``|z| > 1 + margin``.

    Empty phi (pure MA or white noise) is stationary by convention.
    """
    phi = _as_coef_array(phi, "phi")
    if phi.size == 0:
        return True
    roots = polynomial_roots(phi)
    if roots.size == 0:
        return True
    return bool(np.min(np.abs(roots)) > 1.0 + margin)


def is_invertible(theta, margin: float = ROOT_MARGIN) -> bool:
    """True when all MA roots satisfy ``|z| > 1 + margin``."""
    theta = _as_coef_array(theta, "theta")
    if theta.size == 0:
        return True
    roots = polynomial_roots(theta)
    if roots.size == 0:
        return True
    return bool(np.min(np.abs(roots)) > 1.0 + margin)


def pacf_to_ar(pacf) -> np.ndarray:
    """Map partial autocorrelations to AR coefficients (Levinson recursion).

    Parameters
    ----------
    pacf : array_like
        Values in the open box (-1, 1)^k.  The image is exactly the set of
        stationary AR(k) coefficient vectors, which is what makes this map
        useful as an optimisation reparameterisation.

    Returns
    -------
    ndarray
        AR coefficients phi_1..phi_k.
    """
    pi = _as_coef_array(pacf, "pacf")
    if pi.size and np.max(np.abs(pi)) >= 1.0:
        raise ValueError("partial autocorrelations must lie strictly inside (-1, 1)")
    k = pi.size
    phi = np.zeros(k)
    for m in range(k):
        prev = phi[:m].copy()
        phi[:m] = prev - pi[m] * prev[::-1]
        phi[m] = pi[m]
    return phi


def ar_to_pacf(phi) -> np.ndarray:
    """Inverse of :func:`pacf_to_ar`; requires a stationary coefficient vector."""
    phi = _as_coef_array(phi, "phi")
    k = phi.size
    pacf = np.zeros(k)
    work = phi.copy()
    for m in range(k - 1, -1, -1):
        pi = work[m]
        if not np.isfinite(pi) or abs(pi) >= 1.0:
            raise NonStationaryError("not stationary")
        pacf[m] = pi
        if m > 0:
            head = work[:m]
            work[:m] = (head + pi * head[::-1]) / (1.0 - pi * pi)
    return pacf


def simulate(coeffs: ArmaCoefficients, n: int, burn_in: int = None, seed=None) -> TimeSeries:
    """Draw a length-``n`` realisation of the process.

    Parameters
    ----------
    coeffs : ArmaCoefficients
        Must be stationary; invertibility is not required for simulation.
    n : int
        Number of observations returned, after discarding the burn-in.
    burn_in : int, optional
        Presample length discarded to wash out the zero initial state.
        Defaults to ``10 * (p + q + 1) + 100``.
    seed : int or numpy.random.Generator or numpy.random.SeedSequence, optional
        Source of randomness; fixed seeds give reproducible draws.

    Returns
    -------
    TimeSeries
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not is_stationary(coeffs.phi):
        raise NonStationaryError("simulation requires stationarity")
    p, q = len(coeffs.phi), len(coeffs.theta)
    if burn_in is None:
        burn_in = 10 * (p + q + 1) + 100
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    eps = rng.standard_normal(n + burn_in) * np.sqrt(coeffs.sigma2)
    # y solves phi(B) y = theta(B) e, i.e. filter e by theta(z)/phi(z)
    y = signal.lfilter(coeffs.ma_poly(), coeffs.ar_poly(), eps)
    return TimeSeries(y[burn_in:])


def residuals_css(coeffs: ArmaCoefficients, series: TimeSeries) -> np.ndarray:
    """Conditional (zero presample) one-step residuals.

    Runs the defining recursion forward with y_t = e_t = 0 for t < 0:

        e_t = y_t - sum_i phi_i y_{t-i} + sum_j theta_j e_{t-j}

    Returns
    -------
    ndarray
        Residual sequence e_1..e_N, same length as the series.
    """
    y = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    # e solves theta(B) e = phi(B) y, the inverse filter of simulate()
    return signal.lfilter(coeffs.ar_poly(), coeffs.ma_poly(), y)


def theoretical_acvf(coeffs: ArmaCoefficients, max_lag: int) -> np.ndarray:
    """Autocovariances gamma(0..max_lag) of the stationary process.

    The first max(p, q) + 1 values solve the linear moment equations

        gamma(h) - sum_i phi_i gamma(|h - i|) = sigma2 * sum_{j >= h} vartheta_j psi_{j-h}

    where vartheta_0 = 1, vartheta_j = -theta_j and psi are the MA(inf)
    weights; higher lags follow the homogeneous AR recursion
    gamma(h) = sum_i phi_i gamma(h - i).

    Parameters
    ----------
    coeffs : ArmaCoefficients
        Must be stationary.
    max_lag : int
        Largest lag required (>= 0).

    Returns
    -------
    ndarray
        gamma(0), ..., gamma(max_lag), scaled by sigma2.
    """
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if not is_stationary(coeffs.phi):
        raise NonStationaryError("not stationary")
    phi, theta = coeffs.phi, coeffs.theta
    p, q = phi.size, theta.size
    vartheta = np.concatenate(([1.0], -theta))

    # psi_0..psi_q from psi_j = vartheta_j + sum_{i<=min(j,p)} phi_i psi_{j-i}
    psi = np.zeros(q + 1)
    psi[0] = 1.0
    for j in range(1, q + 1):
        acc = vartheta[j]
        for i in range(1, min(j, p) + 1):
            acc += phi[i - 1] * psi[j - i]
        psi[j] = acc

    r = max(p, q)
    rhs = np.zeros(r + 1)
    for h in range(q + 1):
        rhs[h] = np.dot(vartheta[h:], psi[: q + 1 - h])
    A = np.eye(r + 1)
    for h in range(r + 1):
        for i in range(1, p + 1):
            A[h, abs(h - i)] -= phi[i - 1]
    gamma_head = np.linalg.solve(A, rhs)

    if max_lag <= r:
        gamma = gamma_head[: max_lag + 1]
    elif p == 0:
        # pure MA: covariances vanish beyond lag q
        gamma = np.concatenate((gamma_head, np.zeros(max_lag - r)))
    else:
        a = np.concatenate(([1.0], -phi))
        zi = signal.lfiltic([1.0], a, gamma_head[::-1][:p])
        ext, _ = signal.lfilter([1.0], a, np.zeros(max_lag - r), zi=zi)
        gamma = np.concatenate((gamma_head, ext))
    return coeffs.sigma2 * gamma
