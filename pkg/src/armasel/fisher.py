"""Expected Fisher information of the ARMA parameter vector.

The coefficient block comes from the stationary derivative processes of
the residual recursion theta(B) e_t = phi(B) y_t:

    d e_t / d phi_k = -u_{t-k},   phi(B) u_t = e_t   (AR(p))
    d e_t / d theta_j = +v_{t-j}, theta(B) v_t = e_t  (AR(q))

so per-observation information entries are (co)variances of u and v,
which do not depend on sigma2.  The sign of the cross block follows
from the derivative identities above; it was validated against a
simulated numeric Hessian of the exact log-likelihood and is the
authoritative convention here.  The sigma2 diagonal entry is the
standard Gaussian n / (2 sigma^4) with zero cross terms (asymptotic
orthogonality); the vanishing second-derivative term of log|Sigma| is
dropped, so this is the asymptotic expected information.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal

from .arma import ArmaCoefficients, polynomial_roots, theoretical_acvf
from .exceptions import NonStationaryError, NotPositiveDefiniteError

# Margin on the root modulus of either lag polynomial below which the
# derivative processes are treated as (numerically) nonstationary.
DERIV_ROOT_MARGIN = 1e-5

# psi-weight series are truncated once the geometric tail drops below this.
_PSI_TAIL = 1e-14
_PSI_MIN_TERMS = 64


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    """Expected information of (phi_1..phi_p, theta_1..theta_q, sigma2)."""

    entries: np.ndarray
    n: int

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("Fisher entries must form a square matrix")
        object.__setattr__(self, "entries", arr)
        if self.n < 1:
            raise ValueError("n must be positive")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _min_root_modulus(poly_coeffs: np.ndarray) -> float:
    roots = polynomial_roots(poly_coeffs)
    return float(np.min(np.abs(roots))) if roots.size else np.inf


def _psi_weights(poly_coeffs: np.ndarray, m: int) -> np.ndarray:
    """Impulse response of 1/c(B) for c(z) = 1 - c_1 z - ... - c_k z^k."""
    impulse = np.zeros(m)
    impulse[0] = 1.0
    return signal.lfilter([1.0], np.concatenate(([1.0], -poly_coeffs)), impulse)


def derivative_process_covariances(coeffs: ArmaCoefficients, max_lag: int):
    """Covariances of the derivative processes u and v, normalised to sigma2 = 1.

    Parameters
    ----------
    coeffs : ArmaCoefficients
        Stationary and invertible; roots of both polynomials must clear
        the unit circle by DERIV_ROOT_MARGIN.
    max_lag : int
        Largest lag needed.

    Returns
    -------
    (gamma_u, gamma_v, gamma_uv)
        gamma_u[h], gamma_v[h] for h = 0..max_lag, and gamma_uv of length
        2*max_lag + 1 holding E[u_t v_{t-h}] at index h + max_lag for
        h = -max_lag..max_lag.
    """
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    phi, theta = coeffs.phi, coeffs.theta
    r_u, r_v = _min_root_modulus(phi), _min_root_modulus(theta)
    if not min(r_u, r_v) > 1.0 + DERIV_ROOT_MARGIN:
        raise NonStationaryError("derivative process nonstationary")

    gamma_u = theoretical_acvf(ArmaCoefficients(phi, [], 1.0), max_lag)
    gamma_v = theoretical_acvf(ArmaCoefficients(theta, [], 1.0), max_lag)

    # gamma_uv(h) = sum_b psi_u[h+b] psi_v[b]; the summand's geometric
    # tail decays at rate 1/(r_u r_v), so truncate where that bound
    # falls below _PSI_TAIL (slack factor absorbs polynomial prefactors
    # from repeated roots)
    rate = r_u * r_v
    if np.isfinite(rate):
        m = int(np.ceil(1.25 * np.log(_PSI_TAIL) / np.log(1.0 / rate))) + 16
    else:
        m = _PSI_MIN_TERMS
    m = max(m, _PSI_MIN_TERMS, max_lag + 2)
    psi_u = _psi_weights(phi, m + max_lag)
    psi_v = _psi_weights(theta, m + max_lag)
    gamma_uv = np.empty(2 * max_lag + 1)
    for h in range(-max_lag, max_lag + 1):
        if h >= 0:
            gamma_uv[h + max_lag] = np.dot(psi_u[h : h + m], psi_v[:m])
        else:
            gamma_uv[h + max_lag] = np.dot(psi_u[: m], psi_v[-h : -h + m])
    return gamma_u, gamma_v, gamma_uv


def fisher_matrix(coeffs: ArmaCoefficients, n: int) -> FisherMatrix:
    """Expected Fisher information scaled to sample size n.

    Block layout (phi, theta, sigma2):

        I[phi_k, phi_j]     = n * gamma_u(k - j)
        I[theta_k, theta_j] = n * gamma_v(k - j)
        I[phi_k, theta_j]   = -n * gamma_uv(j - k)
        I[sigma2, sigma2]   = n / (2 sigma2^2); cross terms 0
    """
    if n < 1:
        raise ValueError("n must be positive")
    p, q = len(coeffs.phi), len(coeffs.theta)
    k = p + q + 1
    entries = np.zeros((k, k))

    max_lag = max(p, q) - 1 if max(p, q) > 0 else 0
    if p > 0 or q > 0:
        gamma_u, gamma_v, gamma_uv = derivative_process_covariances(coeffs, max_lag)
        if p > 0:
            entries[:p, :p] = n * linalg.toeplitz(gamma_u[:p])
        if q > 0:
            entries[p : p + q, p : p + q] = n * linalg.toeplitz(gamma_v[:q])
        if p > 0 and q > 0:
            for i in range(p):
                for j in range(q):
                    entries[i, p + j] = -n * gamma_uv[(j - i) + max_lag]
                    entries[p + j, i] = entries[i, p + j]

    entries[k - 1, k - 1] = n / (2.0 * coeffs.sigma2**2)
    return FisherMatrix(entries, n)


def fisher_logdet(fm: FisherMatrix) -> float:
    """log-determinant via Cholesky; requires positive definiteness."""
    try:
        chol = linalg.cholesky(fm.entries, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("Fisher matrix not positive definite") from exc
    return float(2.0 * np.sum(np.log(np.diag(chol))))
