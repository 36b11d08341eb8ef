"""Compiled kernels for the estimation hot path.

Everything here is an implementation detail of :mod:`armasel.estimation`:
a Durbin-Levinson expansion, the conditional-sum-of-squares recursion, a
Toeplitz-structured exact-likelihood evaluation, and a bounded
Nelder-Mead simplex loop over the partial-autocorrelation box.  The
Python-level modules own validation and the public API; these kernels
assume clean inputs.

All kernels are compiled without fastmath so results are bitwise
reproducible across runs and across worker processes.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# Nelder-Mead shape parameters (reflection, expansion, contraction, shrink)
_RHO = 1.0
_CHI = 2.0
_PSI = 0.5
_SIG = 0.5

# objective selectors for _nelder_mead
OBJ_CSS = 0
OBJ_PROFILE_DEVIANCE = 1


@njit(cache=True)
def dl_expand(pacf, out):
    """Durbin-Levinson: partial autocorrelations -> AR coefficients, in place."""
    k = pacf.shape[0]
    for m in range(k):
        pim = pacf[m]
        half = m // 2
        for j in range(half):
            a = out[j]
            b = out[m - 1 - j]
            out[j] = a - pim * b
            out[m - 1 - j] = b - pim * a
        if m % 2 == 1:
            out[half] = out[half] - pim * out[half]
        out[m] = pim


@njit(cache=True)
def css_value(phi, theta, y, eps):
    """Conditional sum of squares; eps is scratch of length len(y)."""
    n = y.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    s = 0.0
    for t in range(n):
        v = y[t]
        kp = p if p < t else t
        for i in range(kp):
            v -= phi[i] * y[t - 1 - i]
        kq = q if q < t else t
        for j in range(kq):
            v += theta[j] * eps[t - 1 - j]
        eps[t] = v
        s += v * v
    return s


@njit(cache=True)
def acvf_unit(phi, theta, max_lag):
    """Unit-innovation autocovariances gamma(0..max_lag); mirrors theoretical_acvf."""
    p = phi.shape[0]
    q = theta.shape[0]
    vartheta = np.empty(q + 1)
    vartheta[0] = 1.0
    for j in range(1, q + 1):
        vartheta[j] = -theta[j - 1]
    psi = np.zeros(q + 1)
    psi[0] = 1.0
    for j in range(1, q + 1):
        acc = vartheta[j]
        top = j if j < p else p
        for i in range(1, top + 1):
            acc += phi[i - 1] * psi[j - i]
        psi[j] = acc

    r = p if p > q else q
    rhs = np.zeros(r + 1)
    for h in range(q + 1):
        acc = 0.0
        for j in range(h, q + 1):
            acc += vartheta[j] * psi[j - h]
        rhs[h] = acc
    a = np.eye(r + 1)
    for h in range(r + 1):
        for i in range(1, p + 1):
            d = h - i if h >= i else i - h
            a[h, d] -= phi[i - 1]
    head = np.linalg.solve(a, rhs)

    gamma = np.empty(max_lag + 1)
    top = r if r < max_lag else max_lag
    for h in range(top + 1):
        gamma[h] = head[h]
    for h in range(r + 1, max_lag + 1):
        acc = 0.0
        for i in range(1, p + 1):
            acc += phi[i - 1] * gamma[h - i]
        gamma[h] = acc
    return gamma


@njit(cache=True)
def toeplitz_gaussian_parts(gamma, y):
    """(log|V|, y'V^{-1}y) for Toeplitz V built from gamma, via Levinson recursion.

    Factorises V through the one-step prediction decomposition: v_t is the
    t-th prediction error variance and y_t - yhat_t the innovation, so
    log|V| = sum log v_t and the quadratic form is sum (y_t - yhat_t)^2 / v_t.
    O(n^2) time, O(n) space.  Returns (nan, nan) when the recursion leaves
    the positive-definite cone.
    """
    n = y.shape[0]
    a = np.zeros(n)  # current prediction coefficients a_1..a_t
    v = gamma[0]
    if not (v > 0.0):
        return (np.nan, np.nan)
    logdet = np.log(v)
    quad = y[0] * y[0] / v
    for t in range(1, n):
        acc = gamma[t]
        for j in range(1, t):
            acc -= a[j - 1] * gamma[t - j]
        k = acc / v
        half = (t - 1) // 2
        for j in range(half):
            x1 = a[j]
            x2 = a[t - 2 - j]
            a[j] = x1 - k * x2
            a[t - 2 - j] = x2 - k * x1
        if (t - 1) % 2 == 1:
            a[half] = a[half] - k * a[half]
        a[t - 1] = k
        v = v * (1.0 - k * k)
        if not (v > 0.0):
            return (np.nan, np.nan)
        logdet += np.log(v)
        pred = 0.0
        for j in range(1, t + 1):
            pred += a[j - 1] * y[t - j]
        e = y[t] - pred
        quad += e * e / v
    return (logdet, quad)


@njit(cache=True)
def _objective(kind, x, p, q, y, phi, theta, eps):
    """Dispatch: 0 = conditional sum of squares, 1 = exact profile deviance."""
    dl_expand(x[:p], phi)
    dl_expand(x[p:], theta)
    if kind == OBJ_CSS:
        return css_value(phi, theta, y, eps)
    n = y.shape[0]
    gamma = acvf_unit(phi, theta, n - 1)
    logdet, quad = toeplitz_gaussian_parts(gamma, y)
    if np.isnan(logdet):
        return np.inf
    return np.log(quad / n) + logdet / n


@njit(cache=True)
def nelder_mead(kind, y, p, q, x0, bound, maxiter, ftol_rel, step):
    """Bounded Nelder-Mead over the PACF box [-bound, bound]^(p+q).

    Convergence is declared when the simplex objective spread falls below
    ftol_rel * (1 + |best|) and the coordinate spread below
    sqrt(ftol_rel) * (1 + max|coordinate|).  Iterates are clipped to the
    box, which keeps every evaluation stationary/invertible.

    Returns (x_best, f_best, converged, nfev).
    """
    d = p + q
    phi = np.empty(p)
    theta = np.empty(q)
    eps = np.empty(y.shape[0])

    sim = np.empty((d + 1, d))
    fsim = np.empty(d + 1)
    for i in range(d):
        xi = x0[i]
        if xi > bound:
            xi = bound
        elif xi < -bound:
            xi = -bound
        sim[0, i] = xi
    for v in range(d):
        for i in range(d):
            sim[v + 1, i] = sim[0, i]
        xv = sim[0, v] + step
        if xv > bound:
            xv = sim[0, v] - step
        sim[v + 1, v] = xv
    for v in range(d + 1):
        fsim[v] = _objective(kind, sim[v], p, q, y, phi, theta, eps)
    nfev = d + 1

    xbar = np.empty(d)
    xr = np.empty(d)
    xe = np.empty(d)
    xc = np.empty(d)
    converged = False

    for _ in range(maxiter):
        order = np.argsort(fsim)
        sim = sim[order]
        fsim = fsim[order]

        fspread = 0.0
        xspread = 0.0
        xscale = 0.0
        for v in range(1, d + 1):
            df = abs(fsim[v] - fsim[0])
            if df > fspread:
                fspread = df
            for i in range(d):
                dx = abs(sim[v, i] - sim[0, i])
                if dx > xspread:
                    xspread = dx
        for i in range(d):
            ax = abs(sim[0, i])
            if ax > xscale:
                xscale = ax
        ftol = ftol_rel * (1.0 + abs(fsim[0]))
        xtol = np.sqrt(ftol_rel) * (1.0 + xscale)
        if fspread <= ftol and xspread <= xtol:
            converged = True
            break

        for i in range(d):
            s = 0.0
            for v in range(d):
                s += sim[v, i]
            xbar[i] = s / d

        for i in range(d):
            xi = xbar[i] + _RHO * (xbar[i] - sim[d, i])
            if xi > bound:
                xi = bound
            elif xi < -bound:
                xi = -bound
            xr[i] = xi
        fr = _objective(kind, xr, p, q, y, phi, theta, eps)
        nfev += 1

        shrink = False
        if fr < fsim[0]:
            for i in range(d):
                xi = xbar[i] + _RHO * _CHI * (xbar[i] - sim[d, i])
                if xi > bound:
                    xi = bound
                elif xi < -bound:
                    xi = -bound
                xe[i] = xi
            fe = _objective(kind, xe, p, q, y, phi, theta, eps)
            nfev += 1
            if fe < fr:
                for i in range(d):
                    sim[d, i] = xe[i]
                fsim[d] = fe
            else:
                for i in range(d):
                    sim[d, i] = xr[i]
                fsim[d] = fr
        elif fr < fsim[d - 1]:
            for i in range(d):
                sim[d, i] = xr[i]
            fsim[d] = fr
        elif fr < fsim[d]:
            # outside contraction
            for i in range(d):
                xi = xbar[i] + _PSI * _RHO * (xbar[i] - sim[d, i])
                if xi > bound:
                    xi = bound
                elif xi < -bound:
                    xi = -bound
                xc[i] = xi
            fc = _objective(kind, xc, p, q, y, phi, theta, eps)
            nfev += 1
            if fc <= fr:
                for i in range(d):
                    sim[d, i] = xc[i]
                fsim[d] = fc
            else:
                shrink = True
        else:
            # inside contraction
            for i in range(d):
                xc[i] = xbar[i] - _PSI * (xbar[i] - sim[d, i])
            fc = _objective(kind, xc, p, q, y, phi, theta, eps)
            nfev += 1
            if fc < fsim[d]:
                for i in range(d):
                    sim[d, i] = xc[i]
                fsim[d] = fc
            else:
                shrink = True
        if shrink:
            for v in range(1, d + 1):
                for i in range(d):
                    sim[v, i] = sim[0, i] + _SIG * (sim[v, i] - sim[0, i])
                fsim[v] = _objective(kind, sim[v], p, q, y, phi, theta, eps)
            nfev += d

    best = 0
    for v in range(1, d + 1):
        if fsim[v] < fsim[best]:
            best = v
    return sim[best].copy(), fsim[best], converged, nfev
