"""Hot numeric kernels.

Every kernel exists twice: a loop version compiled by numba (``*_nb``) and a
numpy version (``*_np``).  The unsuffixed names are bound to one of the two at
import time according to :data:`igcx._accel.USE_NUMBA`.  The geodesic stepper
is inherently sequential, so its fallback is the same scalar code run by the
interpreter.

Index conventions: ``dg[l, a, b] = d g_ab / d x^l`` and
``dgamma[l, k, i, j] = d Gamma^k_ij / d x^l``.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, jit

# --------------------------------------------------------------------------
# small SPD algebra


@jit
def _cholesky_inverse_nb(m):
    n = m.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        s = m[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return np.zeros((n, n)), 0.0, j
        L[j, j] = math.sqrt(s)
        for i in range(j + 1, n):
            t = m[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / L[j, j]
    # inverse of the lower factor by forward substitution
    Li = np.zeros((n, n))
    for j in range(n):
        Li[j, j] = 1.0 / L[j, j]
        for i in range(j + 1, n):
            t = 0.0
            for k in range(j, i):
                t -= L[i, k] * Li[k, j]
            Li[i, j] = t / L[i, i]
    inv = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            t = 0.0
            for k in range(j, n):
                t += Li[k, i] * Li[k, j]
            inv[i, j] = t
            inv[j, i] = t
    det = 1.0
    for i in range(n):
        det *= L[i, i]
    return inv, det * det, -1


def _cholesky_inverse_np(m):
    try:
        L = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        # locate the failing pivot for the error message
        for j in range(1, m.shape[0] + 1):
            try:
                np.linalg.cholesky(m[:j, :j])
            except np.linalg.LinAlgError:
                return np.zeros_like(m), 0.0, j - 1
        return np.zeros_like(m), 0.0, 0
    Li = np.linalg.inv(L)
    inv = Li.T @ Li
    inv = np.triu(inv) + np.triu(inv, 1).T
    return inv, float(np.prod(np.diag(L)) ** 2), -1


# --------------------------------------------------------------------------
# connection and curvature contractions


@jit
def _christoffel_nb(ginv, dg):
    n = ginv.shape[0]
    gamma = np.zeros((n, n, n))
    for i in range(n):
        for j in range(i, n):
            for k in range(n):
                t = 0.0
                for m in range(n):
                    t += ginv[k, m] * (dg[i, m, j] + dg[j, i, m] - dg[m, i, j])
                gamma[k, i, j] = 0.5 * t
                gamma[k, j, i] = 0.5 * t
    return gamma


def _christoffel_np(ginv, dg):
    lower = dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg  # [m, i, j]
    gamma = 0.5 * np.einsum("km,mij->kij", ginv, lower)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


@jit
def _ricci_nb(gamma, dgamma):
    n = gamma.shape[0]
    ric = np.zeros((n, n))
    trace = np.zeros(n)
    for k in range(n):
        for m in range(n):
            trace[k] += gamma[m, k, m]
    for i in range(n):
        for j in range(n):
            t = 0.0
            for k in range(n):
                t += dgamma[k, k, i, j] - dgamma[j, k, i, k]
                t += gamma[k, i, j] * trace[k]
                for m in range(n):
                    t -= gamma[m, i, k] * gamma[k, j, m]
            ric[i, j] = t
    return ric


def _ricci_np(gamma, dgamma):
    d1 = np.einsum("kkij->ij", dgamma)
    d2 = np.einsum("jkik->ij", dgamma)
    q1 = np.einsum("kij,nkn->ij", gamma, gamma)
    q2 = np.einsum("mik,kjm->ij", gamma, gamma)
    return d1 - d2 + q1 - q2


# --------------------------------------------------------------------------
# quadrature and time averages


@jit
def _outer_sum_nb(scores, weights):
    n, d = scores.shape
    out = np.zeros((d, d))
    for p in range(n):
        w = weights[p]
        for a in range(d):
            wa = w * scores[p, a]
            for b in range(a, d):
                out[a, b] += wa * scores[p, b]
    for a in range(d):
        for b in range(a):
            out[a, b] = out[b, a]
    return out


def _outer_sum_np(scores, weights):
    out = np.einsum("p,pa,pb->ab", weights, scores, scores)
    return np.triu(out) + np.triu(out, 1).T


@jit
def _cumtrapz_nb(x, y):
    out = np.zeros(x.shape[0])
    acc = 0.0
    for i in range(1, x.shape[0]):
        acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1])
        out[i] = acc
    return out


def _cumtrapz_np(x, y):
    out = np.zeros(x.shape[0])
    out[1:] = np.cumsum(0.5 * np.diff(x) * (y[1:] + y[:-1]))
    return out


# --------------------------------------------------------------------------
# geodesic flow of the reduced metric
#
# state = (mu_x, mu_y, sigma, dmu_x, dmu_y, dsigma).  Ratios are taken before
# products so that nothing underflows while sigma is still representable.


@jit
def geodesic_rhs(y, r, out):
    c = 0.25 / (r * r - 1.0)
    q = y[5] / y[2]
    px = y[3] / y[2]
    py = y[4] / y[2]
    out[0] = y[3]
    out[1] = y[4]
    out[2] = y[5]
    out[3] = 2.0 * y[3] * q
    out[4] = 2.0 * y[4] * q
    out[5] = y[5] * q + c * (y[3] * px + y[4] * py) - r * c * y[3] * py


# Dormand-Prince 5(4)
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0,
)

STATUS_OK = 0
STATUS_STEP_FAILURE = 1
STATUS_SIGMA_COLLAPSE = 2
STATUS_MAX_STEPS = 3

SIGMA_FLOOR = 1e-300
_TINY = 2.2250738585072014e-308


@jit
def dopri5_geodesic(y0, r, tau_max, tol, speed, max_steps):
    """Adaptive Dormand-Prince 5(4) integration of the reduced geodesic flow.

    Error scales: relative for sigma and the mean velocities (their ratio is
    the conserved momentum), relative plus a sigma-sized absolute part for the
    means and relative plus ``speed * sigma / 2`` for dsigma, i.e. absolute
    parts measured in Fisher-Rao length.

    Returns ``(taus, states, derivs, status)`` at the accepted steps.
    """
    cap = 1024
    taus = np.empty(cap)
    states = np.empty((cap, 6))
    derivs = np.empty((cap, 6))
    y = y0.copy()
    f = np.empty(6)
    geodesic_rhs(y, r, f)
    taus[0] = 0.0
    states[0] = y
    derivs[0] = f
    n = 0
    if speed > 0.0:
        h = min(tau_max, 0.01 / speed)
    else:
        h = tau_max
    t = 0.0
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    k5 = np.empty(6)
    k6 = np.empty(6)
    k7 = np.empty(6)
    tmp = np.empty(6)
    yn = np.empty(6)
    status = STATUS_OK
    steps = 0
    while t < tau_max:
        if steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        steps += 1
        last = False
        if t + h >= tau_max:
            h = tau_max - t
            last = True
        if h <= 1e-14 * max(1.0, abs(t)):
            status = STATUS_STEP_FAILURE
            break
        for i in range(6):
            tmp[i] = y[i] + h * _A21 * f[i]
        geodesic_rhs(tmp, r, k2)
        for i in range(6):
            tmp[i] = y[i] + h * (_A31 * f[i] + _A32 * k2[i])
        geodesic_rhs(tmp, r, k3)
        for i in range(6):
            tmp[i] = y[i] + h * (_A41 * f[i] + _A42 * k2[i] + _A43 * k3[i])
        geodesic_rhs(tmp, r, k4)
        for i in range(6):
            tmp[i] = y[i] + h * (_A51 * f[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        geodesic_rhs(tmp, r, k5)
        for i in range(6):
            tmp[i] = y[i] + h * (
                _A61 * f[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i]
            )
        if not tmp[2] > 0.0:
            h *= 0.2
            continue
        geodesic_rhs(tmp, r, k6)
        for i in range(6):
            yn[i] = y[i] + h * (_B1 * f[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
        if not yn[2] > 0.0:
            h *= 0.2
            continue
        geodesic_rhs(yn, r, k7)
        sref = min(y[2], yn[2])
        err = 0.0
        for i in range(6):
            e = abs(
                h * (_E1 * f[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            )
            m = max(abs(y[i]), abs(yn[i]))
            if i < 2:
                sc = tol * (m + sref)
            elif i == 5:
                sc = tol * (m + 0.5 * speed * sref)
            else:
                sc = tol * m
            ratio = e / (sc + _TINY)
            if not ratio <= err:
                err = ratio
        if not err == err:
            h *= 0.2
            continue
        if err <= 1.0:
            t = tau_max if last else t + h
            for i in range(6):
                y[i] = yn[i]
                f[i] = k7[i]
            n += 1
            if n >= cap:
                cap *= 2
                taus2 = np.empty(cap)
                states2 = np.empty((cap, 6))
                derivs2 = np.empty((cap, 6))
                taus2[:n] = taus[:n]
                states2[:n] = states[:n]
                derivs2[:n] = derivs[:n]
                taus, states, derivs = taus2, states2, derivs2
            taus[n] = t
            states[n] = y
            derivs[n] = f
            if y[2] < SIGMA_FLOOR:
                status = STATUS_SIGMA_COLLAPSE
                break
            if err > 0.0:
                h *= min(5.0, 0.9 * err ** -0.2)
            else:
                h *= 5.0
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    return taus[: n + 1].copy(), states[: n + 1].copy(), derivs[: n + 1].copy(), status


@jit
def _hermite_nb(taus, states, derivs, grid):
    out = np.empty((grid.shape[0], states.shape[1]))
    j = 0
    last = taus.shape[0] - 1
    for g in range(grid.shape[0]):
        x = grid[g]
        while j < last - 1 and taus[j + 1] <= x:
            j += 1
        h = taus[j + 1] - taus[j]
        s = (x - taus[j]) / h
        s2 = s * s
        s3 = s2 * s
        h00 = 2.0 * s3 - 3.0 * s2 + 1.0
        h10 = s3 - 2.0 * s2 + s
        h01 = -2.0 * s3 + 3.0 * s2
        h11 = s3 - s2
        for c in range(states.shape[1]):
            out[g, c] = (
                h00 * states[j, c]
                + h10 * h * derivs[j, c]
                + h01 * states[j + 1, c]
                + h11 * h * derivs[j + 1, c]
            )
    return out


def _hermite_np(taus, states, derivs, grid):
    j = np.clip(np.searchsorted(taus, grid, side="right") - 1, 0, taus.shape[0] - 2)
    h = (taus[j + 1] - taus[j])[:, None]
    s = ((grid - taus[j]) / h[:, 0])[:, None]
    s2 = s * s
    s3 = s2 * s
    return (
        (2.0 * s3 - 3.0 * s2 + 1.0) * states[j]
        + (s3 - 2.0 * s2 + s) * h * derivs[j]
        + (-2.0 * s3 + 3.0 * s2) * states[j + 1]
        + (s3 - s2) * h * derivs[j + 1]
    )


if USE_NUMBA:
    cholesky_inverse = _cholesky_inverse_nb
    christoffel_contract = _christoffel_nb
    ricci_contract = _ricci_nb
    outer_sum = _outer_sum_nb
    cumulative_trapezoid = _cumtrapz_nb
    hermite_resample = _hermite_nb
else:
    cholesky_inverse = _cholesky_inverse_np
    christoffel_contract = _christoffel_np
    ricci_contract = _ricci_np
    outer_sum = _outer_sum_np
    cumulative_trapezoid = _cumtrapz_np
    hermite_resample = _hermite_np
