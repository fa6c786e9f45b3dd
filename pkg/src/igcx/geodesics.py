"""Geodesics of the equal-spread model: closed form, numerical flow and residuals.

Along every geodesic ``dmu_x/dtau = A1 sigma**2`` and ``dmu_y/dtau = A2 sigma**2``
with constant ``A1, A2``; with ``sigma(0) = sigma0`` and means that vanish as
``tau -> inf`` the trajectory is

    sigma(tau) = sigma0 / cosh(k tau),   k = sigma0 * sqrt(rate),
    mu_x(tau)  = -(2 sigma0 A1 / sqrt(rate)) / (1 + exp(2 k tau)),

with ``rate = (A1**2 + A2**2 - r A1 A2) / (4 (1 - r**2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import kernels
from .core import (
    DEFAULT_TOLERANCES,
    DegenerateRate,
    DomainError,
    SigmaCollapse,
    StepFailure,
    Tolerances,
    check_correlation,
)

STATE_COLUMNS = ("mu_x", "mu_y", "sigma", "dmu_x", "dmu_y", "dsigma")

# mean velocities ~ sigma**2 stop being normal floats below this sigma
_MOMENTUM_FLOOR = 1e-290


@dataclass(frozen=True)
class GeodesicConfig:
    r: float
    sigma0: float
    a1: float
    a2: float
    tau_max: float = 10.0
    output_steps: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "r", check_correlation(self.r))
        for name in ("sigma0", "tau_max"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name}={value!r} violates {name} > 0")
            object.__setattr__(self, name, value)
        for name in ("a1", "a2"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name}={value!r} is not finite")
            object.__setattr__(self, name, value)
        if int(self.output_steps) != self.output_steps or self.output_steps < 2:
            raise DomainError(f"output_steps={self.output_steps!r} must be an integer >= 2")
        object.__setattr__(self, "output_steps", int(self.output_steps))

    @property
    def taus(self) -> np.ndarray:
        return np.linspace(0.0, self.tau_max, self.output_steps)


@dataclass(frozen=True)
class GeodesicPath:
    taus: np.ndarray
    states: np.ndarray  # (n, 6) in STATE_COLUMNS order
    conserved_drift: float

    def column(self, name: str) -> np.ndarray:
        return self.states[:, STATE_COLUMNS.index(name)]


def a_rate(a1: float, a2: float, r: float) -> float:
    """Decay-rate constant ``(A1**2 + A2**2 - r A1 A2) / (4 (1 - r**2))``, never negative."""
    r = check_correlation(r)
    value = (a1 * a1 + a2 * a2 - r * a1 * a2) / (4.0 * (1.0 - r * r))
    return max(value, 0.0)


def conserved_drift(states: np.ndarray, a1: float, a2: float) -> float:
    """Max relative deviation of ``dmu/dtau / sigma**2`` from ``(A1, A2)``.

    Nodes whose mean velocity has underflowed out of the normal float range
    carry no information about the momentum and are skipped.
    """
    sigma = states[:, 2]
    worst = 0.0
    for col, a in ((3, a1), (4, a2)):
        v = states[:, col]
        if a == 0.0:
            worst = max(worst, float(np.max(np.abs(v) / sigma**2, initial=0.0)))
            continue
        ok = np.abs(v) > _MOMENTUM_FLOOR
        if np.any(ok):
            worst = max(worst, float(np.max(np.abs((v[ok] / sigma[ok]) / sigma[ok] - a)) / abs(a)))
    return worst


def _closed_form_parts(cfg: GeodesicConfig, taus: np.ndarray):
    rate = a_rate(cfg.a1, cfg.a2, cfg.r)
    if rate <= 0.0:
        if cfg.a1 == 0.0 and cfg.a2 == 0.0:
            return None
        raise DegenerateRate(f"rate vanishes for a1={cfg.a1}, a2={cfg.a2}, r={cfg.r}")
    sq = math.sqrt(rate)
    k = cfg.sigma0 * sq
    u = k * taus
    # p = 1 / (1 + exp(2 k tau)), evaluated without overflow
    p = expit(-2.0 * u)
    e = np.exp(-u)
    sigma = 2.0 * cfg.sigma0 * e / (1.0 + e * e)
    th = np.tanh(u)
    return sq, k, p, sigma, th


def closed_form_geodesic(cfg: GeodesicConfig) -> GeodesicPath:
    """Sample the closed-form geodesic and its exact derivatives on ``cfg.taus``."""
    taus = cfg.taus
    parts = _closed_form_parts(cfg, taus)
    states = np.zeros((taus.size, 6))
    if parts is None:
        states[:, 2] = cfg.sigma0
        return GeodesicPath(taus, states, 0.0)
    sq, k, p, sigma, th = parts
    amp = 2.0 * cfg.sigma0 / sq
    states[:, 0] = -amp * cfg.a1 * p
    states[:, 1] = -amp * cfg.a2 * p
    states[:, 2] = sigma
    # d p / d tau = -2 k p (1 - p)
    states[:, 3] = 2.0 * k * amp * cfg.a1 * p * (1.0 - p)
    states[:, 4] = 2.0 * k * amp * cfg.a2 * p * (1.0 - p)
    states[:, 5] = -k * sigma * th
    return GeodesicPath(taus, states, conserved_drift(states, cfg.a1, cfg.a2))


def fisher_rao_speed(state, r: float) -> float:
    """Length of the velocity in the reduced metric; constant along a geodesic."""
    mx, my, s, vx, vy, vs = (float(v) for v in state)
    d = 1.0 - r * r
    q = (vx * vx + vy * vy - r * vx * vy) / d + 4.0 * vs * vs
    return math.sqrt(max(q, 0.0)) / s


def integrate_geodesic(
    cfg: GeodesicConfig,
    initial,
    tol: Tolerances = DEFAULT_TOLERANCES,
    max_steps: int = 5_000_000,
) -> GeodesicPath:
    """Integrate the geodesic equations from ``initial`` and resample onto ``cfg.taus``.

    ``initial`` is ``(mu_x, mu_y, sigma, dmu_x, dmu_y, dsigma)`` at tau = 0.
    The integrator never sees the closed form.  The conserved momenta used
    for the drift diagnostic are read off the initial state.
    """
    y0 = np.array(initial, dtype=float)
    if y0.shape != (6,) or not np.all(np.isfinite(y0)):
        raise DomainError("initial state must be 6 finite numbers")
    if not y0[2] > 0.0:
        raise DomainError(f"initial sigma={y0[2]!r} violates sigma > 0")
    speed = fisher_rao_speed(y0, cfg.r)
    taus, states, derivs, status = kernels.dopri5_geodesic(
        y0, cfg.r, cfg.tau_max, tol.ode_tol, speed, max_steps
    )
    if status == kernels.STATUS_SIGMA_COLLAPSE:
        raise SigmaCollapse(f"sigma fell below {kernels.SIGMA_FLOOR:g} at tau={taus[-1]:.6g}")
    if status != kernels.STATUS_OK:
        reason = "step size underflow" if status == kernels.STATUS_STEP_FAILURE else "step budget exhausted"
        raise StepFailure(f"integration stopped at tau={taus[-1]:.6g}: {reason}")
    grid = cfg.taus
    if taus.size == 1:
        out = np.repeat(states, grid.size, axis=0)
    else:
        out = np.asarray(kernels.hermite_resample(taus, states, derivs, grid))
        out[0] = states[0]
        out[-1] = states[-1]
    a1 = y0[3] / y0[2] ** 2
    a2 = y0[4] / y0[2] ** 2
    drift = max(conserved_drift(states, a1, a2), conserved_drift(out, a1, a2))
    return GeodesicPath(grid, out, drift)


def closed_form_initial_state(cfg: GeodesicConfig) -> np.ndarray:
    """State of the closed-form geodesic at tau = 0."""
    single = GeodesicConfig(cfg.r, cfg.sigma0, cfg.a1, cfg.a2, 1.0, 2)
    return closed_form_geodesic(single).states[0].copy()


def _closed_form_second_derivatives(cfg: GeodesicConfig, taus: np.ndarray):
    parts = _closed_form_parts(cfg, taus)
    if parts is None:
        zero = np.zeros_like(taus)
        return zero, zero, zero
    sq, k, p, sigma, th = parts
    amp = 2.0 * cfg.sigma0 / sq
    dp = -2.0 * k * p * (1.0 - p)
    # d/dtau [p (1 - p)] = (1 - 2 p) dp
    ddmx = 2.0 * k * amp * cfg.a1 * (1.0 - 2.0 * p) * dp
    ddmy = 2.0 * k * amp * cfg.a2 * (1.0 - 2.0 * p) * dp
    sech = sigma / cfg.sigma0
    dds = k * k * sigma * (th * th - sech * sech)
    return ddmx, ddmy, dds


def ode_residual(cfg: GeodesicConfig, tau) -> np.ndarray:
    """Left-hand sides of the three geodesic equations on the closed form.

    Uses exact derivatives of the closed form; returns shape ``(3,)`` for a
    scalar ``tau`` or ``(n, 3)`` for an array.
    """
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    single = GeodesicConfig(cfg.r, cfg.sigma0, cfg.a1, cfg.a2, 1.0, 2)
    parts = _closed_form_parts(single, taus)
    if parts is None:
        out = np.zeros((taus.size, 3))
        return out[0] if np.ndim(tau) == 0 else out
    sq, k, p, sigma, th = parts
    amp = 2.0 * cfg.sigma0 / sq
    vx = 2.0 * k * amp * cfg.a1 * p * (1.0 - p)
    vy = 2.0 * k * amp * cfg.a2 * p * (1.0 - p)
    vs = -k * sigma * th
    ddmx, ddmy, dds = _closed_form_second_derivatives(single, taus)
    r = cfg.r
    c = 0.25 / (r * r - 1.0)
    res = np.empty((taus.size, 3))
    res[:, 0] = ddmx - 2.0 * vx * (vs / sigma)
    res[:, 1] = ddmy - 2.0 * vy * (vs / sigma)
    res[:, 2] = (
        dds
        - vs * (vs / sigma)
        - c * vx * (vx / sigma)
        - c * vy * (vy / sigma)
        + r * c * vx * (vy / sigma)
    )
    return res[0] if np.ndim(tau) == 0 else res
