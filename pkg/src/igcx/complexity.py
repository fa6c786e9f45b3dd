"""Statistical volume, its time average (IGC), the entropy (IGE) and the
correlation compression ratio for the equal-spread model.

The geodesic family used throughout has ``A1 = -A2 = a``, for which the
decay-rate constant is ``rate(r) = a**2 (2 + r) / (4 (1 - r**2))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import DomainError, InsufficientWindow, ModelParams3, check_correlation
from .geodesics import a_rate

# sigma0 * sqrt(rate) * tau below which (1 - exp(-x)) / x switches to its series
_SERIES_CUTOFF = 1e-6
# sigma0 * sqrt(rate) * tau_lo needed for the fitted slope to reflect the 1/tau law
ASYMPTOTIC_ONSET = 20.0


def g_prime_sqrt(r: float) -> float:
    """sigma-independent part of the Fisher density, ``sqrt(4 (4 - r**2) / (2 - 2 r**2)**2)``."""
    return math.sqrt(4.0 * (4.0 - r * r) / (2.0 - 2.0 * r * r) ** 2)


def fisher_density_reduced(params: ModelParams3) -> float:
    """Square root of the metric determinant of the equal-spread model."""
    return g_prime_sqrt(params.r) / params.sigma**3


@dataclass(frozen=True)
class IgcConfig:
    """Geodesic family with ``A1 = -A2 = a`` and ``sigma(0) = sigma0``.

    ``r`` must lie in (0, 1); use :meth:`uncorrelated` for the r -> 0 baseline.
    """

    r: float = 0.5
    sigma0: float = 1.0
    a: float = 1.0
    tau_grid: tuple = field(default_factory=tuple)
    baseline: bool = False

    def __post_init__(self):
        if self.baseline:
            if self.r != 0.0:
                raise DomainError("the uncorrelated baseline has r = 0")
        else:
            object.__setattr__(self, "r", check_correlation(self.r, positive=True))
        for name in ("sigma0", "a"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name}={value!r} violates {name} > 0")
            object.__setattr__(self, name, value)
        grid = np.asarray(self.tau_grid, dtype=float).ravel()
        if grid.size:
            if not np.all(np.isfinite(grid)) or np.any(grid <= 0.0):
                raise DomainError("tau_grid must contain positive finite values")
            if np.any(np.diff(grid) <= 0.0):
                raise DomainError("tau_grid must be strictly increasing")
        object.__setattr__(self, "tau_grid", tuple(grid.tolist()))

    def uncorrelated(self) -> "IgcConfig":
        return IgcConfig(0.0, self.sigma0, self.a, self.tau_grid, baseline=True)

    @property
    def rate(self) -> float:
        return a_rate(self.a, -self.a, self.r)

    @property
    def decay(self) -> float:
        """Exponential decay rate of the volume, ``sigma0 * sqrt(rate)``."""
        return self.sigma0 * math.sqrt(self.rate)


@dataclass(frozen=True)
class IgcCurve:
    taus: np.ndarray
    vol: np.ndarray
    avg_vol: np.ndarray
    ige: np.ndarray
    fitted_exponent: float


def volume_at(cfg: IgcConfig, tau):
    """Explored statistical volume at time ``tau``: ``a**2 sqrt(g') / (2 rate) * exp(-decay tau)``."""
    tau = np.asarray(tau, dtype=float)
    out = cfg.a**2 * g_prime_sqrt(cfg.r) / (2.0 * cfg.rate) * np.exp(-cfg.decay * tau)
    return float(out) if out.ndim == 0 else out


def asymptotic_constant(cfg: IgcConfig) -> float:
    """Coefficient of ``1/tau`` in the long-time IGC."""
    return cfg.a**2 / (2.0 * cfg.sigma0) * g_prime_sqrt(cfg.r) / cfg.rate**1.5


def avg_volume(cfg: IgcConfig, tau):
    """Time average of :func:`volume_at` over ``[0, tau]``, the IGC."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0.0):
        raise DomainError("tau must be >= 0")
    x = cfg.decay * tau
    small = x < _SERIES_CUTOFF
    xs = np.where(small, 1.0, x)
    # (1 - exp(-x)) / x
    shape = np.where(small, 1.0 - x / 2.0 + x * x / 6.0, -np.expm1(-xs) / xs)
    out = volume_at(cfg, 0.0) * shape
    return float(out) if out.ndim == 0 else out


def ige(cfg: IgcConfig, tau):
    """Information geometric entropy, ``log`` of :func:`avg_volume`."""
    out = np.log(avg_volume(cfg, tau))
    return float(out) if np.ndim(out) == 0 else out


def trapezoid_average(cfg: IgcConfig, tau: float, nodes: int = 10_000) -> float:
    """``(1/tau) * integral_0^tau volume_at`` by the trapezoid rule on ``nodes`` points."""
    t = np.linspace(0.0, float(tau), int(nodes))
    return float(kernels.cumulative_trapezoid(t, volume_at(cfg, t))[-1] / tau)


def fit_power_law(curve: IgcCurve, window=None) -> float:
    """Least-squares slope of ``log(avg_vol)`` against ``log(tau)`` inside ``window``.

    The default window is the last decade of the curve's grid.
    """
    taus = np.asarray(curve.taus, dtype=float)
    if window is None:
        window = (taus[-1] / 10.0, taus[-1])
    lo, hi = window
    inside = (taus >= lo) & (taus <= hi)
    if np.count_nonzero(inside) < 10:
        raise InsufficientWindow(
            f"window [{lo:g}, {hi:g}] holds {np.count_nonzero(inside)} nodes, need >= 10"
        )
    slope, _ = np.polyfit(np.log(taus[inside]), np.log(np.asarray(curve.avg_vol)[inside]), 1)
    return float(slope)


def default_grid(tau_min: float = 0.1, tau_max: float = 1e4, points: int = 500, log: bool = True) -> np.ndarray:
    if log:
        return np.logspace(math.log10(tau_min), math.log10(tau_max), points)
    return np.linspace(tau_min, tau_max, points)


def igc_curve(cfg: IgcConfig) -> IgcCurve:
    """Volume, IGC and IGE on ``cfg.tau_grid`` with the slope over its last decade."""
    taus = np.asarray(cfg.tau_grid if cfg.tau_grid else default_grid(), dtype=float)
    vol = volume_at(cfg, taus)
    avg = avg_volume(cfg, taus)
    curve = IgcCurve(taus, vol, avg, np.log(avg), float("nan"))
    if cfg.decay * taus[-1] / 10.0 < ASYMPTOTIC_ONSET:
        warnings.warn(
            f"grid ends at decay*tau = {cfg.decay * taus[-1]:.3g}; the last decade does not reach "
            f"the asymptotic regime (decay*tau >= {ASYMPTOTIC_ONSET:g})",
            stacklevel=2,
        )
    slope = fit_power_law(curve)
    return IgcCurve(taus, vol, avg, curve.ige, slope)


def compression_ratio(r: float) -> float:
    """Asymptotic IGC with correlation ``r`` over the uncorrelated IGC."""
    r = check_correlation(r, positive=True)
    return 2.0**-2.5 * g_prime_sqrt(r) * ((2.0 + r) / (4.0 * (1.0 - r * r))) ** -1.5


def compression_ratio_simplified(r: float) -> float:
    """Same quantity in reduced form, ``sqrt(2 (2 - r) (1 - r**2)) / (2 + r)``."""
    r = check_correlation(r, positive=True)
    return math.sqrt(2.0 * (2.0 - r) * (1.0 - r * r)) / (2.0 + r)
