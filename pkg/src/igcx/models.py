"""Gaussian model family: densities, scores and Fisher-Rao metrics.

Coordinate orders are fixed: ``(mu_x, sigma_x, mu_y, sigma_y)`` for the
bivariate model and ``(mu_x, mu_y, sigma)`` for the equal-spread model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from . import kernels
from .core import (
    DEFAULT_TOLERANCES,
    DegenerateSample,
    DomainError,
    ModelParams3,
    ModelParams4,
    QuadratureUnconverged,
    Tolerances,
    sym_matrix,
)

#: PRNG used by :func:`sample_bivariate`; recorded in run manifests.
PRNG_ALGORITHM = f"numpy.random.PCG64 (numpy {np.__version__})"

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class BivariateGaussian:
    params: ModelParams4

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.params.mu_x, self.params.mu_y])

    @property
    def covariance(self) -> np.ndarray:
        p = self.params
        c = p.r * p.sigma_x * p.sigma_y
        return np.array([[p.sigma_x**2, c], [c, p.sigma_y**2]])

    @property
    def cholesky(self) -> np.ndarray:
        p = self.params
        return np.array(
            [[p.sigma_x, 0.0], [p.r * p.sigma_y, p.sigma_y * math.sqrt(1.0 - p.r * p.r)]]
        )


@dataclass(frozen=True)
class DiagonalGaussianProduct:
    """Product of ``n`` independent univariate Gaussians."""

    means: tuple
    sigmas: tuple

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        sigmas = tuple(float(s) for s in self.sigmas)
        if len(means) < 1 or len(means) != len(sigmas):
            raise DomainError("need n >= 1 means and as many sigmas")
        if not all(math.isfinite(m) for m in means):
            raise DomainError("means must be finite")
        if not all(math.isfinite(s) and s > 0 for s in sigmas):
            raise DomainError("all sigmas must be > 0")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sigmas", sigmas)

    @property
    def n(self) -> int:
        return len(self.means)


def log_density(model: BivariateGaussian, x, y):
    """Natural log of the correlated bivariate Gaussian density at ``(x, y)``."""
    p = model.params
    u = (np.asarray(x, dtype=float) - p.mu_x) / p.sigma_x
    v = (np.asarray(y, dtype=float) - p.mu_y) / p.sigma_y
    one_m_r2 = 1.0 - p.r * p.r
    quad = (u * u - 2.0 * p.r * u * v + v * v) / (2.0 * one_m_r2)
    norm = _LOG_2PI + math.log(p.sigma_x) + math.log(p.sigma_y) + 0.5 * math.log(one_m_r2)
    out = -quad - norm
    return float(out) if np.ndim(out) == 0 else out


def score(model: BivariateGaussian, x, y) -> np.ndarray:
    """Gradient of :func:`log_density` with respect to (mu_x, sigma_x, mu_y, sigma_y).

    Returns an array of shape ``(..., 4)``.
    """
    p = model.params
    u = (np.asarray(x, dtype=float) - p.mu_x) / p.sigma_x
    v = (np.asarray(y, dtype=float) - p.mu_y) / p.sigma_y
    k = 1.0 / (1.0 - p.r * p.r)
    ex = k * (u - p.r * v)
    ey = k * (v - p.r * u)
    return np.stack(
        [ex / p.sigma_x, (u * ex - 1.0) / p.sigma_x, ey / p.sigma_y, (v * ey - 1.0) / p.sigma_y],
        axis=-1,
    )


def fisher_metric_analytic_4d(params: ModelParams4) -> np.ndarray:
    """Closed-form Fisher-Rao metric of the bivariate model at fixed ``r``."""
    sx, sy, r = params.sigma_x, params.sigma_y, params.r
    d = 1.0 - r * r
    g = np.zeros((4, 4))
    g[0, 0] = 1.0 / (sx * sx * d)
    g[0, 2] = -r / (sx * sy * d)
    g[1, 1] = (2.0 - r * r) / (sx * sx * d)
    g[1, 3] = -r * r / (sx * sy * d)
    g[2, 2] = 1.0 / (sy * sy * d)
    g[3, 3] = (2.0 - r * r) / (sy * sy * d)
    return sym_matrix(g)


def _whitened_nodes(model: BivariateGaussian, order: int):
    z, w = hermegauss(order)
    z1, z2 = np.meshgrid(z, z, indexing="ij")
    weights = (np.outer(w, w) / (2.0 * math.pi)).ravel()
    zz = np.stack([z1.ravel(), z2.ravel()], axis=-1)
    xy = model.mean + zz @ model.cholesky.T
    return zz, xy, weights


def _quadrature_metric(model: BivariateGaussian, order: int) -> np.ndarray:
    _, xy, weights = _whitened_nodes(model, order)
    s = np.ascontiguousarray(score(model, xy[:, 0], xy[:, 1]))
    return kernels.outer_sum(s, weights)


def fisher_metric_quadrature(
    model: BivariateGaussian, tol: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """Fisher metric as the expectation of score outer products.

    Tensor-product Gauss-Hermite quadrature in the model's whitened
    coordinates, so the quadrature weight is the density itself.  The result
    at ``tol.quad_order`` is checked against twice that order.
    """
    g = _quadrature_metric(model, tol.quad_order)
    g2 = _quadrature_metric(model, 2 * tol.quad_order)
    change = float(np.max(np.abs(g2 - g)))
    limit = 10.0 * tol.matrix_eps * max(1.0, float(np.max(np.abs(g2))))
    if change > limit:
        raise QuadratureUnconverged(
            f"doubling quad_order changed the metric by {change:.3e} (limit {limit:.3e})"
        )
    return sym_matrix(g)


def density_integral(model: BivariateGaussian, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Integral of ``exp(log_density)`` over the plane by whitened Gauss-Hermite quadrature.

    The Gaussian weight is divided back out, so the sum tests the density
    formula itself rather than the quadrature weights.
    """
    zz, xy, weights = _whitened_nodes(model, tol.quad_order)
    log_det_l = math.log(model.cholesky[0, 0]) + math.log(model.cholesky[1, 1])
    log_ratio = (
        log_density(model, xy[:, 0], xy[:, 1])
        + 0.5 * np.sum(zz * zz, axis=1)
        + _LOG_2PI
        + log_det_l
    )
    return float(np.sum(weights * np.exp(log_ratio)))


def fisher_metric_reduced(params: ModelParams3) -> np.ndarray:
    """Fisher-Rao metric of the equal-spread model in (mu_x, mu_y, sigma)."""
    r, s2 = params.r, params.sigma * params.sigma
    d = 1.0 - r * r
    g = np.array(
        [
            [1.0 / d, -r / (2.0 * d), 0.0],
            [-r / (2.0 * d), 1.0 / d, 0.0],
            [0.0, 0.0, 4.0],
        ]
    )
    return sym_matrix(g / s2)


def fisher_metric_diagonal(model: DiagonalGaussianProduct) -> np.ndarray:
    """Diagonal metric in (mu_1, sigma_1, ..., mu_n, sigma_n)."""
    inv_var = 1.0 / np.asarray(model.sigmas) ** 2
    diag = np.empty(2 * model.n)
    diag[0::2] = inv_var
    diag[1::2] = 2.0 * inv_var
    return sym_matrix(np.diag(diag))


def sample_bivariate(model: BivariateGaussian, count: int, seed: int) -> np.ndarray:
    """Seeded draws of shape ``(count, 2)`` via the Cholesky transform."""
    if int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.standard_normal((int(count), 2))
    return model.mean + z @ model.cholesky.T


def _moments(samples):
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[1] != 2 or s.shape[0] < 2:
        raise DegenerateSample("need at least 2 samples of (x, y) pairs")
    mean = s.mean(axis=0)
    centered = s - mean
    var = np.mean(centered * centered, axis=0)
    if not np.all(var > 0.0):
        raise DegenerateSample("a coordinate has zero sample variance")
    return centered, var


def correlation_coefficient(samples) -> float:
    """Sample correlation with population (1/N) moments."""
    centered, var = _moments(samples)
    cov = np.mean(centered[:, 0] * centered[:, 1])
    return float(np.clip(cov / math.sqrt(var[0] * var[1]), -1.0, 1.0))


class LinearFit(NamedTuple):
    c1: float
    c2: float
    residual: float


def best_linear_msq(samples) -> LinearFit:
    """Best mean-square linear prediction of the normalized x from the normalized y.

    Minimizes ``<(eta1 - c1 - c2 * eta2)**2>`` by solving the normal
    equations, where ``eta`` are the standardized coordinates.
    """
    centered, var = _moments(samples)
    eta = centered / np.sqrt(var)
    e1, e2 = eta[:, 0], eta[:, 1]
    m2 = np.mean(e2)
    s22 = np.mean(e2 * e2)
    s12 = np.mean(e1 * e2)
    m1 = np.mean(e1)
    det = s22 - m2 * m2
    c2 = (s12 - m1 * m2) / det
    c1 = m1 - c2 * m2
    resid = e1 - c1 - c2 * e2
    return LinearFit(float(c1), float(c2), float(np.mean(resid * resid)))
