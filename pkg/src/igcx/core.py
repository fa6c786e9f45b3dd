"""Shared types, tolerances, errors and small symmetric-matrix algebra."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels


class IgcxError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(IgcxError, ValueError):
    """A parameter lies outside the statistical manifold."""


class NotPositiveDefinite(IgcxError, ValueError):
    pass


class DomainViolation(DomainError):
    """A finite-difference stencil left the valid parameter domain."""


class DegenerateSample(IgcxError, ValueError):
    pass


class QuadratureUnconverged(IgcxError, RuntimeError):
    pass


class SingularJacobian(IgcxError, ValueError):
    pass


class DegenerateRate(IgcxError, ValueError):
    pass


class SigmaCollapse(IgcxError, RuntimeError):
    pass


class StepFailure(IgcxError, RuntimeError):
    pass


class InsufficientWindow(IgcxError, ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs shared by every module.

    ``fd_step_scale`` is the relative central-difference step; ``ode_tol`` the
    local error target of the geodesic integrator; ``quad_order`` the number
    of Gauss-Hermite nodes per axis; ``matrix_eps`` the identity-check bound.
    """

    fd_step_scale: float = float(np.finfo(float).eps) ** (1.0 / 3.0)
    ode_tol: float = 1e-11
    quad_order: int = 64
    matrix_eps: float = 1e-10

    def __post_init__(self):
        for name in ("fd_step_scale", "ode_tol", "matrix_eps"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if int(self.quad_order) != self.quad_order or self.quad_order < 2:
            raise ValueError(f"quad_order must be an integer >= 2, got {self.quad_order!r}")


DEFAULT_TOLERANCES = Tolerances()


def check_correlation(r: float, *, positive: bool = False) -> float:
    """Validate a correlation coefficient and return it as a float.

    The model lives on the open interval ``-1 < r < 1``; complexity quantities
    additionally need ``0 < r < 1``.
    """
    r = float(r)
    if not math.isfinite(r) or not -1.0 < r < 1.0:
        raise DomainError(f"correlation r={r!r} violates -1 < r < 1")
    if positive and not r > 0.0:
        raise DomainError(f"correlation r={r!r} violates 0 < r < 1")
    return r


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise DomainError(f"{name}={value!r} violates {name} > 0")
    return value


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name}={value!r} is not finite")
    return value


@dataclass(frozen=True)
class ModelParams3:
    """Point of the equal-spread model: coordinates (mu_x, mu_y, sigma), fixed r."""

    mu_x: float
    mu_y: float
    sigma: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "mu_x", _check_finite("mu_x", self.mu_x))
        object.__setattr__(self, "mu_y", _check_finite("mu_y", self.mu_y))
        object.__setattr__(self, "sigma", _check_positive("sigma", self.sigma))
        object.__setattr__(self, "r", check_correlation(self.r))

    @property
    def point(self) -> np.ndarray:
        return np.array([self.mu_x, self.mu_y, self.sigma])


@dataclass(frozen=True)
class ModelParams4:
    """Point of the bivariate model: coordinates (mu_x, sigma_x, mu_y, sigma_y), fixed r."""

    mu_x: float
    sigma_x: float
    mu_y: float
    sigma_y: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "mu_x", _check_finite("mu_x", self.mu_x))
        object.__setattr__(self, "sigma_x", _check_positive("sigma_x", self.sigma_x))
        object.__setattr__(self, "mu_y", _check_finite("mu_y", self.mu_y))
        object.__setattr__(self, "sigma_y", _check_positive("sigma_y", self.sigma_y))
        object.__setattr__(self, "r", check_correlation(self.r))

    @property
    def point(self) -> np.ndarray:
        return np.array([self.mu_x, self.sigma_x, self.mu_y, self.sigma_y])


def sym_matrix(entries) -> np.ndarray:
    """Return a read-only symmetric copy of ``entries``, mirrored from the upper triangle."""
    m = np.array(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    m = np.triu(m) + np.triu(m, 1).T
    m.setflags(write=False)
    return m


def invert_spd(m, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix via Cholesky.

    Raises :class:`NotPositiveDefinite` when a pivot is not strictly positive.
    """
    a = np.ascontiguousarray(m, dtype=float)
    inv, _, bad = kernels.cholesky_inverse(a)
    if bad >= 0:
        raise NotPositiveDefinite(f"non-positive pivot at index {bad}")
    return sym_matrix(inv)


def determinant(m) -> float:
    """Determinant by cofactor expansion (dimensions up to 4), LU beyond."""
    a = np.asarray(m, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if n == 1:
        return float(a[0, 0])
    if n == 2:
        return float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    if n == 3:
        return float(
            a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
            - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
            + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
        )
    if n == 4:
        total = 0.0
        for j in range(4):
            minor = np.delete(a[1:], j, axis=1)
            total += (-1.0) ** j * a[0, j] * determinant(minor)
        return float(total)
    return float(np.linalg.det(a))
