"""Riemannian machinery for metric fields: connection, Ricci tensor, scalar curvature.

Each quantity is available from any :class:`MetricField`, either through
caller-supplied exact metric derivatives (``analytic`` mode) or by central
differences of the metric itself (``finite_difference`` mode).  The Ricci
tensor follows

    R_ij = d_k G^k_ij - d_j G^k_ik + G^k_ij G^n_kn - G^m_ik G^k_jm .
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .core import (
    DEFAULT_TOLERANCES,
    DomainViolation,
    ModelParams3,
    ModelParams4,
    NotPositiveDefinite,
    SingularJacobian,
    Tolerances,
    check_correlation,
    invert_spd,
    sym_matrix,
)
from .models import fisher_metric_analytic_4d, fisher_metric_reduced

ANALYTIC = "analytic"
FINITE_DIFFERENCE = "finite_difference"

# outer step for differentiating the connection field: balances the O(H^4)
# truncation of the five-point stencil against rounding in the inner layer
OUTER_STEP_SCALE = float(np.finfo(float).eps) ** 0.25

# fourth-order central difference as weighted symmetric differences f(x + k h) - f(x - k h)
_FIVE_POINT = ((1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0))


def _everywhere(x) -> bool:
    return bool(np.all(np.isfinite(x)))


@dataclass(frozen=True)
class MetricField:
    """A metric tensor field ``x -> g(x)`` on a coordinate patch.

    ``d1(x)[l, a, b]`` and ``d2(x)[l, m, a, b]`` are the exact first and
    second coordinate derivatives of ``g``; they are only needed in analytic
    mode.  ``domain(x)`` tells whether ``x`` lies in the valid patch.
    """

    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    domain: Callable[[np.ndarray], bool] = _everywhere
    d1: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    derivative_mode: str = FINITE_DIFFERENCE
    name: str = "metric"
    coords: tuple = ()

    def __post_init__(self):
        if self.derivative_mode not in (ANALYTIC, FINITE_DIFFERENCE):
            raise ValueError(f"unknown derivative_mode {self.derivative_mode!r}")
        if self.derivative_mode == ANALYTIC and (self.d1 is None or self.d2 is None):
            raise ValueError(f"{self.name}: analytic mode needs exact first and second derivatives")

    def with_mode(self, mode: str) -> "MetricField":
        return dataclasses.replace(self, derivative_mode=mode)

    def at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"{self.name}: expected a point of dimension {self.dim}, got {x.shape}")
        if not self.domain(x):
            raise DomainViolation(f"{self.name}: point {x.tolist()} is outside the domain")
        return np.asarray(self.eval(x), dtype=float)


@dataclass(frozen=True)
class ChristoffelField:
    """Connection coefficients at a point; ``gamma[k, i, j]`` is G^k_ij."""

    dim: int
    gamma: np.ndarray

    def nonzero(self, atol: float = 1e-14):
        """``((k, i, j), value)`` for every component with ``|value| > atol``, 1-based indices."""
        out = []
        for k, i, j in zip(*np.nonzero(np.abs(self.gamma) > atol)):
            out.append(((int(k) + 1, int(i) + 1, int(j) + 1), float(self.gamma[k, i, j])))
        return out


@dataclass(frozen=True)
class CurvatureReport:
    point: np.ndarray
    christoffel: ChristoffelField
    ricci: np.ndarray
    scalar: float


# --------------------------------------------------------------------------
# shipped metric fields


def _reduced_domain(x) -> bool:
    return bool(np.all(np.isfinite(x)) and x[2] > 0.0)


def reduced_field(r: float, mode: str = ANALYTIC) -> MetricField:
    """Equal-spread model in (mu_x, mu_y, sigma) at correlation ``r``.

    Every component is proportional to ``1 / sigma**2``, which gives the
    exact derivatives.
    """
    r = check_correlation(r)

    def g(x):
        return fisher_metric_reduced(ModelParams3(x[0], x[1], x[2], r))

    def d1(x):
        out = np.zeros((3, 3, 3))
        out[2] = -2.0 * g(x) / x[2]
        return out

    def d2(x):
        out = np.zeros((3, 3, 3, 3))
        out[2, 2] = 6.0 * g(x) / (x[2] * x[2])
        return out

    return MetricField(3, g, _reduced_domain, d1, d2, mode, f"reduced3d(r={r})", ("mu_x", "mu_y", "sigma"))


def _full_domain(x) -> bool:
    return bool(np.all(np.isfinite(x)) and x[1] > 0.0 and x[3] > 0.0)


def full_field(r: float) -> MetricField:
    """Bivariate model in (mu_x, sigma_x, mu_y, sigma_y); finite differences only."""
    r = check_correlation(r)

    def g(x):
        return fisher_metric_analytic_4d(ModelParams4(x[0], x[1], x[2], x[3], r))

    return MetricField(
        4, g, _full_domain, None, None, FINITE_DIFFERENCE, f"full4d(r={r})",
        ("mu_x", "sigma_x", "mu_y", "sigma_y"),
    )


def diagonal_field(n: int = 1, mode: str = ANALYTIC) -> MetricField:
    """Product of ``n`` univariate Gaussians in (mu_1, sigma_1, ..., mu_n, sigma_n)."""
    dim = 2 * n

    def domain(x):
        return bool(np.all(np.isfinite(x)) and np.all(x[1::2] > 0.0))

    def g(x):
        diag = np.empty(dim)
        diag[0::2] = 1.0 / x[1::2] ** 2
        diag[1::2] = 2.0 / x[1::2] ** 2
        return sym_matrix(np.diag(diag))

    def d1(x):
        out = np.zeros((dim, dim, dim))
        for j in range(n):
            s = x[2 * j + 1]
            out[2 * j + 1, 2 * j, 2 * j] = -2.0 / s**3
            out[2 * j + 1, 2 * j + 1, 2 * j + 1] = -4.0 / s**3
        return out

    def d2(x):
        out = np.zeros((dim, dim, dim, dim))
        for j in range(n):
            s = x[2 * j + 1]
            out[2 * j + 1, 2 * j + 1, 2 * j, 2 * j] = 6.0 / s**4
            out[2 * j + 1, 2 * j + 1, 2 * j + 1, 2 * j + 1] = 12.0 / s**4
        return out

    coords = tuple(c for j in range(1, n + 1) for c in (f"mu_{j}", f"sigma_{j}"))
    return MetricField(dim, g, domain, d1, d2, mode, f"diagonal(n={n})", coords)


def flat_field(dim: int = 3, mode: str = ANALYTIC) -> MetricField:
    """Constant identity metric, a zero-curvature control."""
    eye = sym_matrix(np.eye(dim))
    return MetricField(
        dim,
        lambda x: eye,
        _everywhere,
        lambda x: np.zeros((dim, dim, dim)),
        lambda x: np.zeros((dim, dim, dim, dim)),
        mode,
        f"flat(dim={dim})",
        tuple(f"x{i + 1}" for i in range(dim)),
    )


# --------------------------------------------------------------------------
# derivatives


def _step_sizes(field: MetricField, x: np.ndarray, scale: float, reach: float) -> np.ndarray:
    """Per-axis steps ``scale * max(1, |x_l|)``, shrunk once by 10x if the stencil leaves the domain."""
    steps = scale * np.maximum(1.0, np.abs(x))
    for l in range(field.dim):
        for attempt in range(2):
            e = np.zeros(field.dim)
            e[l] = reach * steps[l]
            if field.domain(x + e) and field.domain(x - e):
                break
            if attempt == 0:
                steps[l] /= 10.0
        else:
            raise DomainViolation(
                f"{field.name}: finite-difference stencil along {field.coords[l] if field.coords else l} "
                f"leaves the domain at {x.tolist()}"
            )
    return steps


def _metric_and_d1(field: MetricField, x: np.ndarray, tol: Tolerances):
    g = field.at(x)
    if field.derivative_mode == ANALYTIC:
        return g, np.asarray(field.d1(x), dtype=float)
    steps = _step_sizes(field, x, tol.fd_step_scale, 2.0)
    dg = np.zeros((field.dim, field.dim, field.dim))
    for l in range(field.dim):
        for offset, weight in _FIVE_POINT:
            e = np.zeros(field.dim)
            e[l] = offset * steps[l]
            dg[l] += weight * (field.at(x + e) - field.at(x - e))
        dg[l] /= steps[l]
    return g, dg


def _inverse(g: np.ndarray, field: MetricField, x: np.ndarray, tol: Tolerances) -> np.ndarray:
    try:
        return invert_spd(g, tol)
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(f"{field.name}: metric not positive definite at {x.tolist()}") from exc


def _gamma(field: MetricField, x: np.ndarray, tol: Tolerances):
    g, dg = _metric_and_d1(field, x, tol)
    ginv = _inverse(g, field, x, tol)
    return np.asarray(kernels.christoffel_contract(np.ascontiguousarray(ginv), np.ascontiguousarray(dg))), ginv


def _gamma_derivative(field: MetricField, x: np.ndarray, tol: Tolerances) -> np.ndarray:
    n = field.dim
    if field.derivative_mode == ANALYTIC:
        g = field.at(x)
        ginv = _inverse(g, field, x, tol)
        d1 = np.asarray(field.d1(x), dtype=float)
        d2 = np.asarray(field.d2(x), dtype=float)
        lower = d1.transpose(1, 0, 2) + d1.transpose(1, 2, 0) - d1  # [m, i, j]
        dlower = d2.transpose(0, 2, 1, 3) + d2.transpose(0, 2, 3, 1) - d2  # [l, m, i, j]
        dginv = -np.einsum("ka,lab,bm->lkm", ginv, d1, ginv)
        return 0.5 * (
            np.einsum("lkm,mij->lkij", dginv, lower) + np.einsum("km,lmij->lkij", ginv, dlower)
        )
    steps = _step_sizes(field, x, OUTER_STEP_SCALE, 2.0 + 2.0)
    out = np.zeros((n, n, n, n))
    for l in range(n):
        for offset, weight in _FIVE_POINT:
            e = np.zeros(n)
            e[l] = offset * steps[l]
            out[l] += weight * (_gamma(field, x + e, tol)[0] - _gamma(field, x - e, tol)[0])
        out[l] /= steps[l]
    return out


# --------------------------------------------------------------------------
# public operations


def christoffel(field: MetricField, point, tol: Tolerances = DEFAULT_TOLERANCES) -> ChristoffelField:
    x = np.asarray(point, dtype=float)
    gamma, _ = _gamma(field, x, tol)
    return ChristoffelField(field.dim, gamma)


def ricci_tensor(field: MetricField, point, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    x = np.asarray(point, dtype=float)
    gamma, _ = _gamma(field, x, tol)
    dgamma = _gamma_derivative(field, x, tol)
    ric = np.asarray(kernels.ricci_contract(gamma, np.ascontiguousarray(dgamma)))
    return sym_matrix(0.5 * (ric + ric.T))


def scalar_curvature(field: MetricField, point, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    return curvature_report(field, point, tol).scalar


def curvature_report(field: MetricField, point, tol: Tolerances = DEFAULT_TOLERANCES) -> CurvatureReport:
    x = np.asarray(point, dtype=float)
    gamma, ginv = _gamma(field, x, tol)
    dgamma = _gamma_derivative(field, x, tol)
    ric = np.asarray(kernels.ricci_contract(gamma, np.ascontiguousarray(dgamma)))
    ric = sym_matrix(0.5 * (ric + ric.T))
    scalar = float(np.sum(ric * ginv))
    return CurvatureReport(x.copy(), ChristoffelField(field.dim, gamma), ric, scalar)


# --------------------------------------------------------------------------
# closed forms for the equal-spread model


def inverse_metric_reduced(params: ModelParams3) -> np.ndarray:
    r, s2 = params.r, params.sigma**2
    a = 4.0 * (r * r - 1.0) / (r * r - 4.0)
    b = 2.0 * r * (r * r - 1.0) / (r * r - 4.0)
    return sym_matrix(s2 * np.array([[a, b, 0.0], [b, a, 0.0], [0.0, 0.0, 0.25]]))


def christoffel_reduced_analytic(params: ModelParams3) -> ChristoffelField:
    """The seven nonzero connection families of the equal-spread model (0-based storage)."""
    r, s = params.r, params.sigma
    q = r * r - 1.0
    gamma = np.zeros((3, 3, 3))
    gamma[2, 0, 0] = -0.25 / q / s
    gamma[2, 0, 1] = gamma[2, 1, 0] = r / (8.0 * q) / s
    gamma[0, 0, 2] = gamma[0, 2, 0] = -1.0 / s
    gamma[2, 1, 1] = -0.25 / q / s
    gamma[1, 1, 2] = gamma[1, 2, 1] = -1.0 / s
    gamma[2, 2, 2] = -1.0 / s
    return ChristoffelField(3, gamma)


def ricci_reduced_analytic(params: ModelParams3) -> np.ndarray:
    r, s2 = params.r, params.sigma**2
    q = r * r - 1.0
    ric = np.zeros((3, 3))
    ric[0, 0] = ric[1, 1] = 1.0 / (2.0 * q) / s2
    ric[0, 1] = ric[1, 0] = -r / (4.0 * q) / s2
    ric[2, 2] = -2.0 / s2
    return sym_matrix(ric)


def scalar_curvature_reduced_analytic(params: ModelParams3) -> float:
    gi = inverse_metric_reduced(params)
    ric = ricci_reduced_analytic(params)
    return float(gi[0, 0] * ric[0, 0] + 2.0 * gi[0, 1] * ric[0, 1] + gi[1, 1] * ric[1, 1] + gi[2, 2] * ric[2, 2])


# --------------------------------------------------------------------------
# reparametrization


@dataclass(frozen=True)
class Reparametrization:
    """Smooth invertible coordinate change.

    ``to_old`` maps new coordinates to old ones, ``to_new`` is its inverse and
    ``jacobian(x_new)[a, b] = d x_old^a / d x_new^b``.
    """

    to_old: Callable[[np.ndarray], np.ndarray]
    to_new: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    name: str = "reparam"


def identity_reparam(dim: int) -> Reparametrization:
    return Reparametrization(lambda x: np.array(x, float), lambda x: np.array(x, float), lambda x: np.eye(dim), "identity")


def log_coordinate(index: int, dim: int) -> Reparametrization:
    """Replace coordinate ``index`` (a positive spread) by its logarithm ``s``, so ``old = exp(s)``."""

    def to_old(x):
        y = np.array(x, dtype=float)
        y[index] = np.exp(y[index])
        return y

    def to_new(x):
        y = np.array(x, dtype=float)
        y[index] = np.log(y[index])
        return y

    def jac(x):
        j = np.eye(dim)
        j[index, index] = np.exp(x[index])
        return j

    return Reparametrization(to_old, to_new, jac, f"log(x{index + 1})")


def pullback_metric(field: MetricField, reparam: Reparametrization, point) -> np.ndarray:
    """Metric in the new coordinates at ``point`` (given in new coordinates): ``J^T g J``."""
    x_new = np.asarray(point, dtype=float)
    J = np.asarray(reparam.jacobian(x_new), dtype=float)
    if J.shape != (field.dim, field.dim) or not np.all(np.isfinite(J)):
        raise SingularJacobian(f"{reparam.name}: invalid Jacobian at {x_new.tolist()}")
    sv = np.linalg.svd(J, compute_uv=False)
    if not sv[-1] > 1e-14 * sv[0]:
        raise SingularJacobian(f"{reparam.name}: Jacobian is singular at {x_new.tolist()}")
    g = field.at(reparam.to_old(x_new))
    return sym_matrix(J.T @ g @ J)


def pullback_field(field: MetricField, reparam: Reparametrization) -> MetricField:
    """The metric field expressed in new coordinates (finite-difference mode)."""

    def g(x):
        return pullback_metric(field, reparam, x)

    def domain(x):
        old = reparam.to_old(x)
        return bool(np.all(np.isfinite(old)) and field.domain(old))

    return MetricField(
        field.dim, g, domain, None, None, FINITE_DIFFERENCE, f"{field.name} via {reparam.name}", ()
    )
