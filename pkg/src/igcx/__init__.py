"""Information geometric complexity of correlated Gaussian models.

Fisher-Rao metrics, curvature, geodesics and the time-averaged statistical
volume explored along geodesics, with numba-accelerated kernels.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DEFAULT_TOLERANCES,
    DegenerateRate,
    DegenerateSample,
    DomainError,
    DomainViolation,
    IgcxError,
    InsufficientWindow,
    ModelParams3,
    ModelParams4,
    NotPositiveDefinite,
    QuadratureUnconverged,
    SigmaCollapse,
    SingularJacobian,
    StepFailure,
    Tolerances,
)

__all__ = [
    "__version__",
    "DEFAULT_TOLERANCES",
    "DegenerateRate",
    "DegenerateSample",
    "DomainError",
    "DomainViolation",
    "IgcxError",
    "InsufficientWindow",
    "ModelParams3",
    "ModelParams4",
    "NotPositiveDefinite",
    "QuadratureUnconverged",
    "SigmaCollapse",
    "SingularJacobian",
    "StepFailure",
    "Tolerances",
]
