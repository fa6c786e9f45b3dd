"""End-to-end oracle suite: one row per acceptance check.

Every check draws its random inputs from a fixed seed, so a report is
reproducible on a given build.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import __version__, complexity, geodesics, geometry, models
from ._accel import backend_name
from .core import DEFAULT_TOLERANCES, ModelParams3, ModelParams4, Tolerances

SEED = 20240611


@dataclass(frozen=True)
class CheckResult:
    index: int
    name: str
    passed: bool
    measured: str
    limit: str
    seconds: float


def _rng(index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64([SEED, index]))


def _reduced_points(rng, count):
    for _ in range(count):
        yield ModelParams3(
            rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(0.1, 10), rng.uniform(-0.95, 0.95)
        )


def check_scalar_curvature(tol: Tolerances):
    rng = _rng(1)
    worst_an = worst_fd = 0.0
    for p in _reduced_points(rng, 100):
        an = geometry.scalar_curvature(geometry.reduced_field(p.r, geometry.ANALYTIC), p.point, tol)
        fd = geometry.scalar_curvature(geometry.reduced_field(p.r, geometry.FINITE_DIFFERENCE), p.point, tol)
        worst_an = max(worst_an, abs(an + 1.5))
        worst_fd = max(worst_fd, abs(fd + 1.5))
    ok = worst_an < 1e-9 and worst_fd < 1e-5
    return ok, f"analytic {worst_an:.2e}, fd {worst_fd:.2e}", "1e-9 / 1e-5"


def check_fisher_quadrature(tol: Tolerances):
    rng = _rng(2)
    worst = 0.0
    for _ in range(20):
        p = ModelParams4(
            rng.uniform(-5, 5), rng.uniform(0.2, 5), rng.uniform(-5, 5), rng.uniform(0.2, 5), rng.uniform(-0.9, 0.9)
        )
        g_q = models.fisher_metric_quadrature(models.BivariateGaussian(p), tol)
        worst = max(worst, float(np.max(np.abs(g_q - models.fisher_metric_analytic_4d(p)))))
    return worst < 1e-6, f"{worst:.2e}", "1e-6"


def check_connection_fd(tol: Tolerances):
    rng = _rng(3)
    worst_g = worst_r = 0.0
    for p in _reduced_points(rng, 100):
        field = geometry.reduced_field(p.r, geometry.FINITE_DIFFERENCE)
        gam = geometry.christoffel(field, p.point, tol).gamma
        ric = geometry.ricci_tensor(field, p.point, tol)
        worst_g = max(worst_g, float(np.max(np.abs(gam - geometry.christoffel_reduced_analytic(p).gamma))))
        worst_r = max(worst_r, float(np.max(np.abs(ric - geometry.ricci_reduced_analytic(p)))))
    ok = worst_g < 1e-5 and worst_r < 1e-5
    return ok, f"christoffel {worst_g:.2e}, ricci {worst_r:.2e}", "1e-5"


def _geodesic_configs(rng, count):
    for _ in range(count):
        yield geodesics.GeodesicConfig(
            rng.uniform(0, 0.95), rng.uniform(0.2, 5), rng.uniform(0.1, 3), -rng.uniform(0.1, 3), 10.0, 1000
        )


def check_geodesic_ode(tol: Tolerances):
    rng = _rng(4)
    worst_err = worst_drift = 0.0
    for cfg in _geodesic_configs(rng, 20):
        exact = geodesics.closed_form_geodesic(cfg)
        path = geodesics.integrate_geodesic(cfg, exact.states[0], tol)
        worst_err = max(worst_err, float(np.max(np.abs(path.states[:, :3] - exact.states[:, :3]))))
        worst_drift = max(worst_drift, path.conserved_drift)
    ok = worst_err < 1e-6 and worst_drift < 1e-8
    return ok, f"abs err {worst_err:.2e}, drift {worst_drift:.2e}", "1e-6 / 1e-8"


def check_ode_residual(tol: Tolerances):
    rng = _rng(5)
    worst = 0.0
    for cfg in _geodesic_configs(rng, 10):
        worst = max(worst, float(np.max(np.abs(geodesics.ode_residual(cfg, cfg.taus)))))
    return worst < 1e-10, f"{worst:.2e}", "1e-10"


def _igc_configs(rng, count):
    for _ in range(count):
        yield complexity.IgcConfig(rng.uniform(0.01, 0.95), rng.uniform(0.2, 5), rng.uniform(0.1, 3))


def check_igc_chain(tol: Tolerances):
    rng = _rng(6)
    worst_avg = worst_asym = 0.0
    for cfg in _igc_configs(rng, 20):
        # keep decay*tau where 10^4 trapezoid nodes resolve the exponential
        tau = rng.uniform(0.05, 20.0) / cfg.decay
        ref = complexity.trapezoid_average(cfg, tau)
        worst_avg = max(worst_avg, abs(complexity.avg_volume(cfg, tau) / ref - 1.0))
        tau_big = rng.uniform(40.0, 400.0) / cfg.decay
        asym = complexity.asymptotic_constant(cfg) / tau_big
        worst_asym = max(worst_asym, abs(complexity.avg_volume(cfg, tau_big) / asym - 1.0))
    ok = worst_avg < 1e-6 and worst_asym < 1e-12
    return ok, f"trapezoid {worst_avg:.2e}, asymptote {worst_asym:.2e}", "1e-6 / 1e-12"


def check_power_law(tol: Tolerances):
    cfg = complexity.IgcConfig(0.5, 1.0, 1.0, tuple(complexity.default_grid(0.1, 1e4, 500)))
    slope = complexity.igc_curve(cfg).fitted_exponent
    return abs(slope + 1.0) <= 0.01, f"slope {slope:.6f}", "-1 +/- 0.01"


def check_compression_ratio(tol: Tolerances):
    f_half = complexity.compression_ratio(0.5)
    simple_gap = abs(f_half - complexity.compression_ratio_simplified(0.5))
    grid = np.linspace(0.0, 1.0, 1002)[1:-1]
    f = np.array([complexity.compression_ratio(r) for r in grid])
    monotone = bool(np.all(np.diff(f) <= 0.0))
    bounded = bool(np.all((f >= 0.0) & (f <= 1.0)))
    near_one = abs(complexity.compression_ratio(0.001) - 1.0)
    cfg = complexity.IgcConfig(0.5, 1.0, 1.0)
    tau = 1e6
    realized = complexity.avg_volume(cfg, tau) / complexity.avg_volume(cfg.uncorrelated(), tau)
    real_gap = abs(realized / f_half - 1.0)
    ok = (
        abs(f_half - 0.6) <= 1e-12
        and simple_gap <= 1e-12
        and monotone
        and bounded
        and near_one <= 1e-3
        and real_gap <= 1e-9
    )
    measured = (
        f"F(0.5)-0.6 {f_half - 0.6:.1e}, monotone {monotone}, in [0,1] {bounded}, "
        f"|F(0.001)-1| {near_one:.1e}, realized {real_gap:.1e}"
    )
    return ok, measured, "1e-12 / 1e-3 / 1e-9"


def check_linear_statistics(tol: Tolerances):
    p = ModelParams4(0.0, 1.0, 0.0, 1.0, 0.7)
    samples = models.sample_bivariate(models.BivariateGaussian(p), 1_000_000, SEED)
    fit = models.best_linear_msq(samples)
    r_hat = models.correlation_coefficient(samples)
    identity_gap = abs(fit.residual - (1.0 - r_hat * r_hat))
    ok = abs(fit.c2 - 0.7) <= 0.01 and abs(fit.residual - 0.51) <= 0.01 and identity_gap <= 1e-12
    return ok, f"c2 {fit.c2:.4f}, residual {fit.residual:.4f}, identity {identity_gap:.1e}", "0.01 / 1e-12"


def check_normalization(tol: Tolerances):
    rng = _rng(10)
    worst = 0.0
    for _ in range(20):
        p = ModelParams4(
            rng.uniform(-5, 5), rng.uniform(0.2, 5), rng.uniform(-5, 5), rng.uniform(0.2, 5), rng.uniform(-0.95, 0.95)
        )
        worst = max(worst, abs(models.density_integral(models.BivariateGaussian(p), tol) - 1.0))
    return worst <= 1e-8, f"{worst:.2e}", "1e-8"


def check_coordinate_invariance(tol: Tolerances):
    rng = _rng(11)
    worst = 0.0
    reparam = geometry.log_coordinate(2, 3)
    for p in _reduced_points(rng, 20):
        field = geometry.pullback_field(geometry.reduced_field(p.r), reparam)
        direct = geometry.scalar_curvature(geometry.reduced_field(p.r), p.point, tol)
        pulled = geometry.scalar_curvature(field, reparam.to_new(p.point), tol)
        worst = max(worst, abs(pulled - direct))
    return worst <= 1e-5, f"{worst:.2e}", "1e-5"


CHECKS: tuple[tuple[str, Callable], ...] = (
    ("constant negative curvature", check_scalar_curvature),
    ("Fisher metric quadrature oracle", check_fisher_quadrature),
    ("Christoffel/Ricci finite differences", check_connection_fd),
    ("geodesic ODE vs closed form", check_geodesic_ode),
    ("closed form satisfies the ODE", check_ode_residual),
    ("IGC chain consistency", check_igc_chain),
    ("power-law decay of the IGC", check_power_law),
    ("compression ratio", check_compression_ratio),
    ("linear-prediction statistics", check_linear_statistics),
    ("density normalization", check_normalization),
    ("coordinate invariance", check_coordinate_invariance),
)


def run_checks(tol: Tolerances = DEFAULT_TOLERANCES) -> list[CheckResult]:
    results = []
    for index, (name, fn) in enumerate(CHECKS, start=1):
        start = time.perf_counter()
        try:
            ok, measured, limit = fn(tol)
        except Exception as exc:  # a crashing oracle is a failed row, not a crashed report
            ok, measured, limit = False, f"{type(exc).__name__}: {exc}", "-"
        results.append(CheckResult(index, name, bool(ok), measured, limit, time.perf_counter() - start))
    return results


def format_report(results: list[CheckResult], tol: Tolerances = DEFAULT_TOLERANCES) -> str:
    width = max(len(r.name) for r in results)
    lines = [
        f"igcx {__version__} validation ({backend_name()})",
        "tolerances: " + ", ".join(f"{k}={v:g}" for k, v in asdict(tol).items()),
        "",
    ]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"{r.index:>2}  {status}  {r.name:<{width}}  {r.seconds:7.2f}s  {r.measured}  (limit {r.limit})"
        )
    passed = sum(r.passed for r in results)
    total_time = math.fsum(r.seconds for r in results)
    lines.append("")
    lines.append(f"{passed}/{len(results)} passed in {total_time:.2f}s")
    return "\n".join(lines)
