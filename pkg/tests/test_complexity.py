from __future__ import annotations

import math
import warnings

import numpy as np
import pytest

from igcx import complexity as cx
from igcx.core import DomainError, InsufficientWindow, ModelParams3


def _cfg(r=0.5, sigma0=1.0, a=1.0, grid=()):
    return cx.IgcConfig(r, sigma0, a, tuple(grid))


def test_g_prime_examples():
    assert cx.g_prime_sqrt(0.0) == pytest.approx(2.0)
    assert cx.g_prime_sqrt(0.5) == pytest.approx(math.sqrt(15.0) / 1.5)


def test_fisher_density_is_sqrt_det():
    from igcx import models

    p = ModelParams3(0.1, -0.3, 0.7, 0.6)
    g = models.fisher_metric_reduced(p)
    assert cx.fisher_density_reduced(p) == pytest.approx(math.sqrt(np.linalg.det(g)), rel=1e-12)


def test_config_validation():
    with pytest.raises(DomainError, match="0 < r < 1"):
        _cfg(r=0.0)
    with pytest.raises(DomainError, match="0 < r < 1"):
        _cfg(r=-0.2)
    with pytest.raises(DomainError, match="a="):
        _cfg(a=0.0)
    with pytest.raises(DomainError, match="increasing"):
        _cfg(grid=(1.0, 0.5))
    with pytest.raises(DomainError, match="r = 0"):
        cx.IgcConfig(0.3, 1.0, 1.0, (), baseline=True)


def test_baseline_uses_r_zero():
    base = _cfg().uncorrelated()
    assert base.r == 0.0
    assert base.rate == pytest.approx(0.5)


def test_asymptotic_constants_by_hand():
    # r = 0.5: (1/2) sqrt(15)/1.5 / (5/6)^1.5 = 1.2 sqrt(2); baseline: (1/2) 2 / 0.5^1.5 = 2 sqrt(2)
    assert cx.asymptotic_constant(_cfg()) == pytest.approx(1.2 * math.sqrt(2.0), rel=1e-14)
    assert cx.asymptotic_constant(_cfg().uncorrelated()) == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-14)


def test_volume_decays_at_the_rate():
    cfg = _cfg(r=0.3, sigma0=2.0, a=0.7)
    t = np.linspace(0.0, 5.0, 20001)
    logv = np.log(cx.volume_at(cfg, t))
    np.testing.assert_allclose(-np.gradient(logv, t), cfg.decay, rtol=1e-6)


def test_volume_and_average_at_zero():
    cfg = _cfg(r=0.8, sigma0=0.3, a=2.0)
    assert cx.avg_volume(cfg, 0.0) == cx.volume_at(cfg, 0.0)
    assert cx.avg_volume(cfg, 1e-12) == pytest.approx(cx.volume_at(cfg, 0.0), rel=1e-11)


def test_series_branch_is_continuous():
    cfg = _cfg()
    edge = 1e-6 / cfg.decay
    below = cx.avg_volume(cfg, edge * (1 - 1e-9))
    above = cx.avg_volume(cfg, edge * (1 + 1e-9))
    assert below == pytest.approx(above, rel=1e-12)


def test_avg_volume_matches_trapezoid(rng):
    for _ in range(20):
        cfg = _cfg(rng.uniform(0.01, 0.99), rng.uniform(0.2, 5.0), rng.uniform(0.1, 3.0))
        tau = rng.uniform(0.1, 20.0) / cfg.decay
        assert cx.avg_volume(cfg, tau) == pytest.approx(cx.trapezoid_average(cfg, tau), rel=1e-6)


def test_large_tau_hits_the_asymptote():
    cfg = _cfg(r=0.9, sigma0=0.5, a=2.0)
    tau = 40.0 / cfg.decay
    assert cx.avg_volume(cfg, tau) * tau == pytest.approx(cx.asymptotic_constant(cfg), rel=1e-12)


def test_ige_is_log_of_average():
    cfg = _cfg()
    assert cx.ige(cfg, 3.0) == pytest.approx(math.log(cx.avg_volume(cfg, 3.0)))


def test_negative_tau_rejected():
    with pytest.raises(DomainError):
        cx.avg_volume(_cfg(), -1.0)


def test_curve_default_example():
    curve = cx.igc_curve(_cfg(grid=np.logspace(-1, 4, 500)))
    assert curve.fitted_exponent == pytest.approx(-1.0, abs=0.01)
    assert np.all(curve.avg_vol > 0)
    np.testing.assert_array_equal(curve.ige, np.log(curve.avg_vol))
    # vol is exp(-decay tau) times a constant; it is a positive double until decay*tau passes ~745
    representable = _cfg().decay * curve.taus < 700
    assert np.all(curve.vol[representable] > 0)
    assert np.all(curve.vol >= 0)


def test_curve_warns_before_asymptotic_regime():
    with pytest.warns(UserWarning, match="asymptotic"):
        cx.igc_curve(_cfg(grid=np.logspace(-1, 1, 100)))


def test_fit_needs_ten_nodes():
    curve = cx.igc_curve(_cfg(grid=np.logspace(-1, 4, 500)))
    with pytest.raises(InsufficientWindow):
        cx.fit_power_law(curve, (9.99e3, 1e4))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(InsufficientWindow):
            cx.igc_curve(_cfg(grid=np.logspace(0, 4, 20)))


def test_fit_recovers_known_exponent():
    t = np.logspace(0, 3, 200)
    curve = cx.IgcCurve(t, t, 3.0 * t**-2.5, np.log(3.0 * t**-2.5), float("nan"))
    assert cx.fit_power_law(curve) == pytest.approx(-2.5, abs=1e-12)


def test_ratio_examples():
    assert cx.compression_ratio(0.5) == pytest.approx(0.6, abs=1e-12)
    assert cx.compression_ratio_simplified(0.5) == pytest.approx(0.6, abs=1e-12)
    assert abs(cx.compression_ratio(0.001) - 1.0) < 1e-3
    with pytest.raises(DomainError):
        cx.compression_ratio(1.0)


def test_ratio_forms_agree():
    for r in np.linspace(0.001, 0.999, 999):
        assert cx.compression_ratio(r) == pytest.approx(cx.compression_ratio_simplified(r), rel=1e-13)


def test_ratio_is_realized_by_curves():
    cfg = _cfg(r=0.7, sigma0=1.3, a=0.4)
    tau = 1e3
    assert cfg.uncorrelated().decay * tau > 40
    realized = cx.avg_volume(cfg, tau) / cx.avg_volume(cfg.uncorrelated(), tau)
    assert realized == pytest.approx(cx.compression_ratio(0.7), rel=1e-9)
