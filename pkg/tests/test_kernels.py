"""The numba and numpy implementations of every kernel must agree."""

from __future__ import annotations

import numpy as np
import pytest

from igcx import _accel, kernels


def _spd(rng, n):
    a = rng.standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


@pytest.mark.parametrize("n", [1, 3, 4, 6])
def test_cholesky_inverse_parity(rng, n):
    m = _spd(rng, n)
    inv_nb, det_nb, bad_nb = kernels._cholesky_inverse_nb(m)
    inv_np, det_np, bad_np = kernels._cholesky_inverse_np(m)
    assert bad_nb == bad_np == -1
    np.testing.assert_allclose(inv_nb, inv_np, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(inv_nb @ m, np.eye(n), atol=1e-12)
    assert det_nb == pytest.approx(np.linalg.det(m), rel=1e-12)
    assert det_np == pytest.approx(det_nb, rel=1e-12)


def test_cholesky_reports_bad_pivot():
    m = np.diag([2.0, 1.0, -3.0])
    assert kernels._cholesky_inverse_nb(m)[2] == 2
    assert kernels._cholesky_inverse_np(m)[2] == 2


def test_christoffel_and_ricci_parity(rng):
    n = 4
    ginv = np.linalg.inv(_spd(rng, n))
    dg = rng.standard_normal((n, n, n))
    dg = dg + dg.transpose(0, 2, 1)
    g_nb = kernels._christoffel_nb(ginv, dg)
    g_np = kernels._christoffel_np(ginv, dg)
    np.testing.assert_allclose(g_nb, g_np, rtol=1e-12, atol=1e-14)
    dgamma = rng.standard_normal((n, n, n, n))
    np.testing.assert_allclose(kernels._ricci_nb(g_nb, dgamma), kernels._ricci_np(g_nb, dgamma), rtol=1e-12, atol=1e-13)


def test_christoffel_contract_formula(rng):
    n = 3
    ginv = np.linalg.inv(_spd(rng, n))
    dg = rng.standard_normal((n, n, n))
    dg = dg + dg.transpose(0, 2, 1)
    expected = 0.5 * np.einsum("kl,lij->kij", ginv, dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg)
    np.testing.assert_allclose(kernels.christoffel_contract(ginv, dg), expected, atol=1e-13)


def test_outer_sum_parity(rng):
    s = rng.standard_normal((500, 4))
    w = rng.uniform(size=500)
    ref = (s * w[:, None]).T @ s
    np.testing.assert_allclose(kernels._outer_sum_nb(s, w), ref, rtol=1e-12)
    np.testing.assert_allclose(kernels._outer_sum_np(s, w), ref, rtol=1e-12)


def test_cumulative_trapezoid_parity():
    from scipy.integrate import cumulative_trapezoid

    x = np.sort(np.random.default_rng(3).uniform(0, 5, 300))
    y = np.sin(x)
    ref = cumulative_trapezoid(y, x, initial=0.0)
    np.testing.assert_allclose(kernels._cumtrapz_nb(x, y), ref, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(kernels._cumtrapz_np(x, y), ref, rtol=1e-13, atol=1e-15)


def test_hermite_parity_and_exactness():
    # cubic Hermite interpolation reproduces cubics exactly
    taus = np.linspace(0.0, 2.0, 7)
    f = lambda t: t**3 - 2 * t + 1  # noqa: E731
    df = lambda t: 3 * t**2 - 2  # noqa: E731
    states = np.column_stack([f(taus)] * 6)
    derivs = np.column_stack([df(taus)] * 6)
    grid = np.linspace(0.0, 2.0, 41)
    a = kernels._hermite_nb(taus, states, derivs, grid)
    b = kernels._hermite_np(taus, states, derivs, grid)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(a[:, 0], f(grid), atol=1e-13)


def test_geodesic_rhs_matches_direct_form():
    y = np.array([0.1, -0.2, 0.7, 0.3, -0.5, 0.2])
    r = 0.4
    out = np.empty(6)
    kernels.geodesic_rhs(y, r, out)
    mx, my, s, vx, vy, vs = y
    c = 0.25 / (r * r - 1)
    assert np.allclose(out[:3], y[3:])
    assert out[3] == pytest.approx(2 * vx * vs / s)
    assert out[4] == pytest.approx(2 * vy * vs / s)
    assert out[5] == pytest.approx(vs * vs / s + c * (vx * vx + vy * vy) / s - r * c * vx * vy / s)


def test_dispatch_follows_flag():
    pick = "_nb" if _accel.USE_NUMBA else "_np"
    pairs = {
        "cholesky_inverse": "_cholesky_inverse",
        "christoffel_contract": "_christoffel",
        "ricci_contract": "_ricci",
        "outer_sum": "_outer_sum",
        "cumulative_trapezoid": "_cumtrapz",
        "hermite_resample": "_hermite",
    }
    for public, private in pairs.items():
        assert getattr(kernels, public) is getattr(kernels, private + pick)
    assert _accel.backend_name().startswith("numba" if _accel.USE_NUMBA else "numpy")


def test_thread_cap(monkeypatch):
    monkeypatch.delenv("IGCX_THREADS", raising=False)
    assert _accel.thread_cap() is None
    monkeypatch.setenv("IGCX_THREADS", "1")
    assert _accel.thread_cap() == 1
    for bad in ("0", "-3", "two"):
        monkeypatch.setenv("IGCX_THREADS", bad)
        with pytest.raises(ValueError, match="positive integer"):
            _accel.thread_cap()
