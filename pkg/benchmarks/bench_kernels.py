"""Compare the numba kernels with their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Every pair is checked for agreement before it is timed.  Compilation is
triggered once up front and excluded from the timings.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from igcx import _accel, kernels


def _cases(rng):
    n = 4
    a = rng.standard_normal((n, n))
    spd = a @ a.T + n * np.eye(n)
    ginv = np.linalg.inv(spd)
    dg = rng.standard_normal((n, n, n))
    dg = dg + dg.transpose(0, 2, 1)
    gamma = kernels._christoffel_np(ginv, dg)
    dgamma = rng.standard_normal((n, n, n, n))
    scores = rng.standard_normal((128 * 128, 4))
    weights = rng.uniform(size=128 * 128)
    x = np.linspace(0.0, 10.0, 10_000)
    y = np.exp(-x)
    taus = np.linspace(0.0, 10.0, 400)
    states = np.column_stack([np.sin(taus)] * 6)
    derivs = np.column_stack([np.cos(taus)] * 6)
    grid = np.linspace(0.0, 10.0, 1000)
    return [
        ("cholesky_inverse 4x4", kernels._cholesky_inverse_nb, kernels._cholesky_inverse_np, (spd,)),
        ("christoffel 4D", kernels._christoffel_nb, kernels._christoffel_np, (ginv, dg)),
        ("ricci 4D", kernels._ricci_nb, kernels._ricci_np, (gamma, dgamma)),
        ("outer_sum 16384x4", kernels._outer_sum_nb, kernels._outer_sum_np, (scores, weights)),
        ("cumtrapz 10^4", kernels._cumtrapz_nb, kernels._cumtrapz_np, (x, y)),
        ("hermite 400->1000", kernels._hermite_nb, kernels._hermite_np, (taus, states, derivs, grid)),
    ]


def _first(out):
    return out[0] if isinstance(out, tuple) else out


def _best(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05:
        number *= 4
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not _accel.USE_NUMBA:
        raise SystemExit("numba is disabled (IGCX_DISABLE_NUMBA); nothing to compare")

    rng = np.random.default_rng(0)
    print(f"backend: {_accel.backend_name()}")
    print(f"{'kernel':<22}{'numba [us]':>12}{'numpy [us]':>12}{'speedup':>10}")
    for name, nb, npf, fargs in _cases(rng):
        np.testing.assert_allclose(_first(nb(*fargs)), _first(npf(*fargs)), rtol=1e-10, atol=1e-12)
        t_nb = _best(nb, fargs, args.repeat)
        t_np = _best(npf, fargs, args.repeat)
        print(f"{name:<22}{t_nb * 1e6:>12.2f}{t_np * 1e6:>12.2f}{t_np / t_nb:>10.1f}x")

    # the geodesic stepper has no vectorized form; compare against the same code interpreted
    y0 = np.array([-1.0954451150103321, 1.0954451150103321, 1.0, 1.0, -1.0, 0.0])
    call = (y0, 0.5, 10.0, 1e-11, 2.0 * 0.9128709291752769, 1_000_000)
    kernels.dopri5_geodesic(*call)
    t_nb = _best(kernels.dopri5_geodesic, call, args.repeat)
    t_py = _best(kernels.dopri5_geodesic.py_func, call, 1)
    print(f"{'dopri5 geodesic':<22}{t_nb * 1e6:>12.2f}{t_py * 1e6:>12.2f}{t_py / t_nb:>10.1f}x  (numpy column: interpreted)")


if __name__ == "__main__":
    main()
