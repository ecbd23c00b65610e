"""Timing comparison of the compiled hot loops against their numpy fallbacks.

Run:  python benchmarks/bench_backends.py [n] [order]

Times the Hermite-series kernel accumulation and the Stieltjes fixed-point
iteration on both backends and checks they agree. The compiled path must be
available for this script (do not set NTKLAB_NO_NUMBA).
"""

import sys
import time

import numpy as np

from ntklab import accel
from ntklab.activation import normalize, zeta_table
from ntklab.datagen import SpectralMeasure, generate


def timeit(fn, *args, repeat=5):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_series(n, order):
    act = normalize("relu")
    X = generate("gaussian-iid-scaled", d0=n, n=n, seed=0).X
    t = np.linalg.norm(X, axis=0)
    G = (X.T @ X) / np.outer(t, t)
    np.fill_diagonal(G, 1.0)
    C = np.ascontiguousarray(zeta_table(act, t, order))

    accel.series_symmetric(G, C)  # compile before timing
    t_jit, out_jit = timeit(accel.series_symmetric, G, C)
    t_np, out_np = timeit(accel._series_symmetric_np, G, C)
    err = float(np.max(np.abs(out_jit - out_np)))
    print(f"series  n={n} order={order}: numba {t_jit * 1e3:8.2f} ms   "
          f"numpy {t_np * 1e3:8.2f} ms   speedup {t_np / t_jit:5.2f}x   "
          f"max|diff| {err:.2e}")
    assert err < 1e-12


def bench_fixed_point(n_atoms):
    mu = SpectralMeasure.marchenko_pastur(0.7)
    xs, ws = mu.atoms()
    xs = np.resize(xs, n_atoms)
    ws = np.full(n_atoms, 1.0 / n_atoms)
    z = complex(0.3, 1e-4)

    def sweep(step):
        beta = 1j
        for _ in range(200):
            beta, m, res, it = step(xs, ws, z, beta, 0.5, 1e-13, 4000)
        return m

    accel.fixed_point_step(xs, ws, z, 1j, 0.5, 1e-13, 10)  # compile
    t_jit, m_jit = timeit(sweep, accel.fixed_point_step, repeat=3)
    t_np, m_np = timeit(sweep, accel._fixed_point_py, repeat=3)
    err = abs(m_jit - m_np)
    print(f"fixed point atoms={n_atoms}: numba {t_jit * 1e3:8.2f} ms   "
          f"numpy {t_np * 1e3:8.2f} ms   speedup {t_np / t_jit:5.2f}x   "
          f"|diff| {err:.2e}")
    assert err < 1e-12


if __name__ == "__main__":
    if not accel.USE_NUMBA:
        sys.exit("numba backend unavailable (NTKLAB_NO_NUMBA set or numba missing)")
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 1500
    order = int(sys.argv[2]) if len(sys.argv) > 2 else 40
    bench_series(n, order)
    bench_fixed_point(512)
