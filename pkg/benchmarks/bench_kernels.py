"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [N]   (grid N^3, default 64)
"""

import sys
import timeit

import numpy as np

from nsac._kernels import available_backends


def inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    rho = np.ascontiguousarray(0.1 * rng.standard_normal(n**3))
    m = n * n * (n // 2 + 1)
    kd = np.ascontiguousarray(rng.standard_normal((3, m)))
    kd2 = np.einsum("jm,jm->m", kd, kd)
    dt, c0, c2 = 0.1, 1.0, 1.0
    inv_t = 1.0 / (c0 + dt * kd2)
    inv_kd2 = np.where(kd2 > 0, 1.0 / np.where(kd2 > 0, kd2, 1.0), 0.0)
    det = (c0 + dt * kd2) * c0 + dt**2 * c2 * kd2
    cplx = lambda *shape: np.ascontiguousarray(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    solve = (cplx(m), cplx(3, m), cplx(m), kd, kd2, inv_t, inv_kd2,
             (c0 + dt * kd2) / det, c0 / det, dt / det, 1.0 / (c0 + dt * kd2), c2)
    return rho, solve


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 64
    rho, solve = inputs(n)
    print(f"grid {n}^3")
    for name, mod in available_backends().items():
        t_cl = min(timeit.repeat(lambda: mod.closures(rho, 1.0, 2.0), number=5, repeat=3)) / 5
        t_so = min(timeit.repeat(lambda: mod.implicit_solve(*solve), number=5, repeat=3)) / 5
        print(f"{name:>7}: closures {1e3 * t_cl:8.2f} ms   implicit_solve {1e3 * t_so:8.2f} ms")


if __name__ == "__main__":
    main()
