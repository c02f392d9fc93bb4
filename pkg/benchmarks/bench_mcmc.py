"""Time the flip-chain kernel under numba and pure numpy on identical inputs.

    python3 benchmarks/bench_mcmc.py --n 16 32 --sweeps 200
"""

import argparse
import time

import numpy as np

from hexatile.sampler import _numba_kernel, _sweeps_numpy, lowest_tiling


def bench(kernel, n: int, sweeps: int, alpha: float, seed: int) -> tuple[float, np.ndarray]:
    rng = np.random.default_rng(seed)
    H = np.array(lowest_tiling(n).heights, dtype=np.int64)
    L = H.shape[1]
    D = rng.random((sweeps, 4, n, L))
    U = rng.random((sweeps, 4, n, L))
    t = time.perf_counter()
    kernel(H, D, U, alpha)
    return time.perf_counter() - t, H


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[8, 16, 32, 64])
    ap.add_argument("--sweeps", type=int, default=200)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    nb = _numba_kernel()
    bench(nb, 2, 1, a.alpha, 0)  # compile
    print(f"{'n':>4} {'sweeps':>7} {'numba s':>10} {'numpy s':>10} {'speedup':>8} same")
    for n in a.n:
        t1, h1 = bench(nb, n, a.sweeps, a.alpha, a.seed)
        t2, h2 = bench(_sweeps_numpy, n, a.sweeps, a.alpha, a.seed)
        print(f"{n:>4} {a.sweeps:>7} {t1:>10.4f} {t2:>10.4f} {t2 / t1:>8.1f} {np.array_equal(h1, h2)}")


if __name__ == "__main__":
    main()
