"""Compare the numba and numpy paths of the hot kernels.

    python benchmarks/bench_kernels.py [--repeat 5] [--n 31] [--m 5000]

Inputs mirror the detector workload: a whitened 31-channel frame for
Comon's sweeps, the 31 JADE eigen-matrices of that frame for the joint
diagonalization, and its covariance for the Jacobi eigensolver. Each
kernel is warmed up once per backend (so numba compile time is excluded)
and the best of ``--repeat`` timings is reported with the speed-up.
"""

import argparse
import time

import numpy as np

from cdmaica import _kernels
from cdmaica.channel import LinkScenario, synthesize
from cdmaica.numkit import covariance, cum4_eigenmatrices, whiten

BACKENDS = ("numba", "numpy")


def workload(n, m, seed):
    frame = synthesize(LinkScenario(users=n - 1, chips=31, symbols=m, snr_db=-5.0, seed=seed))
    x = frame.received[:n]
    z, _ = whiten(x)
    mats = cum4_eigenmatrices(z, n).weighted()
    return {
        "jacobi_eig": (covariance(x),),
        "joint_diag": (mats,),
        "comon_sweeps": (z,),
    }


def best_time(fn, args, backend, repeat):
    fn(*args, backend=backend)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def run(n=31, m=5000, repeat=5, seed=0):
    rows = []
    for name, args in workload(n, m, seed).items():
        fn = getattr(_kernels, name)
        times = {b: best_time(fn, args, b, repeat) for b in BACKENDS}
        rows.append((name, times["numba"], times["numpy"], times["numpy"] / times["numba"]))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=31, help="channels (<= 31)")
    p.add_argument("--m", type=int, default=5000, help="samples per channel")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    rows = run(args.n, args.m, args.repeat, args.seed)
    print(f"{'kernel':<14}{'numba [ms]':>12}{'numpy [ms]':>12}{'speed-up':>10}")
    for name, t_nb, t_np, ratio in rows:
        print(f"{name:<14}{1e3 * t_nb:>12.2f}{1e3 * t_np:>12.2f}{ratio:>9.1f}x")
    return rows


if __name__ == "__main__":
    main()
