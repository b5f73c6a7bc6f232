"""Benchmark: compiled pairwise-bound kernel vs the pure-numpy fallback.

Times gamma_ub evaluations at the study's problem sizes.  Run directly:

    python benchmarks/bench_kernels.py

Set BEAMTRACK_NO_EXT=1 before importing beamtrack to force the fallback at
package level; this script imports both implementations explicitly so one
process covers both.
"""

import argparse
import time

import numpy as np

from beamtrack import kernels
from beamtrack.kernels import ref


def make_problem(rng, m, n):
    s = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    prior = rng.random(n)
    prior /= prior.sum()
    norms_sq = np.sum(np.abs(s) ** 2, axis=0)
    gram_abs2 = np.abs(s.conj().T @ s) ** 2
    return prior, gram_abs2, norms_sq


def time_impl(fn, problems, snr, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        acc = 0.0
        for prior, gram_abs2, norms_sq in problems:
            acc += fn(prior, gram_abs2, norms_sq, snr)
        best = min(best, time.perf_counter() - start)
    return best / len(problems), acc


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--evals", type=int, default=200, help="problems per timing pass")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    snr = 10.0
    print(f"compiled extension loaded: {kernels.IS_COMPILED}")
    print(f"{'size (M x N)':>14} {'compiled':>12} {'fallback':>12} {'speedup':>9}")
    for m, n in [(2, 64), (2, 128), (4, 64), (8, 256)]:
        problems = [make_problem(rng, m, n) for _ in range(args.evals)]
        t_fast, acc_fast = time_impl(kernels.gamma_ub, problems, snr, args.repeats)
        t_ref, acc_ref = time_impl(ref.gamma_ub, problems, snr, args.repeats)
        assert abs(acc_fast - acc_ref) <= 1e-9 * max(1.0, abs(acc_ref))
        print(
            f"{m:>6} x {n:<5} {t_fast * 1e6:>10.1f}us {t_ref * 1e6:>10.1f}us "
            f"{t_ref / t_fast:>8.1f}x"
        )


if __name__ == "__main__":
    main()
