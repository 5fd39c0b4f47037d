"""Compare the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3]

Prints one line per kernel: best wall time of each backend, the speedup and
the largest relative difference between the two results.  The numba timing
excludes the first (compiling) call.
"""

import argparse
import time

import numpy as np

from hql import kernels
from hql.besov import BUCKET_MIN, N_BUCKETS, make_x3_grid


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def rel_diff(a, b):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    scale = np.maximum(np.abs(a), np.abs(b)).max()
    return float(np.abs(a - b).max() / scale) if scale > 0 else 0.0


def cases(rng):
    t = rng.normal(size=2_000_000) * 10.0 ** rng.uniform(-6, 2, size=2_000_000)
    w = rng.uniform(0.1, 1.0, size=t.size)
    yield "phi_pk (2e6, p=2 kappa=1)", (lambda: kernels.phi_pk_nb(t, 2.0, 1.0)), (lambda: kernels.phi_pk_np(t, 2.0, 1.0))
    yield (
        "weighted_phi_sum (2e6, p=3.5 kappa=0.5)",
        lambda: kernels.weighted_phi_sum_nb(t, w, 0.7, 3.5, 0.5),
        lambda: kernels.weighted_phi_sum_np(t, w, 0.7, 3.5, 0.5),
    )
    yield (
        "weighted_phi_sum (2e6, p=2 kappa=2)",
        lambda: kernels.weighted_phi_sum_nb(t, w, 0.7, 2.0, 2.0),
        lambda: kernels.weighted_phi_sum_np(t, w, 0.7, 2.0, 2.0),
    )
    grid = make_x3_grid(5)
    idx = np.arange(grid.n, dtype=np.int64)
    args = (grid.points, idx, grid.metric_code, grid.metric_param, BUCKET_MIN, N_BUCKETS)
    yield (
        "pair_bucket_counts (x3 level 5, 5.9e5 pairs)",
        lambda: kernels.pair_bucket_counts_nb(*args),
        lambda: kernels.pair_bucket_counts_np(*args),
    )
    counts = kernels.pair_bucket_counts_nb(*args)
    prob = np.full(N_BUCKETS, 0.25)
    caps = counts.copy()
    yield (
        "pair_select (x3 level 5, p=0.25)",
        lambda: kernels.pair_select_nb(*args, prob, caps, 7)[2],
        lambda: kernels.pair_select_np(*args, prob, caps, 7)[2],
    )
    N = 257
    ca = rng.integers(0, N, size=4000)
    cb = rng.integers(-(N - 1), N, size=4000)
    keep = (ca > 0) | (cb > 0)
    ca, cb = ca[keep], cb[keep]
    M = (N - ca) * (N - np.abs(cb))
    ck = np.minimum(M, 500).astype(np.int64)
    full = ck == M
    yield (
        "lattice_pairs (N=257, ~2e6 pairs)",
        lambda: kernels.lattice_pairs_nb(N, ca, cb, ck, full, np.uint64(7))[0],
        lambda: kernels.lattice_pairs_np(N, ca, cb, ck, full, np.uint64(7))[0],
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':44s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, nb, npf in cases(rng):
        nb()  # compile
        t_nb, r_nb = best_of(nb, args.repeat)
        t_np, r_np = best_of(npf, args.repeat)
        print(f"{name:44s} {t_nb:9.4f} {t_np:9.4f} {t_np / t_nb:8.1f} {rel_diff(r_nb, r_np):13.2e}")


if __name__ == "__main__":
    main()
