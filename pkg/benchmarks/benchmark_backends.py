"""Times the compiled and vectorized Monte Carlo backends against each other.

Both backends walk the same counter-based random stream, so their counts are
bit-identical; this script asserts that, then reports best-of-N wall times
and the speedup of the compiled path. The first compiled call is a warmup so
jit compilation (or cache loading) never lands in a timed run.

Usage:
    python3 benchmarks/benchmark_backends.py [--trials 2000000] [--repeats 5]
"""

import argparse
import time

from subspace_qkd import mc
from subspace_qkd.noise_spatial import SpatialParams
from subspace_qkd.noise_temporal import TemporalParams

TEMPORAL = TemporalParams.symmetric(
    pair_rate=8e5, env_rate=3.5e6, dark_rate=1e3,
    loss=0.5, efficiency=0.6, bin_width=1e-9,
)
SPATIAL = SpatialParams(
    pair_rate=2e5, env_rate_a=21000.0, env_rate_b=21000.0,
    dark_rate_a=600.0, dark_rate_b=600.0, loss_a=0.0, loss_b=0.984,
    efficiency_a=0.6, efficiency_b=0.6, window_width=1e-7,
)


def best_time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def counts(result):
    post, matched = result
    return (post.successes, post.trials, matched.successes, matched.trials)


def bench(name, simulate, params, d, trials, seed, repeats):
    runs = {
        backend: (lambda b=backend: simulate(params, d, trials, seed, backend=b))
        for backend in ("numba", "numpy")
    }
    reference = counts(runs["numba"]())  # warmup; also the equality reference
    assert counts(runs["numpy"]()) == reference, "backends disagree"
    times = {backend: best_time(fn, repeats) for backend, fn in runs.items()}
    speedup = times["numpy"] / times["numba"]
    print(
        f"{name:<10} d={d:<3} trials={trials:.0e}  "
        f"numba {times['numba'] * 1e3:8.1f} ms  "
        f"numpy {times['numpy'] * 1e3:8.1f} ms  "
        f"speedup {speedup:5.1f}x"
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=2_000_000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not mc.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    for d in (2, 8, 32):
        bench("temporal", mc.simulate_temporal, TEMPORAL, d,
              args.trials, args.seed, args.repeats)
    for d in (4, 16):
        bench("spatial", mc.simulate_spatial, SPATIAL, d,
              args.trials, args.seed, args.repeats)


if __name__ == "__main__":
    main()
