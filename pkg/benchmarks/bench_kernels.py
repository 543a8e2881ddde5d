"""Time the permutation kernel: compiled extension against the numpy fallback.

    python3 benchmarks/bench_kernels.py --slots 100 --replicates 10000

Both backends must return identical counts; the script checks that before
reporting timings.
"""

import argparse
import time

import numpy as np

from lsmatch import kernels


def _inputs(n_slots, n_markers, rate, seed):
    rng = np.random.default_rng(seed)
    donors = (rng.random((n_slots, n_markers)) < rate).astype(np.uint8)
    slot_prev = (rng.random((n_slots, n_markers)) < rate).astype(np.uint8)
    slot_prev[0] = 0
    return donors, slot_prev


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slots", type=int, default=100, help="focal utterances per conversation")
    ap.add_argument("--markers", type=int, default=8)
    ap.add_argument("--replicates", type=int, default=10_000)
    ap.add_argument("--rate", type=float, default=0.4, help="marker incidence rate")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    donors, slot_prev = _inputs(args.slots, args.markers, args.rate, args.seed)
    backends = sorted(kernels.BACKENDS)
    results = {b: kernels.joint_counts(donors, slot_prev, args.seed, 0, args.replicates, backend=b) for b in backends}
    ref = results[backends[0]]
    for b in backends[1:]:
        if not np.array_equal(ref, results[b]):
            raise SystemExit(f"backend {b!r} disagrees with {backends[0]!r}")

    print(f"{args.replicates} replicates, {args.slots} slots, {args.markers} markers (best of {args.repeat})")
    timing = {}
    for b in backends:
        timing[b] = best_of(
            lambda: kernels.joint_counts(donors, slot_prev, args.seed, 0, args.replicates, backend=b), args.repeat
        )
        print(f"  {b:<9} {timing[b] * 1e3:9.2f} ms")
    if "compiled" in timing:
        print(f"  speedup   {timing['python'] / timing['compiled']:9.1f}x")
    else:
        print("  compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
