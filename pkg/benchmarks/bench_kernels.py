"""Time the compiled and pure-numpy kernels side by side.

    python3 benchmarks/bench_kernels.py [--repeats 5]

Reports the best-of-N wall time of each kernel on a fixed workload and the
end-to-end time of a batch of sign tests and fixed-confidence runs with the
backend switched in-process.
"""
import argparse
import time

import numpy as np

from condorcet import kernels
from condorcet.complexity import optimal_sparsity
from condorcet.env import DuelOracle, gen_block_minimax, gen_random_cw
from condorcet.identify import fc_cwi
from condorcet.identify import test_cw as sign_test


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def scan_call(impl, bits, log_const):
    def go():
        m = bits.shape[0]
        impl(bits, np.ones(m, bool), np.zeros(m, np.int64), np.zeros(m, np.int64), log_const, 0, 10**9)
    return go


def end_to_end(flag, what):
    kernels.HAS_NUMBA = flag
    if what == "sign_test":
        m = gen_random_cw(16, (0.01, 0.05), np.random.default_rng(0))
        def go():
            for seed in range(20):
                sign_test(DuelOracle(m), 0, 0.1, 200_000, np.random.default_rng(seed))
    elif what == "fc_cwi":
        m = gen_block_minimax([0] + [0.2] * 7, [0] + [2] * 7, 0.05)
        def go():
            for seed in range(5):
                fc_cwi(DuelOracle(m), 0.1, rng=np.random.default_rng(seed))
    else:
        m = gen_random_cw(40, (0.01, 0.25), np.random.default_rng(1))
        def go():
            optimal_sparsity(m, 0.1, cap_fraction=None)
    return go


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not kernels.HAS_NUMBA:
        print("numba backend disabled; only the numpy path can be timed")
    rng = np.random.default_rng(0)
    bits = (rng.random((31, 4096)) < 0.53).astype(np.uint8)
    cost = rng.random((39, 39))
    maxterm = rng.random((39, 39))
    thresholds = np.unique(maxterm)

    workloads = [
        ("testcw_scan 31x4096", scan_call(kernels._testcw_loop, bits, 2.0),
         scan_call(kernels._testcw_numpy, bits, 2.0)),
        ("sparsity_choices 39x39", lambda: kernels._sparsity_loop(cost, maxterm, thresholds),
         lambda: kernels._sparsity_numpy(cost, maxterm, thresholds)),
    ]
    rows = []
    for name, loop, vec in workloads:
        loop()  # compile outside the timer
        rows.append((name, best_of(loop, args.repeats), best_of(vec, args.repeats)))

    original = kernels.HAS_NUMBA
    for what in ("sign_test", "fc_cwi", "optimal_sparsity"):
        timed = []
        for flag in (original, False):
            go = end_to_end(flag, what)
            go()
            timed.append(best_of(go, max(args.repeats // 2, 1)))
        rows.append((f"end-to-end {what}", *timed))
    kernels.HAS_NUMBA = original

    print(f"{'workload':<28}{'numba [s]':>12}{'numpy [s]':>12}{'ratio':>9}")
    for name, a, b in rows:
        print(f"{name:<28}{a:>12.4f}{b:>12.4f}{b / a:>9.2f}")


if __name__ == "__main__":
    main()
