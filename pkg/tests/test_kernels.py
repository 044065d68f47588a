import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condorcet import kernels
from condorcet.env import DuelOracle, gen_random_cw
from condorcet.identify import test_cw as sign_test


def reference_scan(bits, log_const, cap):
    """Round-robin sign test from a fresh state, one sample at a time."""
    m, b = bits.shape
    active = [True] * m
    wins = [0] * m
    counts = [0] * m
    t = 0
    while True:
        live = [j for j in range(m) if active[j]]
        if not live:
            return kernels.CLEARED, t, wins, counts
        j = min(live, key=lambda q: (counts[q], q))
        if counts[j] == b:
            return (kernels.CAPPED if t >= cap else kernels.CONTINUE), t, wins, counts
        if t >= cap:
            return kernels.CAPPED, t, wins, counts
        wins[j] += int(bits[j, counts[j]])
        counts[j] += 1
        t += 1
        n = counts[j]
        thr = math.sqrt((log_const + 2 * math.log(n)) / n)
        gap = wins[j] / n - 0.5
        if gap >= thr:
            active[j] = False
            if not any(active):
                return kernels.CLEARED, t, wins, counts
        elif gap <= -thr:
            return kernels.ABORTED, t, wins, counts


def _run(fn, bits, log_const, cap, state=None):
    m = bits.shape[0]
    active, wins, counts = state if state else (np.ones(m, bool), np.zeros(m, np.int64), np.zeros(m, np.int64))
    active, wins, counts = active.copy(), wins.copy(), counts.copy()
    status, t = fn(bits, active, wins, counts, log_const, 0, cap)
    return status, t, active, wins, counts


bit_blocks = st.integers(1, 6).flatmap(
    lambda m: st.integers(1, 40).flatmap(
        lambda b: st.tuples(
            st.just((m, b)),
            st.lists(st.floats(0.0, 1.0), min_size=m, max_size=m),
            st.integers(0, 2**32 - 1),
        )
    )
)


class TestSignTestScan:
    @settings(max_examples=300, deadline=None)
    @given(spec=bit_blocks, log_const=st.floats(0.0, 3.0), cap=st.integers(0, 300))
    def test_backends_agree_with_reference(self, spec, log_const, cap):
        (m, b), probs, seed = spec
        rng = np.random.default_rng(seed)
        bits = (rng.random((m, b)) < np.array(probs)[:, None]).astype(np.uint8)
        ref_status, ref_t, ref_w, ref_c = reference_scan(bits, log_const, cap)
        for fn in (kernels._testcw_loop, kernels._testcw_numpy):
            status, t, active, wins, counts = _run(fn, bits, log_const, cap)
            assert (status, t) == (ref_status, ref_t)
            np.testing.assert_array_equal(wins, ref_w)
            np.testing.assert_array_equal(counts, ref_c)
            assert t == counts.sum()

    def test_resumes_across_blocks(self):
        rng = np.random.default_rng(0)
        probs = np.array([0.6, 0.55, 0.7])
        full = (rng.random((3, 64)) < probs[:, None]).astype(np.uint8)
        for fn in (kernels._testcw_loop, kernels._testcw_numpy):
            active, wins, counts = np.ones(3, bool), np.zeros(3, np.int64), np.zeros(3, np.int64)
            status, t = fn(full[:, :32].copy(), active, wins, counts, 0.5, 0, 10**6)
            if status == kernels.CONTINUE:
                status, t = fn(full[:, 32:].copy(), active, wins, counts, 0.5, t, 10**6)
            ref = reference_scan(full, 0.5, 10**6)
            assert (status, t) == ref[:2]

    def test_deterministic_examples(self):
        ones = np.ones((3, 50), np.uint8)
        for fn in (kernels._testcw_loop, kernels._testcw_numpy):
            assert _run(fn, ones, 1.0, 1000)[0] == kernels.CLEARED
            assert _run(fn, 1 - ones, 1.0, 1000)[0] == kernels.ABORTED
            status, t, *_ = _run(fn, ones, 1.0, 3)
            assert status == kernels.CAPPED and t == 3


class TestSparsityKernel:
    @settings(max_examples=100, deadline=None)
    @given(rows=st.integers(1, 6), cols=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
    def test_backends_agree(self, rows, cols, seed):
        rng = np.random.default_rng(seed)
        cost = rng.integers(0, 5, size=(rows, cols)).astype(float)
        maxterm = rng.integers(0, 5, size=(rows, cols)).astype(float)
        cost[rng.random((rows, cols)) < 0.2] = np.inf
        maxterm[~np.isfinite(cost)] = np.inf
        thresholds = np.unique(maxterm[np.isfinite(maxterm)])
        a = kernels._sparsity_loop(cost, maxterm, thresholds)
        b = kernels._sparsity_numpy(cost, maxterm, thresholds, chunk=2)
        np.testing.assert_array_equal(a, b)
        for k, t in enumerate(thresholds):
            for i in range(rows):
                ok = np.flatnonzero(maxterm[i] <= t)
                if a[k, 0] >= 0:
                    assert a[k, i] == ok[np.argmin(cost[i, ok])]


def test_sign_test_identical_under_both_backends(monkeypatch):
    m = gen_random_cw(6, (0.05, 0.2), np.random.default_rng(3))
    runs = {}
    for flag in (True, False):
        monkeypatch.setattr(kernels, "HAS_NUMBA", flag)
        out = []
        for cand in range(m.k):
            o = DuelOracle(m)
            res = sign_test(o, cand, 0.1, 20_000, np.random.default_rng(cand))
            out.append((res, o.total, o.counts.tolist()))
        runs[flag] = out
    assert runs[True] == runs[False]


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, CONDORCET_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import condorcet; print(condorcet.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
