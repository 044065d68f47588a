"""Hot inner loops, each with a compiled and a pure-numpy implementation.

Two kernels live here:

* ``testcw_scan`` advances the round-robin sign test over one block of
  pre-drawn duel outcomes.
* ``sparsity_choices`` runs the threshold enumeration behind the exact
  sparsity optimizer.

The ``*_loop`` variants are written for numba (they are plain Python when
numba is disabled); the ``*_numpy`` variants are vectorized.  Both produce
identical outputs and the public names dispatch on the active backend.
"""
import numpy as np

from ._accel import HAS_NUMBA, njit

CONTINUE = 0
CLEARED = 1
ABORTED = 2
CAPPED = 3


@njit
def _testcw_loop(bits, active, wins, counts, log_const, t, cap):
    m, b = bits.shape
    for r in range(b):
        for j in range(m):
            if not active[j]:
                continue
            if t >= cap:
                return CAPPED, t
            wins[j] += bits[j, r]
            counts[j] += 1
            t += 1
            n = counts[j]
            gap = wins[j] / n - 0.5
            thr = np.sqrt((log_const + 2.0 * np.log(n)) / n)
            if gap >= thr:
                active[j] = False
                left = 0
                for q in range(m):
                    if active[q]:
                        left += 1
                if left == 0:
                    return CLEARED, t
            elif gap <= -thr:
                return ABORTED, t
    if t >= cap:
        return CAPPED, t
    return CONTINUE, t


def _testcw_numpy(bits, active, wins, counts, log_const, t, cap):
    m, b = bits.shape
    idx = np.flatnonzero(active)
    if idx.size == 0:
        return CLEARED, t
    if t >= cap:
        return CAPPED, t
    # every pair still in play has the same count at a block boundary
    n0 = counts[idx[0]]
    cum = wins[idx][:, None] + np.cumsum(bits[idx].astype(np.int64), axis=1)
    ns = n0 + np.arange(1, b + 1)
    gap = cum / ns - 0.5
    thr = np.sqrt((log_const + 2.0 * np.log(ns)) / ns)
    up = gap >= thr
    down = gap <= -thr
    first_up = np.where(up.any(axis=1), up.argmax(axis=1), b)
    first_down = np.where(down.any(axis=1), down.argmax(axis=1), b)
    tau = np.minimum(first_up, first_down)
    crossed = tau < b
    n_samples = np.where(crossed, tau + 1, b)

    # within-block position of the r-th sample of each pair
    r = np.arange(b)
    alive = n_samples[:, None] > r[None, :]
    base = np.minimum(n_samples[:, None], r[None, :]).sum(axis=0)
    pos = base[None, :] + np.cumsum(alive, axis=0) - alive
    rows = np.arange(idx.size)
    event_pos = np.where(crossed, pos[rows, np.minimum(tau, b - 1)], np.iinfo(np.int64).max)

    is_down = crossed & (first_down < first_up)
    abort_pos = event_pos[is_down].min() if is_down.any() else np.iinfo(np.int64).max
    all_up = bool(np.all(crossed & ~is_down))
    clear_pos = event_pos.max() if all_up else np.iinfo(np.int64).max
    total = int(n_samples.sum())
    cap_pos = cap - t - 1

    stop = min(abort_pos, clear_pos)
    if stop <= cap_pos and stop < total:
        last = int(stop)
        status = ABORTED if stop == abort_pos else CLEARED
    elif cap_pos < total:
        last = int(cap_pos)
        status = CAPPED
    else:
        last = total - 1
        status = CAPPED if t + total >= cap else CONTINUE

    used = (alive & (pos <= last)).sum(axis=1)
    gained = np.where(used > 0, cum[rows, np.maximum(used - 1, 0)] - wins[idx], 0)
    wins[idx] += gained
    counts[idx] += used
    cleared = crossed & ~is_down & (event_pos <= last)
    active[idx[cleared]] = False
    return status, t + last + 1


def testcw_scan(bits, active, wins, counts, log_const, t, cap):
    """Advance the round-robin sign test through one block of outcomes.

    ``bits[j, r]`` is the r-th outcome of pair ``j`` in this block.  Pairs
    flagged in ``active`` are sampled cyclically in index order; after each
    sample the pair is cleared when its empirical gap reaches the threshold
    ``sqrt((log_const + 2 log N) / N)`` and the scan aborts when the gap is at
    or below its negative.  ``wins``, ``counts`` and ``active`` are updated in
    place.  Returns ``(status, t)`` with ``t`` the running query count, which
    never exceeds ``cap``.
    """
    if HAS_NUMBA:
        return _testcw_loop(bits, active, wins, counts, float(log_const), int(t), int(cap))
    return _testcw_numpy(bits, active, wins, counts, float(log_const), int(t), int(cap))


@njit
def _sparsity_loop(cost, maxterm, thresholds):
    n_rows, n_s = cost.shape
    out = np.full((thresholds.shape[0], n_rows), -1, dtype=np.int64)
    for k in range(thresholds.shape[0]):
        t = thresholds[k]
        for i in range(n_rows):
            best = np.inf
            arg = -1
            for s in range(n_s):
                if maxterm[i, s] <= t and cost[i, s] < best:
                    best = cost[i, s]
                    arg = s
            if arg < 0:
                for q in range(n_rows):
                    out[k, q] = -1
                break
            out[k, i] = arg
    return out


def _sparsity_numpy(cost, maxterm, thresholds, chunk=256):
    n_rows, n_s = cost.shape
    out = np.full((thresholds.shape[0], n_rows), -1, dtype=np.int64)
    for lo in range(0, thresholds.shape[0], chunk):
        t = thresholds[lo:lo + chunk]
        masked = np.where(maxterm[None] <= t[:, None, None], cost[None], np.inf)
        arg = masked.argmin(axis=2)
        feasible = np.isfinite(np.take_along_axis(masked, arg[..., None], axis=2)[..., 0]).all(axis=1)
        out[lo:lo + chunk] = np.where(feasible[:, None], arg, -1)
    return out


def sparsity_choices(cost, maxterm, thresholds):
    """Row-wise constrained minimizers for every candidate threshold.

    For each threshold ``t`` and row ``i`` pick the column ``s`` minimizing
    ``cost[i, s]`` subject to ``maxterm[i, s] <= t`` (first column on ties).
    Inadmissible cells carry ``cost = inf``.  Rows of the result are ``-1``
    when some row has no admissible column under that threshold.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    maxterm = np.ascontiguousarray(maxterm, dtype=np.float64)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    if HAS_NUMBA:
        return _sparsity_loop(cost, maxterm, thresholds)
    return _sparsity_numpy(cost, maxterm, thresholds)
