"""Instance-hardness quantities of a gap matrix.

All logarithms are natural.  Sparsity vectors have one entry per arm; the
entry of the Condorcet winner is ignored (conventionally 0).  Vectors of
length ``K - 1`` listing the suboptimal arms in index order are accepted too.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .env import GapMatrix, validate
from .errors import (
    DegenerateInstanceError,
    InvalidParameterError,
    InvalidSparsityError,
    NoCondorcetWinnerError,
)


@dataclass(frozen=True)
class RowStats:
    arm: int
    ordered_gaps: np.ndarray
    k_neg: int
    neg_norm_sq: float


@dataclass(frozen=True)
class HardnessProfile:
    s: tuple[int, ...]
    delta: float
    h_certify: float
    h_explore0: float
    h_explore1: float
    h_explore: float

    @property
    def total(self) -> float:
        """Certification plus exploration cost."""
        return self.h_certify + self.h_explore

    def to_dict(self) -> dict:
        d = asdict(self)
        d["s"] = list(self.s)
        return d


def _require_cw(matrix: GapMatrix) -> int:
    cw = validate(matrix).cw
    if cw is None:
        raise NoCondorcetWinnerError("matrix has no strict Condorcet winner")
    return cw


def _log_inv(delta: float) -> float:
    if not 0 < delta <= 1:
        raise InvalidParameterError(f"delta must lie in (0, 1], got {delta}")
    return math.log(1.0 / delta)


def row_stats(matrix: GapMatrix, i: int) -> RowStats:
    row = matrix.row(i)
    ordered = row[np.argsort(row, kind="stable")]
    neg = ordered[ordered < 0]
    return RowStats(i, ordered, int(neg.size), float(np.sum(neg * neg)))


def sorted_rows(matrix: GapMatrix) -> np.ndarray:
    """Off-diagonal rows sorted ascending; shape ``(K, K - 1)``."""
    k = matrix.k
    off = matrix.gaps[~np.eye(k, dtype=bool)].reshape(k, k - 1)
    return np.sort(off, axis=1, kind="stable")


def h_cw(matrix: GapMatrix, delta: float) -> float:
    """``log(1/delta) * sum_i 1 / D[cw, i]^2``."""
    cw = _require_cw(matrix)
    row = matrix.row(cw)
    with np.errstate(divide="ignore"):
        return _log_inv(delta) * float(np.sum(1.0 / row**2))


def _full_s(matrix: GapMatrix, s, cw: int) -> np.ndarray:
    s = np.asarray(s, dtype=np.int64).ravel()
    k = matrix.k
    if s.size == k - 1:
        s = np.insert(s, cw, 0)
    if s.size != k:
        raise InvalidSparsityError(f"sparsity vector must have K={k} or K-1 entries, got {s.size}")
    return s


def _objective(gaps: np.ndarray, s: np.ndarray, k: int, log_inv: float):
    """(h_certify, h_explore0, h_explore1) for the gaps selected by ``s``."""
    g2 = gaps * gaps
    with np.errstate(divide="ignore"):
        h_certify = float(np.sum(log_inv / g2))
        explore = k / (s * g2)
    return h_certify, float(np.sum(explore)), float(np.max(explore))


def hardness(matrix: GapMatrix, s: Sequence[int], delta: float) -> HardnessProfile:
    """Certification and exploration costs at sparsity ``s``."""
    cw = _require_cw(matrix)
    log_inv = _log_inv(delta)
    s_full = _full_s(matrix, s, cw)
    rows = sorted_rows(matrix)
    k_neg = np.sum(rows < 0, axis=1)
    sub = np.array([i for i in range(matrix.k) if i != cw])
    s_sub = s_full[sub]
    bad = (s_sub < 1) | (s_sub > k_neg[sub])
    if np.any(bad):
        i = int(sub[np.argmax(bad)])
        raise InvalidSparsityError(f"s[{i}]={s_full[i]} outside [1, {k_neg[i]}]")
    gaps = rows[sub, s_sub - 1]
    h_certify, h0, h1 = _objective(gaps, s_sub, matrix.k, log_inv)
    return HardnessProfile(tuple(int(x) for x in s_full), delta, h_certify, h0, h1, log_inv * h1 + h0)


def _sparsity_box(matrix: GapMatrix, cap_fraction: Optional[float]):
    cw = _require_cw(matrix)
    rows = sorted_rows(matrix)
    k_neg = np.sum(rows < 0, axis=1)
    sub = np.array([i for i in range(matrix.k) if i != cw])
    if np.any(k_neg[sub] == 0):
        raise DegenerateInstanceError("a suboptimal row has no negative entry")
    cap = matrix.k - 1 if cap_fraction is None else max(int(math.floor(cap_fraction * matrix.k)), 1)
    upper = np.minimum(k_neg[sub], cap)
    return cw, rows, sub, upper


def optimal_sparsity(matrix: GapMatrix, delta: float, cap_fraction: Optional[float] = 1 / 8):
    """Exact minimizer of certification plus exploration cost.

    The box is ``1 <= s_i <= min(K_{i;<0}, max(floor(cap_fraction * K), 1))``
    (``cap_fraction=None`` drops the cap).  Returns ``(s_star, value)`` where
    ``value == hardness(matrix, s_star, delta).total``.

    The only non-separable part of the objective is the max over rows of
    ``K log(1/delta) / (s_i D_{i,(s_i)}^2)``.  For every candidate value ``t``
    of that max, each row independently minimizes its separable cost among
    the choices whose max-term stays below ``t``; the best candidate is the
    global optimum.
    """
    cw, rows, sub, upper = _sparsity_box(matrix, cap_fraction)
    log_inv = _log_inv(delta)
    k = matrix.k
    n_s = int(upper.max())
    s_grid = np.arange(1, n_s + 1)
    g = rows[sub][:, :n_s]
    g2 = g * g
    admissible = s_grid[None, :] <= upper[:, None]
    with np.errstate(divide="ignore"):
        cost = np.where(admissible, log_inv / g2 + k / (s_grid * g2), np.inf)
        maxterm = np.where(admissible, k * log_inv / (s_grid * g2), np.inf)
    thresholds = np.unique(maxterm[np.isfinite(maxterm)])
    choices = kernels.sparsity_choices(cost, maxterm, thresholds)
    candidates = {tuple(c + 1) for c in choices if c[0] >= 0}

    best = None
    for cand in sorted(candidates):
        s_sub = np.array(cand)
        h_certify, h0, h1 = _objective(g[np.arange(sub.size), s_sub - 1], s_sub, k, log_inv)
        value = h_certify + (log_inv * h1 + h0)
        if best is None or value < best[1]:
            best = (cand, value)
    s_star = np.insert(np.array(best[0], dtype=np.int64), cw, 0)
    return s_star, best[1]


def lb_certify(matrix: GapMatrix, delta: float) -> float:
    """Expected-budget lower bound ``(1/4) sum_i log(1/(4 delta)) / D_{i,(1)}^2``."""
    if not 0 < delta < 0.25:
        raise InvalidParameterError(f"lb_certify needs 0 < delta < 1/4, got {delta}")
    cw = _require_cw(matrix)
    first = np.delete(sorted_rows(matrix)[:, 0], cw)
    return 0.25 * float(np.sum(math.log(1.0 / (4 * delta)) / first**2))


def lb_certify_quantile(matrix: GapMatrix, delta: float) -> float:
    """Quantile form ``(1/3) sum_i log(1/(6 delta)) / D_{i,(1)}^2``."""
    if not 0 < delta < 1 / 6:
        raise InvalidParameterError(f"lb_certify_quantile needs 0 < delta < 1/6, got {delta}")
    cw = _require_cw(matrix)
    first = np.delete(sorted_rows(matrix)[:, 0], cw)
    return float(np.sum(math.log(1.0 / (6 * delta)) / first**2)) / 3.0


def lb_explore(matrix: GapMatrix, delta: float) -> float:
    """High-probability exploration lower bound.

    ``max( (1/3) max_i r_i log(1/(6 delta)), sum_i r_i / (37 log 2K) )`` with
    ``r_i = K_{i;<0} / ||D_i^-||^2``.
    """
    if not 0 < delta <= 1 / 12:
        raise InvalidParameterError(f"lb_explore needs 0 < delta <= 1/12, got {delta}")
    cw = _require_cw(matrix)
    rows = np.delete(sorted_rows(matrix), cw, axis=0)
    neg = np.minimum(rows, 0.0)
    ratio = np.sum(rows < 0, axis=1) / np.sum(neg * neg, axis=1)
    first = float(np.max(ratio)) * math.log(1.0 / (6 * delta)) / 3.0
    second = float(np.sum(ratio)) / (37.0 * math.log(2 * matrix.k))
    return max(first, second)


def hardness_report(matrix: GapMatrix, delta: float, cap_fraction: Optional[float] = 1 / 8) -> dict:
    """JSON-ready bundle of every hardness quantity.

    Lower bounds are ``None`` when ``delta`` is outside their valid range.
    """
    s_star, rhs = optimal_sparsity(matrix, delta, cap_fraction)
    prof = hardness(matrix, s_star, delta)

    def guarded(fn):
        try:
            return fn(matrix, delta)
        except InvalidParameterError:
            return None

    return {
        "h_cw": h_cw(matrix, delta),
        "s_star": [int(x) for x in s_star],
        "h_certify": prof.h_certify,
        "h_explore0": prof.h_explore0,
        "h_explore1": prof.h_explore1,
        "rhs_min": rhs,
        "lb_certify": guarded(lb_certify),
        "lb_explore": guarded(lb_explore),
        "delta": delta,
    }
