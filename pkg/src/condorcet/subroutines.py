"""Fixed-budget search primitives over stochastic arms.

An *arm sampler* exposes ``n_arms``, ``spent`` and

* ``draw(arm, rng)``: one observation in ``[-1/2, 1/2]``;
* ``sample_means(arms, n, rng)``: empirical means of ``n`` fresh draws for
  each entry of ``arms`` (repeats are independent; ``n = 0`` yields 0.0).

:class:`DuelSampler` turns the duels of one arm against a list of opponents
into such arms; :class:`BernoulliArms` is a standalone sampler with known
means, handy for simulations of the primitives themselves.

Quantile ranks ``d`` and ``u`` are 1-based ranks of ascending means.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import DuelOracle
from .errors import InvalidParameterError, InvalidQueryError


class DuelSampler:
    """Arms are the duels ``(row, opponents[a])``; arm ``a`` has mean ``D[row, opponents[a]]``.

    Every draw is charged to the backing oracle.
    """

    def __init__(self, oracle: DuelOracle, row: int, opponents):
        self.oracle = oracle
        self.row = int(row)
        self.opponents = np.asarray(opponents, dtype=np.int64)
        self.n_arms = int(self.opponents.size)
        self.spent = 0

    def draw(self, arm: int, rng: np.random.Generator) -> float:
        self.spent += 1
        return self.oracle.sample_duel(self.row, int(self.opponents[arm]), rng) - 0.5

    def sample_means(self, arms, n, rng: np.random.Generator) -> np.ndarray:
        arms = np.asarray(arms, dtype=np.int64)
        n = np.broadcast_to(np.asarray(n, dtype=np.int64), arms.shape)
        wins = self.oracle.row_wins(self.row, self.opponents[arms], n, rng)
        self.spent += int(n.sum())
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n > 0, wins / np.maximum(n, 1) - 0.5, 0.0)


class BernoulliArms:
    """Independent arms with means in ``[-1/2, 1/2]``; draws are ``Bernoulli(1/2 + mean) - 1/2``."""

    def __init__(self, means):
        self.means = np.asarray(means, dtype=np.float64)
        if self.means.ndim != 1 or np.any(np.abs(self.means) > 0.5):
            raise InvalidParameterError("means must be a vector with entries in [-1/2, 1/2]")
        self.n_arms = int(self.means.size)
        self.spent = 0

    def draw(self, arm: int, rng: np.random.Generator) -> float:
        self.spent += 1
        return float(rng.random() < 0.5 + self.means[arm]) - 0.5

    def sample_means(self, arms, n, rng: np.random.Generator) -> np.ndarray:
        arms = np.asarray(arms, dtype=np.int64)
        n = np.broadcast_to(np.asarray(n, dtype=np.int64), arms.shape)
        wins = rng.binomial(n, 0.5 + self.means[arms])
        self.spent += int(n.sum())
        return np.where(n > 0, wins / np.maximum(n, 1) - 0.5, 0.0)


def _even_split(total: int, m: int) -> np.ndarray:
    """``total`` draws over ``m`` slots; the remainder goes to the first slots."""
    alloc = np.full(m, total // m, dtype=np.int64)
    alloc[: total % m] += 1
    return alloc


@dataclass(frozen=True)
class HalvingResult:
    arm: int
    budget_spent: int
    degenerate: bool = False


def sequential_halving_min(sampler, budget: int, rng: np.random.Generator) -> HalvingResult:
    """Sequential Halving that keeps the lower half; returns a smallest-mean arm.

    ``ceil(log2 n)`` phases each spend ``floor(budget / phases)`` fresh draws
    split evenly over the survivors, then keep the ``ceil(m / 2)`` smallest
    empirical means (ties by arm index).  With ``budget < n`` the search is
    skipped and a uniformly random arm is returned (``degenerate=True``).
    """
    n = sampler.n_arms
    if n < 1:
        raise InvalidParameterError("sequential halving needs at least one arm")
    if n == 1:
        return HalvingResult(0, 0)
    if budget < n:
        return HalvingResult(int(rng.integers(n)), 0, degenerate=True)
    phases = math.ceil(math.log2(n))
    per_phase = budget // phases
    survivors = np.arange(n)
    spent = 0
    for _ in range(phases):
        m = survivors.size
        alloc = _even_split(per_phase, m)
        means = sampler.sample_means(survivors, alloc, rng)
        spent += int(alloc.sum())
        order = np.argsort(means, kind="stable")
        survivors = np.sort(survivors[order[: (m + 1) // 2]])
    return HalvingResult(int(survivors[0]), spent)


@dataclass(frozen=True)
class QuantileEstimate:
    value: float
    level_selected: int
    levels_run: int
    budget_spent: int


def small_budget_threshold(n: int, d: int, u: int) -> float:
    """Budget at or below which Range-Quantile falls back to uniform allocation."""
    if u == d:
        return math.inf
    r = 128 * n / (u - d)
    return r * math.log2(r)


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _uniform_quantile(sampler, d, u, budget, rng) -> QuantileEstimate:
    n = sampler.n_arms
    alloc = _even_split(budget, n)
    means = sampler.sample_means(np.arange(n), alloc, rng)
    observed = means[alloc > 0]
    ranked = observed[np.argsort(observed, kind="stable")]
    lo, hi = min(d, ranked.size), min(u, ranked.size)
    return QuantileEstimate(float(np.mean(ranked[lo - 1:hi])), -1, 0, int(alloc.sum()))


def range_quantile(sampler, d: int, u: int, budget: int, rng: np.random.Generator) -> QuantileEstimate:
    """Estimate a point between the ``d``-th and ``u``-th smallest arm means.

    Small budgets (or ``u == d``) spread the budget uniformly over the arms
    and average the empirical means ranked ``d..u``.  Otherwise each level
    ``l`` draws a random multiset of arms, samples each so its mean is
    accurate to about ``eps_l``, and records three empirical order
    statistics bracketing the target ranks; a Lepski rule returns the middle
    statistic of the finest level that agrees with every coarser bracket.
    """
    n = sampler.n_arms
    if not 1 <= d <= u <= n:
        raise InvalidParameterError(f"ranks must satisfy 1 <= d <= u <= n_arms, got d={d}, u={u}, n={n}")
    if budget < 1:
        raise InvalidParameterError("budget must be positive")
    if budget <= small_budget_threshold(n, d, u):
        return _uniform_quantile(sampler, d, u, budget, rng)

    log2_t = math.log2(budget)
    top = math.floor(math.log2(budget / log2_t))
    ratio = 16 * n / (u - d)
    l_min = math.ceil(math.log2(ratio))
    log_c = math.log(ratio)

    levels = []  # (level, eps, t1, t2, t3)
    spent = 0
    for level in range(l_min, top):
        eps = 2.0 * 2.0 ** (-(top - level) / 2)
        size = math.floor(eps * eps * budget / (log_c * log2_t))
        if size == 0:
            continue
        per_arm = math.ceil(log_c / (2 * eps * eps))
        if spent + size * per_arm > budget:
            break
        arms = rng.integers(0, n, size=size)
        means = np.sort(sampler.sample_means(arms, per_arm, rng), kind="stable")
        spent += size * per_arm
        ranks = (
            _ceil_div((3 * d + u) * size, 4 * n),
            _ceil_div((d + u) * size, 2 * n),
            _ceil_div((d + 3 * u) * size, 4 * n),
        )
        t1, t2, t3 = (float(means[min(max(r, 1), size) - 1]) for r in ranks)
        levels.append((level, eps, t1, t2, t3))

    if not levels:
        return _uniform_quantile(sampler, d, u, budget, rng)

    for idx, (level, _, _, t2, _) in enumerate(levels):
        if all(t1b - 2 * eb <= t2 <= t3b + 2 * eb for _, eb, t1b, _, t3b in levels[idx:]):
            return QuantileEstimate(t2, level, len(levels), spent)
    raise AssertionError("the coarsest level always agrees with itself")


def range_quantile_18(sampler, budget: int, rng: np.random.Generator) -> QuantileEstimate:
    """Range-Quantile between the ``ceil(n/8)``-th and ``ceil(n/4)``-th means."""
    n = sampler.n_arms
    return range_quantile(sampler, _ceil_div(n, 8), _ceil_div(n, 4), budget, rng)


def empirical_gap(oracle: DuelOracle, i: int, j: int, n_samples: int, rng: np.random.Generator) -> float:
    """Empirical ``D[i, j]`` from ``n_samples`` fresh duels."""
    if i == j:
        raise InvalidQueryError(f"self-duel requested for arm {i}")
    if n_samples < 1:
        raise InvalidParameterError("n_samples must be at least 1")
    return oracle.duel_wins(i, j, n_samples, rng) / n_samples - 0.5
