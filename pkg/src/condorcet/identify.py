"""Condorcet-winner identification: fixed budget, sign test, doubling wrapper.

Arms are 0-based.  Logarithms are natural unless a base is named;
``log_{8/7} K`` bounds the number of elimination rounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .env import DuelOracle
from .errors import InvalidParameterError, InvalidQueryError, NonterminationError, UnderbudgetError
from .subroutines import DuelSampler, empirical_gap, range_quantile, sequential_halving_min

LOG_87 = math.log(8 / 7)
MAX_STAGES = 40
# calibrated by simulation: certifies early on near-tied rows with no observed errors
DEFAULT_C_STOP = 0.25
_FIRST_BLOCK = 256
_MAX_BLOCK = 8192


def log87(k: int) -> float:
    return math.log(k) / LOG_87


def underbudget_threshold(k: int) -> float:
    """Smallest budget for which the fixed-budget guarantee is informative."""
    return 8 * k * log87(k)


def initial_budget(k: int) -> int:
    return max(math.ceil(8 * k * math.log(k)), math.ceil(underbudget_threshold(k)), 16)


@dataclass(frozen=True)
class FbConfig:
    """Inputs of one fixed-budget run.

    ``testcw_cap`` defaults to ``ceil(T / 2)``.  With ``strict=False`` budgets
    below :func:`underbudget_threshold` are accepted as long as every arm
    still gets at least one query per round.
    """
    t_budget: int
    delta: float
    c_stop: float = DEFAULT_C_STOP
    testcw_cap: Optional[int] = None
    strict: bool = True

    def __post_init__(self):
        if self.t_budget < 1:
            raise InvalidParameterError("t_budget must be at least 1")
        if not 0 < self.delta < 1:
            raise InvalidParameterError("delta must lie in (0, 1)")
        if not self.c_stop > 0:
            raise InvalidParameterError("c_stop must be positive")
        if self.testcw_cap is not None and self.testcw_cap < 0:
            raise InvalidParameterError("testcw_cap must be nonnegative")

    @property
    def cap(self) -> int:
        return math.ceil(self.t_budget / 2) if self.testcw_cap is None else int(self.testcw_cap)


@dataclass(frozen=True)
class RoundTrace:
    round: int
    active: tuple[int, ...]
    per_arm_budget: int
    scores: dict  # arm -> (z_strong, z_weak, score)
    eliminated: tuple[int, ...]
    phi1_term: bool
    threshold_L: float


@dataclass(frozen=True)
class StageRecord:
    t_budget: int
    phi1: bool
    phi2: bool
    budget: int


@dataclass(frozen=True)
class IdentificationResult:
    recommended: int
    certified: bool
    phi1: bool
    phi2: bool
    budget_used: int
    rounds: tuple[RoundTrace, ...] = ()
    stages: tuple[StageRecord, ...] = field(default=())


def _stage_index(t_budget: int, k: int, factor: int) -> float:
    return math.log2(t_budget / (factor * k * log87(k)))


def phi1_threshold(t_budget: int, k: int, per_duel: int, delta: float, c_stop: float) -> float:
    """Magnitude the eliminated arm's score must exceed (negatively) to certify."""
    n = _stage_index(t_budget, k, 2)
    log_t = math.log(t_budget)
    inner = math.log(8 * k * k * log87(k) * log_t * n * (n + 1) / delta)
    return math.sqrt(2 * c_stop * log_t / per_duel * inner)


def fb_cwi(oracle: DuelOracle, cfg: FbConfig, rng: np.random.Generator) -> IdentificationResult:
    """Fixed-budget elimination with two certificates.

    Each round scores every active arm by ``min(z_strong, 0) + z_weak``:
    ``z_strong`` is the empirical gap against the opponent Sequential Halving
    finds most likely to beat it, ``z_weak`` a low quantile of its gaps
    against the other active arms.  The lowest ``ceil(|A|/8)`` scores are
    eliminated.  ``phi1`` holds when every round's first eliminated arm has a
    significantly negative score; ``phi2`` is the sign test on the survivor.
    """
    k = oracle.k
    if k < 2:
        raise InvalidParameterError("need at least two arms")
    t = cfg.t_budget
    rounds_scale = log87(k)
    if cfg.strict and t < underbudget_threshold(k):
        raise UnderbudgetError(f"T={t} below 8K log_(8/7) K = {underbudget_threshold(k):.1f}")
    if t < k * rounds_scale:
        raise UnderbudgetError(f"T={t} leaves no query per arm in the first round")

    start = oracle.total
    phi1_possible = _stage_index(t, k, 2) > 1
    phi1 = phi1_possible
    active = list(range(k))
    traces = []
    rnd = 0
    while len(active) > 1:
        rnd += 1
        m = len(active)
        per_arm = math.floor(t / (m * rounds_scale))
        quarter = math.ceil(per_arm / 4)
        half = math.ceil(per_arm / 2)
        d, u = math.ceil(m / 8), math.ceil(m / 4)
        scores = {}
        for a in active:
            everyone = [b for b in range(k) if b != a]
            strong = everyone[sequential_halving_min(DuelSampler(oracle, a, everyone), quarter, rng).arm]
            z_s = empirical_gap(oracle, a, strong, quarter, rng)
            rivals = [b for b in active if b != a]
            z_w = range_quantile(DuelSampler(oracle, a, rivals), d, min(u, m - 1), half, rng).value
            scores[a] = (z_s, z_w, min(z_s, 0.0) + z_w)
        ranked = sorted(active, key=lambda a: (-scores[a][2], a))
        n_out = math.ceil(m / 8)
        first_out = ranked[m - n_out]
        if phi1_possible:
            thr = phi1_threshold(t, k, quarter, cfg.delta, cfg.c_stop)
            term = scores[first_out][2] < -thr
        else:
            thr, term = math.nan, False
        phi1 = phi1 and term
        traces.append(RoundTrace(rnd, tuple(active), per_arm, scores,
                                 tuple(sorted(ranked[m - n_out:])), term, thr))
        active = sorted(ranked[: m - n_out])

    survivor = active[0]
    phi2, _ = test_cw(oracle, survivor, cfg.delta, cfg.cap, rng, stage_budget=t)
    return IdentificationResult(survivor, phi1 or phi2, phi1, phi2, oracle.total - start, tuple(traces))


def test_cw(oracle: DuelOracle, candidate: int, delta: float, t_cap: int, rng: np.random.Generator,
            stage_budget: Optional[int] = None) -> tuple[bool, int]:
    """Sign test certifying that ``candidate`` beats every other arm.

    The pairs ``(candidate, j)`` are sampled round-robin; a pair is cleared
    once its empirical gap reaches ``sqrt(log(K N^2 n(n+1) / delta) / N)``
    and the test aborts as soon as some gap falls to minus that level.
    ``n`` is the stage index ``log2(T / (4K log_{8/7} K))`` of the enclosing
    budget ``T`` (``stage_budget``, else ``t_cap``), floored at 1.  Returns
    ``(certified, queries_used)`` with at most ``t_cap`` queries.
    """
    k = oracle.k
    if not 0 <= candidate < k:
        raise InvalidQueryError(f"candidate {candidate} out of range for K={k}")
    if not 0 < delta < 1:
        raise InvalidParameterError("delta must lie in (0, 1)")
    if t_cap < 0:
        raise InvalidParameterError("t_cap must be nonnegative")
    big_t = t_cap if stage_budget is None else stage_budget
    n = max(_stage_index(big_t, k, 4), 1.0) if big_t > 0 else 1.0
    log_const = math.log(k * n * (n + 1) / delta)

    opponents = np.array([j for j in range(k) if j != candidate], dtype=np.int64)
    m = opponents.size
    active = np.ones(m, dtype=np.bool_)
    wins = np.zeros(m, dtype=np.int64)
    counts = np.zeros(m, dtype=np.int64)
    used = 0
    block = _FIRST_BLOCK
    status = kernels.CAPPED if t_cap == 0 else kernels.CONTINUE
    while status == kernels.CONTINUE:
        live = np.flatnonzero(active)
        b = min(block, math.ceil((t_cap - used) / live.size))
        bits = np.zeros((m, b), dtype=np.uint8)
        bits[live] = oracle._row_bits(candidate, opponents[live], b, rng)
        before = counts.copy()
        status, used = kernels.testcw_scan(bits, active, wins, counts, log_const, used, t_cap)
        oracle.charge(candidate, opponents, counts - before)
        block = min(2 * block, _MAX_BLOCK)
    return status == kernels.CLEARED, used


def fc_cwi(oracle: DuelOracle, delta: float, c_stop: float = DEFAULT_C_STOP, rng: Optional[np.random.Generator] = None,
           max_stages: int = MAX_STAGES) -> IdentificationResult:
    """Fixed-confidence identification by doubling the fixed budget.

    Stage budgets start at :func:`initial_budget` and double until a stage
    certifies.  The result carries the final stage's rounds, the cumulative
    budget, and one :class:`StageRecord` per stage.
    """
    if not 0 < delta < 1 / 6:
        raise InvalidParameterError("delta must lie in (0, 1/6)")
    if not c_stop > 0:
        raise InvalidParameterError("c_stop must be positive")
    rng = np.random.default_rng() if rng is None else rng
    start = oracle.total
    t = initial_budget(oracle.k)
    stages = []
    for _ in range(max_stages):
        res = fb_cwi(oracle, FbConfig(t, delta, c_stop), rng)
        stages.append(StageRecord(t, res.phi1, res.phi2, res.budget_used))
        if res.certified:
            return IdentificationResult(res.recommended, True, res.phi1, res.phi2,
                                        oracle.total - start, res.rounds, tuple(stages))
        t *= 2
    raise NonterminationError(f"no certificate after {max_stages} stages", stages, oracle.total - start)


def baseline_row_certify(oracle: DuelOracle, delta: float, rng: Optional[np.random.Generator] = None,
                         max_stages: int = MAX_STAGES) -> IdentificationResult:
    """Sign-test every arm in index order under doubling caps; first certified arm wins.

    Stage ``T`` gives each arm a cap of ``ceil(T / 2)`` and confidence
    ``delta / K``, so a union bound over arms and stages keeps the error
    below ``delta``.
    """
    if not 0 < delta < 1:
        raise InvalidParameterError("delta must lie in (0, 1)")
    rng = np.random.default_rng() if rng is None else rng
    k = oracle.k
    start = oracle.total
    t = initial_budget(k)
    stages = []
    for _ in range(max_stages):
        stage_start = oracle.total
        for arm in range(k):
            ok, _ = test_cw(oracle, arm, delta / k, math.ceil(t / 2), rng, stage_budget=t)
            if ok:
                stages.append(StageRecord(t, False, True, oracle.total - stage_start))
                return IdentificationResult(arm, True, False, True, oracle.total - start, (), tuple(stages))
        stages.append(StageRecord(t, False, False, oracle.total - stage_start))
        t *= 2
    raise NonterminationError(f"no certificate after {max_stages} stages", stages, oracle.total - start)
