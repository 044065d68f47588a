"""Gap-matrix environments, duel sampling and hard-instance generators.

Arms are 0-based everywhere in the library.  A gap matrix ``D`` is
skew-symmetric with entries in ``[-1/2, 1/2]``; arm ``i`` beats arm ``j``
with probability ``1/2 + D[i, j]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import InvalidParameterError, InvalidQueryError

LOAD_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class GapMatrix:
    """Immutable K x K gap matrix.

    Construction only checks the shape; use :func:`validate` for the
    structural properties (skew-symmetry, range, Condorcet winner).
    """

    gaps: np.ndarray

    def __post_init__(self):
        g = np.array(self.gaps, dtype=np.float64, copy=True)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
            raise InvalidParameterError(f"gap matrix must be square with K >= 2, got shape {g.shape}")
        g.setflags(write=False)
        object.__setattr__(self, "gaps", g)

    @property
    def k(self) -> int:
        return self.gaps.shape[0]

    def row(self, i: int) -> np.ndarray:
        """Off-diagonal entries of row ``i`` in column order."""
        return np.delete(self.gaps[i], i)

    def win_prob(self, i: int, j: int) -> float:
        return 0.5 + float(self.gaps[i, j])

    def __eq__(self, other):
        return isinstance(other, GapMatrix) and np.array_equal(self.gaps, other.gaps)

    def __hash__(self):
        return hash(self.gaps.tobytes())

    def __repr__(self):
        return f"GapMatrix(k={self.k})"

    def to_json(self) -> dict:
        return {"k": self.k, "gaps": self.gaps.tolist()}

    @classmethod
    def from_json(cls, obj: Mapping) -> "GapMatrix":
        """Parse ``{"k": K, "gaps": [[...]]}``.

        Skew-symmetry is checked within ``1e-12`` and then enforced exactly
        by replacing the gaps with their antisymmetric part.
        """
        try:
            k = int(obj["k"])
            g = np.asarray(obj["gaps"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParameterError(f"malformed matrix object: {exc}") from exc
        if g.shape != (k, k):
            raise InvalidParameterError(f"gaps shape {g.shape} does not match k={k}")
        if not np.all(np.isfinite(g)):
            raise InvalidParameterError("gaps contain non-finite values")
        err = np.max(np.abs(g + g.T))
        if err > LOAD_ATOL:
            raise InvalidParameterError(f"gaps are not skew-symmetric (max |D + D^T| = {err:.3g})")
        return cls((g - g.T) / 2.0)


def load_matrix(path) -> GapMatrix:
    with open(path) as f:
        return GapMatrix.from_json(json.load(f))


def save_matrix(matrix: GapMatrix, path) -> None:
    Path(path).write_text(json.dumps(matrix.to_json(), indent=2) + "\n")


@dataclass(frozen=True)
class ValidationReport:
    skew_symmetric: bool
    in_range: bool
    cw: Optional[int]
    cw_unique: bool
    weak_cws: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.skew_symmetric and self.in_range


def validate(matrix: GapMatrix) -> ValidationReport:
    """Structural report; never raises on malformed content."""
    g = matrix.gaps
    k = matrix.k
    skew = bool(np.array_equal(g, -g.T) and np.all(np.diag(g) == 0))
    in_range = bool(np.all(np.abs(g) <= 0.5))
    off = ~np.eye(k, dtype=bool)
    strict = [i for i in range(k) if np.all(g[i][off[i]] > 0)]
    weak = [i for i in range(k) if np.all(g[i][off[i]] >= 0)]
    cw = strict[0] if len(strict) == 1 else None
    return ValidationReport(skew, in_range, cw, len(strict) == 1, weak)


def condorcet_winner(matrix: GapMatrix) -> Optional[int]:
    return validate(matrix).cw


class DuelOracle:
    """Bernoulli duel sampler that charges every query to ``counts``.

    ``counts[i, j]`` is the number of duels issued as the ordered pair
    ``(i, j)``; ``total`` is their sum.  One oracle belongs to one run.
    """

    def __init__(self, matrix: GapMatrix):
        self.matrix = matrix
        self.k = matrix.k
        self._q = 0.5 + matrix.gaps
        self.counts = np.zeros((self.k, self.k), dtype=np.int64)
        self.total = 0

    def _check(self, i, j):
        if not (0 <= i < self.k and 0 <= j < self.k):
            raise InvalidQueryError(f"arm index out of range: ({i}, {j}) with K={self.k}")
        if i == j:
            raise InvalidQueryError(f"self-duel requested for arm {i}")

    def _check_row(self, i, opponents):
        opponents = np.asarray(opponents, dtype=np.int64)
        if not 0 <= i < self.k or np.any(opponents < 0) or np.any(opponents >= self.k):
            raise InvalidQueryError(f"arm index out of range for K={self.k}")
        if np.any(opponents == i):
            raise InvalidQueryError(f"self-duel requested for arm {i}")
        return opponents

    def pair_count(self, i: int, j: int) -> int:
        """Unordered query count ``N_{{i,j}}``."""
        return int(self.counts[i, j] + self.counts[j, i])

    def sample_duel(self, i: int, j: int, rng: np.random.Generator) -> int:
        """One duel; 1 when ``i`` wins."""
        self._check(i, j)
        self.counts[i, j] += 1
        self.total += 1
        return int(rng.random() < self._q[i, j])

    def duel_wins(self, i: int, j: int, n: int, rng: np.random.Generator) -> int:
        """Number of wins of ``i`` in ``n`` duels against ``j``."""
        self._check(i, j)
        if n < 0:
            raise InvalidParameterError("sample count must be nonnegative")
        self.counts[i, j] += n
        self.total += n
        return int(rng.binomial(n, self._q[i, j]))

    def row_wins(self, i: int, opponents, n, rng: np.random.Generator) -> np.ndarray:
        """Vectorized :meth:`duel_wins` of ``i`` against each opponent.

        ``n`` is a scalar or one count per opponent; repeated opponents are
        independent duels.
        """
        opponents = self._check_row(i, opponents)
        n = np.broadcast_to(np.asarray(n, dtype=np.int64), opponents.shape)
        if np.any(n < 0):
            raise InvalidParameterError("sample counts must be nonnegative")
        np.add.at(self.counts[i], opponents, n)
        self.total += int(n.sum())
        return rng.binomial(n, self._q[i, opponents])

    def _row_bits(self, i: int, opponents, b: int, rng: np.random.Generator) -> np.ndarray:
        """Outcome block of shape ``(len(opponents), b)`` without charging.

        Callers must :meth:`charge` exactly the outcomes they consume.
        """
        opponents = self._check_row(i, opponents)
        return (rng.random((opponents.size, b)) < self._q[i, opponents][:, None]).astype(np.uint8)

    def charge(self, i: int, opponents, n) -> None:
        opponents = self._check_row(i, opponents)
        n = np.broadcast_to(np.asarray(n, dtype=np.int64), opponents.shape)
        np.add.at(self.counts[i], opponents, n)
        self.total += int(n.sum())


# ---------------------------------------------------------------- generators


def _checked(matrix: GapMatrix, expect_cw: Optional[int] = None) -> GapMatrix:
    report = validate(matrix)
    if not report.ok:
        raise InvalidParameterError("generated matrix failed validation")
    if expect_cw is not None and report.cw != expect_cw:
        raise InvalidParameterError(f"generated matrix has CW {report.cw}, expected {expect_cw}")
    return matrix


def _check_cw_deltas(deltas, upper: float) -> np.ndarray:
    d = np.asarray(deltas, dtype=np.float64)
    if d.ndim != 1 or d.size < 2:
        raise InvalidParameterError("deltas must be a vector of length K >= 2")
    if d[0] != 0:
        raise InvalidParameterError("deltas[0] (the Condorcet winner) must be 0")
    if np.any(d[1:] <= 0) or np.any(d[1:] > upper):
        raise InvalidParameterError(f"suboptimal deltas must lie in (0, {upper}]")
    return d


def gen_total_order(deltas: Sequence[float]) -> GapMatrix:
    """Total-order instance in which arm 0 is every arm's strongest opponent.

    Entry ``(i, j)`` equals ``deltas[j]`` above the diagonal and
    ``-deltas[i]`` below it, so row ``i`` loses ``deltas[i]`` to every
    lower-indexed arm.
    """
    d = _check_cw_deltas(deltas, 0.5)
    if np.any(np.diff(d[1:]) < 0):
        raise InvalidParameterError("suboptimal deltas must be sorted nondecreasing")
    k = d.size
    upper = np.triu(np.broadcast_to(d, (k, k)), 1)
    return _checked(GapMatrix(upper - upper.T), expect_cw=0)


def gen_block_minimax(deltas: Sequence[float], sparsities: Sequence[int], epsilon: float) -> GapMatrix:
    """Planted-sparsity instance with a barely dominant Condorcet winner.

    Arm 0 beats everyone by ``epsilon``.  Arms ``1..K-1`` sit on a circulant
    tournament: arm ``p`` (position ``p - 1`` among the ``K - 1`` suboptimal
    arms) loses by ``deltas[p]`` to the ``sparsities[p]`` arms that follow it
    cyclically; every other pair is decided by ``epsilon`` in favor of the
    lower index.  Each row ``p >= 1`` therefore holds exactly
    ``sparsities[p]`` entries equal to ``-deltas[p]`` and all its other
    negative entries equal ``-epsilon``.
    """
    d = _check_cw_deltas(deltas, 0.25)
    s = np.asarray(sparsities)
    k = d.size
    if k % 8:
        raise InvalidParameterError(f"K must be a multiple of 8, got {k}")
    if s.shape != (k,) or not np.issubdtype(s.dtype, np.integer):
        raise InvalidParameterError("sparsities must be K integers")
    if s[0] != 0 or np.any(s[1:] < 1) or np.any(s[1:] > k // 4):
        raise InvalidParameterError(f"sparsities must be 0 for arm 0 and in [1, {k // 4}] otherwise")
    if not 0 < epsilon < d[1:].min():
        raise InvalidParameterError("epsilon must be positive and below every delta")

    g = np.triu(np.full((k, k), float(epsilon)), 1)
    g = g - g.T
    m = k - 1
    for p in range(1, k):
        for off in range(1, s[p] + 1):
            q = 1 + (p - 1 + off) % m
            g[p, q] = -d[p]
            g[q, p] = d[p]
    return _checked(GapMatrix(g), expect_cw=0)


def gen_random_cw(k: int, gap_range: tuple[float, float], rng: np.random.Generator) -> GapMatrix:
    """Random instance whose arm 0 beats every other arm by a gap in ``gap_range``.

    Other upper-triangle entries are uniform on ``[-hi, hi]``.
    """
    lo, hi = map(float, gap_range)
    if k < 2:
        raise InvalidParameterError("k must be at least 2")
    if not 0 < lo <= hi <= 0.25:
        raise InvalidParameterError(f"gap range must satisfy 0 < lo <= hi <= 1/4, got ({lo}, {hi})")
    upper = np.triu(rng.uniform(-hi, hi, size=(k, k)), 1)
    upper[0, 1:] = rng.uniform(lo, hi, size=k - 1)
    return _checked(GapMatrix(upper - upper.T), expect_cw=0)


# ------------------------------------------------------------ transformations


def lift_row(matrix: GapMatrix, k: int, epsilon: float) -> GapMatrix:
    """Raise every nonpositive off-diagonal entry of row ``k`` to ``epsilon``.

    Column ``k`` is mirrored.  With ``epsilon > 0`` arm ``k`` becomes the
    Condorcet winner; with ``epsilon = 0`` it becomes a weak one.
    """
    if not 0 <= k < matrix.k:
        raise InvalidQueryError(f"arm {k} out of range for K={matrix.k}")
    if epsilon < 0 or epsilon > 0.5:
        raise InvalidParameterError("epsilon must lie in [0, 1/2]")
    g = matrix.gaps.copy()
    cols = np.flatnonzero(g[k] <= 0)
    cols = cols[cols != k]
    g[k, cols] = epsilon
    g[cols, k] = -epsilon
    return GapMatrix(g)


TieRule = Callable[[int, int], int]


def sign_matrix(matrix: GapMatrix, tie_rule: Optional[TieRule] = None) -> np.ndarray:
    """Sign pattern with ties resolved by ``tie_rule`` (0 by default)."""
    g = matrix.gaps
    sigma = np.sign(g).astype(np.int64)
    if tie_rule is not None:
        for i, j in zip(*np.nonzero((g == 0) & ~np.eye(matrix.k, dtype=bool))):
            sigma[i, j] = int(tie_rule(int(i), int(j)))
    if not np.array_equal(sigma, -sigma.T):
        raise InvalidParameterError("tie rule is not antisymmetric")
    return sigma


def negative_sets(matrix: GapMatrix, tie_rule: Optional[TieRule] = None) -> list[np.ndarray]:
    """For each arm, the opponents that beat it under the sign convention."""
    sigma = sign_matrix(matrix, tie_rule)
    return [np.flatnonzero(sigma[i] == -1) for i in range(matrix.k)]


def permute_negatives(
    matrix: GapMatrix,
    perms: Sequence[Optional[Mapping[int, int]]],
    tie_rule: Optional[TieRule] = None,
) -> GapMatrix:
    """Shuffle, row by row, which opponents hold the losing entries.

    ``perms[i]`` maps each arm in arm ``i``'s negative set onto that same
    set (``None`` means identity).  Row ``i`` then reads
    ``D[i, perms[i][j]]`` at every ``j`` in its negative set, and the
    mirrored entries keep the matrix skew-symmetric, so every row keeps the
    multiset of its nonpositive entries.
    """
    k = matrix.k
    if len(perms) != k:
        raise InvalidParameterError(f"expected {k} row permutations, got {len(perms)}")
    sigma = sign_matrix(matrix, tie_rule)
    g = matrix.gaps
    pi = np.tile(np.arange(k), (k, 1))
    for i in range(k):
        neg = np.flatnonzero(sigma[i] == -1)
        p = perms[i]
        if p is None:
            continue
        keys = sorted(int(a) for a in p.keys())
        values = sorted(int(b) for b in p.values())
        if keys != neg.tolist() or values != neg.tolist():
            raise InvalidParameterError(f"perms[{i}] is not a bijection on the negative set {neg.tolist()}")
        for a, b in p.items():
            pi[i, int(a)] = int(b)

    out = g.copy()
    ii, jj = np.nonzero(sigma == -1)
    out[ii, jj] = g[ii, pi[ii, jj]]
    ii, jj = np.nonzero(sigma == 1)
    out[ii, jj] = -g[jj, pi[jj, ii]]
    return GapMatrix(out)


def random_negative_perms(
    matrix: GapMatrix,
    rng: np.random.Generator,
    tie_rule: Optional[TieRule] = None,
    fix: Optional[int] = None,
) -> list[dict[int, int]]:
    """Uniformly random admissible ``perms`` for :func:`permute_negatives`.

    With ``fix`` set, that arm is kept in place in every row (useful to keep
    the Condorcet winner's column, hence its row, unchanged).
    """
    out = []
    for neg in negative_sets(matrix, tie_rule):
        movable = neg[neg != fix] if fix is not None else neg
        shuffled = rng.permutation(movable)
        p = {int(a): int(b) for a, b in zip(movable, shuffled)}
        if fix is not None and fix in neg:
            p[int(fix)] = int(fix)
        out.append(p)
    return out
