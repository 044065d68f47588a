"""Seeded Monte Carlo runner, aggregation and report files.

A config names an instance (a generator with parameters, or a matrix file),
an algorithm and a sweep.  ``fb_cwi`` sweeps budgets ``T``; ``fc_cwi`` and
``baseline_row_certify`` sweep confidence levels ``delta``.  Every
``(param, replicate)`` pair gets its own seed, oracle and generator, so the
table is a pure function of the config whatever the worker count.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.stats import beta

from . import complexity, env, identify
from .errors import InvalidParameterError, NoCondorcetWinnerError, NonterminationError

ALGORITHMS = ("fb_cwi", "fc_cwi", "baseline_row_certify")
CSV_HEADER = ("instance_id", "algorithm", "param", "replicate", "seed",
              "recommended", "correct", "certified", "budget", "wall_ms")


@dataclass(frozen=True)
class ExperimentConfig:
    instance: dict
    algorithm: str
    sweep: tuple
    replicates: int
    base_seed: int = 0
    c_stop: float = identify.DEFAULT_C_STOP
    delta: float = 0.1
    strict: bool = True
    instance_id: Optional[str] = None
    output_csv: Optional[str] = None
    output_json: Optional[str] = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidParameterError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.replicates < 1:
            raise InvalidParameterError("replicates must be at least 1")
        if len(self.sweep) == 0:
            raise InvalidParameterError("sweep must be nonempty")
        if not self.c_stop > 0:
            raise InvalidParameterError("c_stop must be positive")
        if not 0 < self.delta < 1:
            raise InvalidParameterError("delta must lie in (0, 1)")
        object.__setattr__(self, "sweep", tuple(self.sweep))

    @property
    def sweeps_delta(self) -> bool:
        return self.algorithm != "fb_cwi"

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise InvalidParameterError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise InvalidParameterError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sweep"] = list(self.sweep)
        return d


def build_instance(spec: dict) -> tuple[str, env.GapMatrix]:
    """Materialize an instance spec into ``(instance_id, matrix)``.

    Specs are ``{"path": file}`` or ``{"generator": name, ...params}`` with
    generators ``total_order`` (``deltas``, or ``k`` and ``gap``),
    ``block_minimax`` (``deltas``/``sparsities``, or ``k``, ``gap`` and
    ``sparsity``; plus ``epsilon``) and ``random_cw`` (``k``, ``gap_range``,
    ``seed``).
    """
    if "path" in spec:
        path = spec["path"]
        return spec.get("id", Path(path).stem), env.load_matrix(path)
    name = spec.get("generator")
    k = spec.get("k")
    if name == "total_order":
        deltas = spec.get("deltas") or [0.0] + [float(spec["gap"])] * (int(k) - 1)
        return spec.get("id", f"total_order_k{len(deltas)}"), env.gen_total_order(deltas)
    if name == "block_minimax":
        deltas = spec.get("deltas") or [0.0] + [float(spec["gap"])] * (int(k) - 1)
        sparsities = spec.get("sparsities") or [0] + [int(spec["sparsity"])] * (len(deltas) - 1)
        m = env.gen_block_minimax(deltas, sparsities, float(spec["epsilon"]))
        return spec.get("id", f"block_minimax_k{len(deltas)}"), m
    if name == "random_cw":
        lo, hi = spec["gap_range"]
        m = env.gen_random_cw(int(k), (lo, hi), np.random.default_rng(int(spec.get("seed", 0))))
        return spec.get("id", f"random_cw_k{k}_s{spec.get('seed', 0)}"), m
    raise InvalidParameterError(f"unknown instance spec {spec!r}")


def derive_seed(base_seed: int, param_idx: int, replicate: int) -> int:
    """63-bit seed from the ``(base_seed, param_idx, replicate)`` triple."""
    state = np.random.SeedSequence([base_seed, param_idx, replicate]).generate_state(1, np.uint64)[0]
    return int(state >> np.uint64(1))


@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    algorithm: str
    param: float
    replicate: int
    seed: int
    recommended: int  # 1-based, 0 when the run did not terminate
    correct: bool
    certified: bool
    budget: int
    wall_ms: float


@dataclass
class RunTable:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def _param_label(x) -> float | int:
    return int(x) if float(x).is_integer() and abs(x) >= 1 else float(x)


def _run_one(job) -> RunRecord:
    gaps, cw, inst_id, algorithm, param, replicate, seed, c_stop, delta, strict = job
    oracle = env.DuelOracle(env.GapMatrix(gaps))
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    try:
        if algorithm == "fb_cwi":
            res = identify.fb_cwi(oracle, identify.FbConfig(int(param), delta, c_stop, strict=strict), rng)
        elif algorithm == "fc_cwi":
            res = identify.fc_cwi(oracle, float(param), c_stop, rng)
        else:
            res = identify.baseline_row_certify(oracle, float(param), rng)
        rec, ok, cert, budget = res.recommended + 1, res.recommended == cw, res.certified, res.budget_used
    except NonterminationError as exc:
        rec, ok, cert, budget = 0, False, False, exc.budget_used
    wall = (time.perf_counter() - t0) * 1e3
    return RunRecord(inst_id, algorithm, _param_label(param), replicate, seed, rec, ok, cert, budget, wall)


def _worker_count(workers: Optional[int]) -> int:
    if workers is None:
        workers = int(os.environ.get("CONDORCET_THREADS", "1") or 1)
    return max(int(workers), 1)


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None) -> RunTable:
    """Run every ``(param, replicate)`` pair and return records sorted by that key.

    ``workers`` defaults to ``$CONDORCET_THREADS`` (else 1); more than one
    worker uses a process pool.  Non-terminating runs become rows with
    ``recommended = 0``.
    """
    inst_id, matrix = build_instance(config.instance)
    inst_id = config.instance_id or inst_id
    cw = env.validate(matrix).cw
    if cw is None:
        raise NoCondorcetWinnerError(f"instance {inst_id} has no strict Condorcet winner")
    jobs = []
    for p_idx, param in enumerate(config.sweep):
        for rep in range(config.replicates):
            seed = derive_seed(config.base_seed, p_idx, rep)
            jobs.append((matrix.gaps, cw, inst_id, config.algorithm, param, rep, seed,
                         config.c_stop, config.delta, config.strict))
    if len({j[6] for j in jobs}) != len(jobs):
        raise InvalidParameterError("derived seeds collide; change base_seed")

    n_workers = _worker_count(workers)
    if n_workers == 1:
        records = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            records = list(pool.map(_run_one, jobs, chunksize=max(len(jobs) // (4 * n_workers), 1)))
    order = {p: i for i, p in enumerate(_param_label(x) for x in config.sweep)}
    records.sort(key=lambda r: (order[r.param], r.replicate))
    return RunTable(records)


# ------------------------------------------------------------------ summary


def clopper_pearson_upper(failures: int, n: int, level: float = 0.95) -> float:
    """Exact one-sided upper confidence bound on a binomial proportion."""
    if n < 1 or not 0 <= failures <= n:
        raise InvalidParameterError("need 0 <= failures <= n and n >= 1")
    if failures == n:
        return 1.0
    return float(beta.ppf(level, failures + 1, n - failures))


def nearest_rank(values, q: float) -> float:
    """Smallest sample with at least a fraction ``q`` of the data at or below it."""
    v = np.sort(np.asarray(values))
    if v.size == 0:
        raise InvalidParameterError("no values")
    rank = min(max(math.ceil(q * v.size), 1), v.size)
    return v[rank - 1].item()


def summarize(table: RunTable, matrix: env.GapMatrix, delta: float, cap_fraction: Optional[float] = 1 / 8) -> list:
    """One summary dict per ``(instance, algorithm, param)`` group.

    For delta sweeps the group's param is the confidence level used for the
    budget quantile and the hardness values; otherwise ``delta`` is.
    """
    if len(table) == 0:
        raise InvalidParameterError("cannot summarize an empty table")
    groups: dict = {}
    for r in table:
        groups.setdefault((r.instance_id, r.algorithm, r.param), []).append(r)
    reports: dict = {}
    out = []
    for (inst, alg, param), rows in groups.items():
        d = float(param) if alg != "fb_cwi" else float(delta)
        if d not in reports:
            reports[d] = complexity.hardness_report(matrix, d, cap_fraction)
        rep = reports[d]
        n = len(rows)
        failures = sum(not r.correct for r in rows)
        budgets = [r.budget for r in rows]
        out.append({
            "instance_id": inst,
            "algorithm": alg,
            "param": param,
            "n": n,
            "errors": failures,
            "error_rate": failures / n,
            "clopper_pearson_95_upper": clopper_pearson_upper(failures, n),
            "certified_rate": sum(r.certified for r in rows) / n,
            "budget_median": nearest_rank(budgets, 0.5),
            "budget_q90": nearest_rank(budgets, 0.9),
            "budget_quantile_1_minus_delta": nearest_rank(budgets, 1 - d),
            "h_cw": rep["h_cw"],
            "rhs_min": rep["rhs_min"],
            "lb_certify": rep["lb_certify"],
            "lb_explore": rep["lb_explore"],
        })
    return out


# ------------------------------------------------------------------ files


def _fmt_row(r: RunRecord) -> list:
    return [r.instance_id, r.algorithm, r.param, r.replicate, r.seed, r.recommended,
            int(r.correct), int(r.certified), r.budget, f"{r.wall_ms:.3f}"]


def write_csv(table: RunTable, path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            w.writerows(_fmt_row(r) for r in table)
    except OSError as exc:
        raise OSError(f"cannot write run table to {path}: {exc}") from exc


def _parse_param(text: str):
    x = float(text)
    return int(x) if "." not in text and "e" not in text.lower() else x


def read_csv(path) -> RunTable:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise InvalidParameterError(f"{path}: unexpected header {reader.fieldnames}")
        records = [
            RunRecord(row["instance_id"], row["algorithm"], _parse_param(row["param"]), int(row["replicate"]),
                      int(row["seed"]), int(row["recommended"]), row["correct"] == "1",
                      row["certified"] == "1", int(row["budget"]), float(row["wall_ms"]))
            for row in reader
        ]
    return RunTable(records)


def write_json(obj, path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write JSON to {path}: {exc}") from exc


def emit(table: RunTable, summary: list, csv_path, json_path, config: Optional[ExperimentConfig] = None) -> None:
    """Write the run table as CSV and the summary, config echo and version as JSON."""
    from . import __version__

    write_csv(table, csv_path)
    write_json({
        "version": __version__,
        "config": config.to_dict() if config is not None else None,
        "summary": summary,
    }, json_path)
