import csv
import json
import math

import numpy as np
import pytest

from condorcet import harness
from condorcet.complexity import h_cw
from condorcet.env import gen_total_order
from condorcet.errors import InvalidParameterError, NoCondorcetWinnerError

TOTAL_ORDER = {"generator": "total_order", "k": 4, "gap": 0.25}
DET = {"generator": "total_order", "deltas": [0, 0.5, 0.5]}


def cfg(**kw):
    base = dict(instance=TOTAL_ORDER, algorithm="fc_cwi", sweep=[0.1], replicates=3, base_seed=7)
    base.update(kw)
    return harness.ExperimentConfig(**base)


def strip_wall(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return [r[:-1] for r in rows]


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(algorithm="nope"), dict(replicates=0), dict(sweep=[]),
                                    dict(c_stop=-1.0)])
    def test_invalid(self, kw):
        with pytest.raises(InvalidParameterError):
            cfg(**kw)

    def test_unknown_key(self):
        with pytest.raises(InvalidParameterError):
            harness.ExperimentConfig.from_dict({"instance": DET, "algorithm": "fc_cwi", "sweep": [0.1],
                                                "replicates": 1, "colour": "red"})

    def test_roundtrip(self):
        c = cfg()
        assert harness.ExperimentConfig.from_dict(c.to_dict()) == c


class TestInstances:
    def test_generators(self):
        _, m = harness.build_instance({"generator": "block_minimax", "k": 8, "gap": 0.2, "sparsity": 2,
                                       "epsilon": 0.05})
        assert m.k == 8
        _, r1 = harness.build_instance({"generator": "random_cw", "k": 5, "gap_range": [0.1, 0.2], "seed": 3})
        _, r2 = harness.build_instance({"generator": "random_cw", "k": 5, "gap_range": [0.1, 0.2], "seed": 3})
        assert r1 == r2

    def test_path(self, tmp_path):
        from condorcet.env import save_matrix
        save_matrix(gen_total_order([0, 0.1]), tmp_path / "two.json")
        inst_id, m = harness.build_instance({"path": str(tmp_path / "two.json")})
        assert inst_id == "two" and m.k == 2

    def test_unknown(self):
        with pytest.raises(InvalidParameterError):
            harness.build_instance({"generator": "mystery"})


class TestRunExperiment:
    def test_single_deterministic_row(self):
        t = harness.run_experiment(cfg(instance=DET, replicates=1))
        (r,) = t.records
        assert r.recommended == 1 and r.correct and r.certified

    def test_cartesian_product(self):
        t = harness.run_experiment(cfg(sweep=[0.1, 0.05], replicates=3))
        assert [(r.param, r.replicate) for r in t] == [(p, i) for p in (0.1, 0.05) for i in range(3)]

    def test_fb_sweep_over_budgets(self):
        t = harness.run_experiment(cfg(algorithm="fb_cwi", sweep=[400, 800], replicates=2))
        assert [r.param for r in t] == [400, 400, 800, 800]
        assert all(r.budget <= r.param + math.ceil(r.param / 2) for r in t)

    def test_seeds_distinct_and_stable(self):
        seeds = {harness.derive_seed(7, p, r) for p in range(5) for r in range(200)}
        assert len(seeds) == 1000
        assert harness.derive_seed(7, 1, 2) == harness.derive_seed(7, 1, 2)
        assert all(0 <= s < 2**63 for s in seeds)

    def test_no_cw_refused(self, tmp_path):
        p = tmp_path / "tie.json"
        p.write_text(json.dumps({"k": 2, "gaps": [[0, 0], [0, 0]]}))
        with pytest.raises(NoCondorcetWinnerError):
            harness.run_experiment(cfg(instance={"path": str(p)}))

    def test_nontermination_row(self, monkeypatch):
        from condorcet import identify
        from condorcet.errors import NonterminationError

        def never(*a, **k):
            raise NonterminationError("stuck", [], 123)

        monkeypatch.setattr(identify, "fc_cwi", never)
        (r,) = harness.run_experiment(cfg(replicates=1)).records
        assert r.recommended == 0 and not r.correct and not r.certified and r.budget == 123

    def test_parallel_matches_serial(self, tmp_path):
        c = cfg(replicates=4)
        serial = harness.run_experiment(c, workers=1)
        parallel = harness.run_experiment(c, workers=2)
        harness.write_csv(serial, tmp_path / "a.csv")
        harness.write_csv(parallel, tmp_path / "b.csv")
        assert strip_wall(tmp_path / "a.csv") == strip_wall(tmp_path / "b.csv")


class TestSummary:
    def test_clopper_pearson(self):
        for n in (1, 10, 500):
            assert harness.clopper_pearson_upper(0, n) == pytest.approx(1 - 0.05 ** (1 / n), rel=1e-10)
        assert harness.clopper_pearson_upper(4, 4) == 1.0
        assert harness.clopper_pearson_upper(3, 100) == pytest.approx(0.0757, abs=1e-3)

    def test_nearest_rank(self):
        assert harness.nearest_rank([30, 10, 20], 0.9) == 30
        assert harness.nearest_rank([30, 10, 20], 0.5) == 20
        assert harness.nearest_rank([5], 0.0) == 5

    def test_summary_fields(self):
        c = cfg(replicates=4)
        t = harness.run_experiment(c)
        _, m = harness.build_instance(c.instance)
        (s,) = harness.summarize(t, m, 0.1)
        assert s["errors"] == sum(not r.correct for r in t)
        assert s["error_rate"] == s["errors"] / 4
        assert s["h_cw"] == h_cw(m, 0.1)
        assert s["lb_explore"] is None
        assert s["budget_median"] == sorted(r.budget for r in t)[1]

    def test_empty(self):
        with pytest.raises(InvalidParameterError):
            harness.summarize(harness.RunTable(), gen_total_order([0, 0.1]), 0.1)


class TestEmit:
    def test_files_and_header(self, tmp_path):
        c = cfg()
        t = harness.run_experiment(c)
        _, m = harness.build_instance(c.instance)
        s = harness.summarize(t, m, 0.1)
        harness.emit(t, s, tmp_path / "out" / "runs.csv", tmp_path / "out" / "summary.json", c)
        first = (tmp_path / "out" / "runs.csv").read_text().splitlines()[0]
        assert first == "instance_id,algorithm,param,replicate,seed,recommended,correct,certified,budget,wall_ms"
        blob = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert set(blob) == {"version", "config", "summary"}
        assert blob["config"]["sweep"] == [0.1]

    def test_reemit_identical(self, tmp_path):
        c = cfg()
        t = harness.run_experiment(c)
        _, m = harness.build_instance(c.instance)
        s = harness.summarize(t, m, 0.1)
        harness.emit(t, s, tmp_path / "a.csv", tmp_path / "a.json", c)
        harness.emit(t, s, tmp_path / "b.csv", tmp_path / "b.json", c)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_rerun_identical_ignoring_wall(self, tmp_path):
        c = cfg()
        harness.write_csv(harness.run_experiment(c), tmp_path / "a.csv")
        harness.write_csv(harness.run_experiment(c), tmp_path / "b.csv")
        assert strip_wall(tmp_path / "a.csv") == strip_wall(tmp_path / "b.csv")

    def test_csv_roundtrip(self, tmp_path):
        t = harness.run_experiment(cfg(sweep=[0.1, 0.05], replicates=2))
        harness.write_csv(t, tmp_path / "r.csv")
        back = harness.read_csv(tmp_path / "r.csv")
        assert [(r.param, r.seed, r.budget, r.correct) for r in back] == \
               [(r.param, r.seed, r.budget, r.correct) for r in t]

    def test_write_error_has_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match="file"):
            harness.write_json({}, blocker / "sub" / "s.json")
