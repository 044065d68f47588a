import json
import subprocess
import sys

import pytest

from condorcet.cli import main


def test_generate_and_hardness(tmp_path, capsys):
    out = tmp_path / "m.json"
    assert main(["generate", '{"generator": "total_order", "k": 4, "gap": 0.2}', "-o", str(out)]) == 0
    assert json.loads(out.read_text())["k"] == 4
    capsys.readouterr()
    assert main(["hardness", str(out), "--delta", "0.05"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["s_star"] == [0, 1, 1, 1] and report["delta"] == 0.05


def test_run_and_summarize(tmp_path, capsys):
    cfg = {"instance": {"generator": "total_order", "k": 3, "gap": 0.25}, "algorithm": "fc_cwi",
           "sweep": [0.1], "replicates": 2, "base_seed": 1,
           "output_csv": str(tmp_path / "runs.csv"), "output_json": str(tmp_path / "s.json")}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert main(["run", str(tmp_path / "cfg.json")]) == 0
    assert (tmp_path / "runs.csv").exists() and (tmp_path / "s.json").exists()
    assert main(["generate", json.dumps(cfg["instance"]), "-o", str(tmp_path / "m.json")]) == 0
    capsys.readouterr()
    assert main(["summarize", str(tmp_path / "runs.csv"), "--matrix", str(tmp_path / "m.json")]) == 0
    assert json.loads(capsys.readouterr().out)["summary"][0]["n"] == 2


@pytest.mark.parametrize("cfg", [
    {"instance": {"generator": "nope"}, "algorithm": "fc_cwi", "sweep": [0.1], "replicates": 1},
    {"instance": {"generator": "total_order", "k": 3, "gap": 0.2}, "algorithm": "fc_cwi", "sweep": [],
     "replicates": 1},
    {"algorithm": "fc_cwi"},
])
def test_invalid_config_exit_2(tmp_path, cfg):
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert main(["run", str(tmp_path / "cfg.json")]) == 2


def test_no_cw_exit_3(tmp_path):
    (tmp_path / "tie.json").write_text(json.dumps({"k": 2, "gaps": [[0, 0], [0, 0]]}))
    assert main(["hardness", str(tmp_path / "tie.json")]) == 3


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "condorcet", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "summarize" in out.stdout
