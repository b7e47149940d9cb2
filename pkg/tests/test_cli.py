import json

import pytest

from spinemc.cli import main


def test_dump_and_eval(tmp_path, capsys):
    tree = tmp_path / "t.txt"
    assert main(["dump-tree", "--measure", "Q-tilde", "--tmax", "1", "--seed", "4", "--out", str(tree)]) == 0
    assert tree.read_text().startswith("# spinemc tree v1")
    assert main(["eval", str(tree)]) == 0
    out = capsys.readouterr().out
    assert "spine_decomposition" in out and "label,weight" in out


def test_simulate_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["simulate", "--replicates", "4", "--measure", "P-tilde", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 5
    assert lines[0].startswith("replicate,n_nodes")


def test_oracle_with_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": {"kind": "finite_type", "a": [1, 2], "r": [1, 2], "theta": 1,
                                         "Q": [[-1, 1], [1, -1]]},
                               "martingale": {"lambda": 0.5}, "simulation": {"t_max": 1.0}}))
    assert main(["oracle", "--config", str(cfg)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["expected_by_type"]) == 2
    assert doc["expected_population"] == pytest.approx(sum(doc["expected_by_type"]))


def test_verify_and_report(tmp_path, capsys):
    assert main(["verify", "--suite", "skeleton", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "report.csv").exists()
    assert main(["report", str(tmp_path), "--format", "csv"]) == 0
    assert capsys.readouterr().out == (tmp_path / "report.csv").read_text()
