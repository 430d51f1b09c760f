import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from formanflow.change import read_pgm
from formanflow.cli import PROVENANCE_SCHEMA, cli
from formanflow.ingest import file_sha256

TRIANGLE = "# triangle\n0\t1\n1\t2\n0\t2\n"
STAR = "".join(f"0\t{i}\n" for i in range(1, 6))
ISOLATED_EDGE = "0\t1\n"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, text in {"tri": TRIANGLE, "star": STAR, "edge": ISOLATED_EDGE,
                       "empty": "# nothing\n", "bad": "0 x\n"}.items():
        p = tmp_path / f"{name}.txt"
        p.write_text(text)
        out[name] = str(p)
    return out


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_version_and_help(runner):
    r = runner.invoke(cli, ["--version"])
    assert r.exit_code == 0 and "formanflow" in r.output
    assert runner.invoke(cli, ["--help"]).exit_code == 0


def test_stats(runner, files, tmp_path):
    out = tmp_path / "o"
    r = runner.invoke(cli, ["stats", files["tri"], "--weighting", "unit", "--out", str(out)])
    assert r.exit_code == 0, r.output
    summary = json.loads(r.output)
    assert summary["mean"] == 0.0 and summary["edges"] == 3
    for name in ("degree_histogram.csv", "weighted_degree_histogram.csv",
                 "curvature_histogram.csv", "summary.json", "provenance.json"):
        assert (out / name).exists()
    prov = json.loads((out / "provenance.json").read_text())
    assert prov["schema"] == PROVENANCE_SCHEMA
    assert prov["inputs"][0]["sha256"] == file_sha256(files["tri"])
    assert prov["config"]["weighting"] == "unit"


def test_curvature_star(runner, files, tmp_path):
    out = tmp_path / "o"
    r = runner.invoke(cli, ["curvature", files["star"], "--weighting", "unit",
                            "--out", str(out), "--dense-map"])
    assert r.exit_code == 0, r.output
    rows = _rows(out / "edge_curvature.csv")
    # K_{1,5}: 4 - 5 - 1
    assert [float(x["ricci"]) for x in rows] == [-2.0] * 5
    nodes = {int(x["node"]): float(x["scalar"]) for x in _rows(out / "node_curvature.csv")}
    assert nodes[0] == -10.0 and nodes[3] == -2.0
    m = np.loadtxt(out / "curvature_map.csv", delimiter=",")
    assert m.shape == (6, 6) and m[0, 1] == -2.0 and np.isnan(m[1, 2])


def test_curvature_dense_budget_exit(runner, files, tmp_path):
    r = runner.invoke(cli, ["curvature", files["star"], "--dense-map", "--dense-budget", "3",
                            "--out", str(tmp_path)])
    assert r.exit_code == 4


def test_flow_isolated_edge(runner, files, tmp_path):
    out = tmp_path / "o"
    r = runner.invoke(cli, ["flow", files["edge"], "--weighting", "unit", "--steps", "2",
                            "--dt", "0.1", "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert "floor events: 0" in r.output
    rows = _rows(out / "flow_trace.csv")
    assert [float(x["weight"]) for x in rows] == pytest.approx([1.0, 0.8, 0.672], abs=1e-12)
    final = (out / "final_weights.txt").read_text().splitlines()
    assert final[0].startswith("# dataset=") and final[-1].startswith("0 1 0.67")


def test_flow_floor_event(runner, files, tmp_path):
    r = runner.invoke(cli, ["flow", files["edge"], "--weighting", "unit", "--steps", "1",
                            "--out", str(tmp_path)])
    assert r.exit_code == 0 and "floor events: 1" in r.output


def test_diff(runner, files, tmp_path):
    out = tmp_path / "o"
    r = runner.invoke(cli, ["diff", files["tri"], files["star"], "--weighting", "unit",
                            "--out", str(out)])
    assert r.exit_code == 0, r.output
    report = json.loads((out / "report.json").read_text())
    assert report["threshold"] == 0.9 and report["config"]["flow"]["normalize"] == "max"
    assert read_pgm((out / "heatmap.pgm").read_bytes()).shape == (6, 6)
    scores = _rows(out / "node_scores.csv")
    assert {int(x["node"]) for x in scores if x["flagged"] == "1"} == set(report["flagged_nodes"])
    prov = json.loads((out / "provenance.json").read_text())
    assert len(prov["inputs"]) == 2


def test_diff_identical_has_no_flags(runner, files, tmp_path):
    out = tmp_path / "o"
    r = runner.invoke(cli, ["diff", files["tri"], files["tri"], "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert json.loads((out / "report.json").read_text())["flagged_nodes"] == []
    assert read_pgm((out / "heatmap.pgm").read_bytes()).max() == 0


def test_diff_env_threshold(runner, files, tmp_path):
    out = tmp_path / "o"
    r = runner.invoke(cli, ["diff", files["tri"], files["star"], "--weighting", "unit",
                            "--out", str(out)], env={"FORMANFLOW_DIFF_THRESHOLD": "-1"})
    assert r.exit_code == 0, r.output
    report = json.loads((out / "report.json").read_text())
    assert report["threshold"] == -1.0 and report["flagged_nodes"] == []


def test_diff_pgm_over_budget(runner, files, tmp_path):
    base = ["diff", files["tri"], files["star"], "--out", str(tmp_path), "--heatmap-budget", "2"]
    assert runner.invoke(cli, base + ["--formats", "pgm"]).exit_code == 4
    r = runner.invoke(cli, base)
    assert r.exit_code == 0 and not (tmp_path / "heatmap.pgm").exists()


@pytest.mark.parametrize("args,code", [
    (["stats", "{empty}"], 2),
    (["stats", "{bad}"], 2),
    (["stats", "/nonexistent/file.txt"], 2),
    (["diff", "{tri}", "{star}", "--threshold", "1.5"], 3),
    (["diff", "{tri}", "{star}", "--formats", "png"], 3),
    (["flow", "{tri}", "--dt", "0"], 3),
    (["stats", "{tri}", "--cap", "1"], 3),
    (["stats", "{tri}", "--no-such-option"], 3),
    (["gen", "erdos-renyi", "--n", "5"], 3),
])
def test_exit_codes(runner, files, tmp_path, args, code):
    args = [a.format(**files) for a in args] + ["--out", str(tmp_path)] \
        if args[0] != "gen" else args
    r = runner.invoke(cli, args)
    assert r.exit_code == code, r.output


def test_flow_overflow_is_config_error(runner, tmp_path):
    k = "".join(f"{i}\t{j}\n" for i in range(12) for j in range(i + 1, 12))
    p = tmp_path / "k12.txt"
    p.write_text(k)
    q = tmp_path / "k12b.txt"
    q.write_text(k.split("\n", 1)[1])
    r = runner.invoke(cli, ["diff", str(p), str(q), "--weighting", "unit", "--normalize", "none",
                            "--out", str(tmp_path)])
    assert r.exit_code == 3


def test_gen(runner, tmp_path):
    out = tmp_path / "g.txt"
    r = runner.invoke(cli, ["gen", "preferential-attachment", "--n", "50", "--m", "2",
                            "--seed", "3", "-o", str(out)])
    assert r.exit_code == 0
    text = out.read_text()
    assert text.startswith("# formanflow gen preferential-attachment n=50 m=2 seed=3")
    again = runner.invoke(cli, ["gen", "preferential-attachment", "--n", "50", "--m", "2",
                                "--seed", "3"])
    assert again.output == text
