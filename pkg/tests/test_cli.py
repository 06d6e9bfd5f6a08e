import json

import pytest

from plcuts.cli import main
from plcuts.errors import InvalidInput
from plcuts.experiment import ExperimentConfig, run_experiment, select_cell


def _json(path):
    with open(path) as fh:
        return json.load(fh)


def _strip_time(d):
    d = dict(d)
    d.pop("created_at", None)
    return d


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["synth", "pycrp-sbm", "--n", "120", "--seed", "3", "--out-edges", "g.txt",
                 "--out-labels", "z.txt", "--out", "synth.json"]) == 0
    assert main(["synth", "blobs", "--n", "150", "--d", "2", "--seed", "1", "--out-csv", "b.csv",
                 "--out", "blobs.json"]) == 0
    return tmp_path


COMMANDS = {
    "cluster-graph": ["cluster", "graph", "--input", "g.txt", "--labels", "z.txt", "--isolated", "self-loop",
                      "--lambda", "0.01", "--theta", "0.2"],
    "cluster-vectors": ["cluster", "vectors", "--input", "b.csv", "--has-labels", "--lambda", "0.001",
                        "--alpha", "0.01", "--theta", "0", "--order", "shuffled", "--restarts", "2"],
    "kkm": ["baseline", "kkm", "--input", "g.txt", "--labels", "z.txt", "--isolated", "self-loop"],
    "kmeans": ["baseline", "kmeans", "--input", "b.csv", "--has-labels"],
    "pyp": ["baseline", "pyp", "--input", "b.csv", "--has-labels", "--lambda", "0.2", "--theta", "0.01"],
}


@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_result_commands(workspace, name):
    argv = COMMANDS[name]
    assert main(argv + ["--out", "a.json", "--out-labels", "a.txt"]) == 0
    assert main(argv + ["--out", "b.json"]) == 0
    a, b = _json("a.json"), _json("b.json")
    assert a["schema_version"] == 1
    assert a["result"]["assignments"] == b["result"]["assignments"]
    assert 0.0 <= a["result"]["nmi"] <= 1.0
    assert a["conventions"]["nmi"] == "nmi_sqrt_natural_log"
    # defaults are echoed
    assert "seed" in a["args"]
    tsv = (workspace / "a.json.ranksize.tsv").read_text().splitlines()
    assert tsv[0] == "rank\tsize" and len(tsv) == a["result"]["k"] + 1
    assert len((workspace / "a.txt").read_text().split()) == len(a["result"]["assignments"])


def test_graph_cluster_records_rho_and_cut_trace(workspace):
    assert main(COMMANDS["cluster-graph"] + ["--out", "r.json"]) == 0
    r = _json("r.json")["result"]
    assert r["rho"] > 0 and len(r["cut_trace"]) == len(r["objective_trace"])
    args = _json("r.json")["args"]
    assert args["rho"] == "auto" and args["objective"] == "ncut" and args["max_sweeps"] == 100


def test_figures(workspace):
    pytest.importorskip("matplotlib")
    assert main(COMMANDS["cluster-vectors"] + ["--out", "r.json", "--figures", "figs"]) == 0
    assert (workspace / "figs" / "r_ranksize.png").stat().st_size > 0
    assert (workspace / "figs" / "r_trace.png").stat().st_size > 0


def test_graph_from_vectors(workspace):
    assert main(["graph", "from-vectors", "--input", "b.csv", "--has-labels", "--sparsify", "knn",
                 "--param", "8", "--out-edges", "bg.txt", "--out", "gv.json"]) == 0
    assert _json("gv.json")["n"] == 150
    assert main(["cluster", "graph", "--input", "bg.txt", "--lambda", "0.001", "--out", "c.json"]) == 0


def test_eval_and_audit(workspace, capsys):
    assert main(COMMANDS["cluster-vectors"] + ["--out", "r.json"]) == 0
    assert main(COMMANDS["kmeans"] + ["--out", "k.json"]) == 0
    assert main(["eval", "nmi", "r.json", "r.json", "--out", "e.json"]) == 0
    assert _json("e.json")["nmi"] == 1.0
    assert main(["eval", "nmi", "r.json", "k.json", "--out", "e2.json"]) == 0
    assert 0 <= _json("e2.json")["nmi"] <= 1
    assert main(["audit", "r.json", "--input", "b.csv", "--out", "a.json"]) == 0
    rep = _json("a.json")["audit"]
    assert rep["ok"] and rep["final_discrepancy"] < 1e-7
    assert main(COMMANDS["cluster-graph"] + ["--out", "g.json"]) == 0
    assert main(["audit", "g.json", "--input", "g.txt", "--out", "ga.json"]) == 0
    assert _json("ga.json")["audit"]["final_discrepancy"] < 1e-7


def test_audit_detects_corruption(workspace):
    assert main(COMMANDS["cluster-vectors"] + ["--out", "r.json"]) == 0
    d = _json("r.json")
    d["result"]["phase_trace"][-1] += 5.0
    with open("bad.json", "w") as fh:
        json.dump(d, fh)
    assert main(["audit", "bad.json", "--out", "a.json"]) == 1
    assert main(["audit", "bad.json", "--strict"]) == 2


def test_errors_exit_nonzero(workspace, capsys):
    (workspace / "bad.txt").write_text("0 1\n1 two\n")
    assert main(["cluster", "graph", "--input", "bad.txt"]) == 2
    assert "bad.txt:2" in capsys.readouterr().err
    assert main(["cluster", "graph", "--input", "missing.txt"]) == 2
    assert main(["baseline", "kmeans", "--input", "b.csv"]) == 2  # no k and no labels


def _config(tmp, **kw):
    base = {"input": "b.csv", "has_labels": True, "output": str(tmp / "sw.json")}
    base.update(kw)
    return base


def test_experiment_single_cell(workspace):
    cfg = ExperimentConfig.from_dict(_config(workspace, alpha=0.01, theta=0.0, **{"lambda": 0.001}))
    rec = run_experiment(cfg)
    assert rec["selection"] is None and rec["split"] is None
    d = _json(workspace / "sw.json")
    assert d["result"]["k"] == len(d["result"]["size_histogram"])
    assert d["config"]["lambda"] == [0.001]
    assert not (workspace / "sw.json.cells").exists()


def test_experiment_sweep_and_determinism(workspace):
    raw = _config(workspace, alpha=[0.01, 1.0], theta=[0.0], split=0.3, baselines=["kmeans", "pyp"],
                  pyp_lambda=[0.1, 0.3], workers=2, **{"lambda": [0.001, 0.01]})
    with open("cfg.json", "w") as fh:
        json.dump(raw, fh)
    assert main(["sweep", "run", "--config", "cfg.json"]) == 0
    first = (workspace / "sw.json").read_text()
    assert main(["sweep", "run", "--config", "cfg.json", "--workers", "1"]) == 0
    second = (workspace / "sw.json").read_text()
    a, b = json.loads(first), json.loads(second)
    a["config"].pop("workers")
    b["config"].pop("workers")
    assert _strip_time(a) == _strip_time(b)
    assert a["split"] == {"validation": 45, "clustering": 105}
    assert len(a["selection"]["cells"]) == 4
    assert len(list((workspace / "sw.json.cells").iterdir())) == 4
    assert set(a["baselines"]) == {"kmeans", "pyp"}
    assert "nmi" in a["result"] and "nmi" in a["baselines"]["kmeans"]


def test_experiment_graph_with_kkm(workspace):
    cfg = ExperimentConfig.from_dict({"input": "g.txt", "labels": "z.txt", "isolated": "self-loop",
                                      "lambda": [0.001, 0.1], "theta": 0.2, "split": 0.3,
                                      "baselines": ["kkm"], "output": str(workspace / "gx.json")})
    rec = run_experiment(cfg)
    assert rec["result"]["mode"] == "graph" and "rho" in rec["result"]
    assert rec["baselines"]["kkm"]["k"] == rec["result"]["k_true"]


def test_experiment_validation_errors(workspace):
    with pytest.raises(InvalidInput, match="empty"):
        ExperimentConfig.from_dict(_config(workspace, **{"lambda": []}))
    with pytest.raises(InvalidInput, match="not found"):
        ExperimentConfig.from_dict(_config(workspace, input="nope.csv"))
    with pytest.raises(InvalidInput, match="unknown config keys"):
        ExperimentConfig.from_dict(_config(workspace, colour="red"))
    cfg = ExperimentConfig.from_dict({"input": "b.csv", "output": "x.json", "lambda": [1.0, 2.0]})
    with pytest.raises(InvalidInput, match="ground-truth"):
        run_experiment(cfg, write=False)


def test_experiment_errors_name_the_cell(workspace):
    (workspace / "iso.txt").write_text("0 1\n# nodes 3\n")
    (workspace / "iso_z.txt").write_text("0\n0\n1\n")
    cfg = ExperimentConfig.from_dict({"input": "iso.txt", "labels": "iso_z.txt", "lambda": [0.1, 0.2],
                                      "output": "x.json"})
    with pytest.raises(InvalidInput, match="grid cell"):
        run_experiment(cfg, write=False)


def test_select_cell_rule():
    cells = [{"k": 5, "nmi": 0.9}, {"k": 3, "nmi": 0.5}, {"k": 7, "nmi": 0.6}, {"k": 3, "nmi": 0.8}]
    assert select_cell(cells, 4) == 0  # k=5 and k=3 tie on distance; higher NMI wins
    assert select_cell(cells, 2) == 3
    assert select_cell(cells, 8) == 2
    assert select_cell([{"k": 2, "nmi": 0.5}, {"k": 2, "nmi": 0.5}], 2) == 0
