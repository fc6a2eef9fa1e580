import json
import subprocess
import sys

import pytest

from gnnshs.cli import main
from gnnshs.graph import read_edge_list
from gnnshs.oracle import read_labels


@pytest.fixture
def pa_files(tmp_path):
    graph = tmp_path / "pa.txt"
    labels = tmp_path / "labels.txt"
    assert main(["generate", "--kind", "pa", "--n", "120", "--seed", "3", "--out", str(graph)]) == 0
    assert main(["label", str(graph), "--k", "10", "--out", str(labels)]) == 0
    return graph, labels


def test_generate_pa(tmp_path):
    out = tmp_path / "g.txt"
    assert main(["generate", "--kind", "pa", "--n", "500", "--seed", "7", "--out", str(out)]) == 0
    assert read_edge_list(out).m == 499
    manifest = json.loads((tmp_path / "g.txt.manifest.json").read_text())
    assert manifest["n"] == 500 and manifest["m"] == 499


def test_generate_er_is_deterministic(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for out in (a, b):
        assert main(["generate", "--kind", "er", "--n", "250", "--p", "0.01", "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    # binomial mean 311.25, sd about 17.6
    assert abs(read_edge_list(a).m - 311.25) < 4 * 17.6


def test_generate_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["generate", "--kind", "pa"])
    assert info.value.code == 1
    assert main(["generate", "--kind", "er", "--n", "10", "--out", str(tmp_path / "x")]) == 1
    assert main(["generate", "--kind", "er", "--n", "10", "--p", "2", "--out", str(tmp_path / "x")]) == 1


def test_label(pa_files):
    graph, labels = pa_files
    assert sum(read_labels(labels, 120)) == 10
    assert main(["label", str(graph), "--k", "0"]) == 1
    assert main(["label", str(graph), "--k", "121"]) == 1


def test_label_greedy_and_stdout(pa_files, capsys):
    graph, _ = pa_files
    assert main(["label", str(graph), "--k", "3", "--method", "greedy"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 120 and sum(int(l.split()[1]) for l in lines) == 3


def test_label_missing_graph(tmp_path):
    assert main(["label", str(tmp_path / "nope.txt"), "--k", "1"]) == 2


def test_features_csv(pa_files, tmp_path):
    graph, _ = pa_files
    out = tmp_path / "f.csv"
    assert main(["features", str(graph), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "node,effective_size,efficiency,degree"
    assert len(rows) == 121


def test_train_predict(pa_files, tmp_path, capsys):
    graph, labels = pa_files
    model = tmp_path / "m.json"
    assert main(["train", str(graph), str(labels), "--out", str(model), "--epochs", "40"]) == 0
    doc = json.loads(model.read_text())
    assert doc["dims"] == [3, 32, 2] and doc["L"] == 2
    log_rows = (tmp_path / "m.log.csv").read_text().splitlines()
    assert len(log_rows) == 41
    assert "test accuracy" in capsys.readouterr().out
    pred = tmp_path / "pred.txt"
    assert main(["predict", str(graph), str(model), "--k", "10", "--out", str(pred)]) == 0
    assert sum(read_labels(pred, 120)) == 10


def test_train_zero_epochs(pa_files, tmp_path):
    graph, labels = pa_files
    model, log = tmp_path / "m.json", tmp_path / "log.csv"
    assert main(["train", str(graph), str(labels), "--out", str(model), "--log", str(log), "--epochs", "0"]) == 0
    assert log.read_text().count("\n") == 1  # header only


def test_train_config_file(pa_files, tmp_path):
    graph, labels = pa_files
    cfg = tmp_path / "train.cfg"
    cfg.write_text("epochs = 3\nlr = 0.02  # comment\n")
    model = tmp_path / "m.json"
    assert main(["train", str(graph), str(labels), "--out", str(model), "--config", str(cfg)]) == 0
    assert (tmp_path / "m.log.csv").read_text().count("\n") == 4


def test_train_corrupt_labels(pa_files, tmp_path):
    graph, _ = pa_files
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n1 x\n")
    assert main(["train", str(graph), str(bad), "--out", str(tmp_path / "m.json")]) == 2


def test_train_divergence_exit_code(pa_files, tmp_path, capsys):
    graph, labels = pa_files
    code = main(["train", str(graph), str(labels), "--out", str(tmp_path / "m.json"), "--lr", "1e300", "--epochs", "5"])
    assert code == 3
    assert "epoch" in capsys.readouterr().err


def test_bench(pa_files, tmp_path, capsys):
    graph, labels = pa_files
    model = tmp_path / "m.json"
    main(["train", str(graph), str(labels), "--out", str(model), "--epochs", "5"])
    out = tmp_path / "bench"
    args = ["bench", str(graph), str(model), "--k", "10", "--count", "4", "--repeats", "1", "--out", str(out)]
    assert main(args) == 0
    rows = (out / "bench.csv").read_text().splitlines()
    assert len(rows) == 6 and rows[-1].startswith("geomean")
    assert len(json.loads((out / "bench.json").read_text())["snapshots"]) == 4
    assert "Geometric Mean" in capsys.readouterr().out

    batch = ["bench", str(graph), str(model), "--k", "10", "--mode", "batch", "--repeats", "1", "--out", str(out)]
    assert main(batch) == 0
    assert len((out / "bench.csv").read_text().splitlines()) == 3
    assert main(batch[:-2] + ["--deletions", "500", "--out", str(out)]) == 1
    assert main(["bench", str(graph), str(tmp_path / "missing.json"), "--out", str(out)]) == 2


def test_run_experiment(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("dataset = pa\nn = 150\nk = 10\nepochs = 20\ncount = 3\nrepeats = 1\n")
    out = tmp_path / "run"
    assert main(["run-experiment", str(cfg), "--out", str(out), "--seed", "4"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seeds"]["root"] == 4
    assert manifest["snapshot_edges"] == [148, 147, 146]
    for name in ("graph.txt", "labels.txt", "model.json", "predictions.txt", "bench.csv"):
        assert (out / name).is_file()
    cfg.write_text("dataset = pa\nbogus = 1\n")
    assert main(["run-experiment", str(cfg)]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "gnnshs", "generate", "--kind", "pa", "--n", "5", "--seed", "1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("n 5\n")
