"""End-to-end experiment runs: generate -> label -> train -> bench.

Config files are plain ``key = value`` lines (``#`` starts a comment)::

    dataset = pa          # pa | er | file | a catalog name such as football
    n = 500
    seed = 7
    k = 50
    epochs = 200
    mode = single-deletions
    count = 50
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import datasets
from .dynamics import BenchReport, make_batch_update, make_deletion_sequence, run_bench
from .errors import ConfigError
from .graph import Graph, format_edge_list
from .model import (
    EpochRecord,
    TrainConfig,
    TrainResult,
    class_metrics,
    fit,
    params_to_dict,
    predict_proba,
)
from .oracle import format_labels, label_top_k

log = logging.getLogger(__name__)


def derive_seed(root: int, tag: str) -> int:
    """Independent 32-bit sub-seed for one pipeline stage."""
    digest = hashlib.sha256(f"{root}:{tag}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


@dataclass
class ExperimentConfig:
    dataset: str = "pa"
    n: int = 500
    p: float = 0.0
    path: str | None = None
    seed: int = 0
    k: int = 50
    epochs: int = 200
    lr: float = 0.01
    weight_decay: float = 5e-4
    hidden: int = 32
    mode: str = "single-deletions"
    count: int = 50
    deletions: int = 5
    insertions: int = 5
    repeats: int = 3
    out: str = "experiment-out"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.mode not in ("single-deletions", "batch"):
            raise ConfigError(f"mode must be single-deletions or batch, got {self.mode!r}")
        if self.dataset == "file" and (not self.path or not Path(self.path).is_file()):
            raise FileNotFoundError(f"graph file {self.path!r} does not exist")

    def seeds(self) -> dict[str, int]:
        return {
            "root": self.seed,
            "graph": derive_seed(self.seed, "graph"),
            "train": derive_seed(self.seed, "train"),
            "dynamics": derive_seed(self.seed, "dynamics"),
        }


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def make_config(values: dict[str, object]) -> ExperimentConfig:
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    kwargs: dict[str, object] = {}
    for key, value in values.items():
        if value is None:
            continue
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        kind = str(types[key])
        try:
            if kind == "int":
                kwargs[key] = int(value)  # type: ignore[arg-type]
            elif kind == "float":
                kwargs[key] = float(value)  # type: ignore[arg-type]
            else:
                kwargs[key] = str(value)
        except ValueError:
            raise ConfigError(f"bad value {value!r} for {key}") from None
    return ExperimentConfig(**kwargs)  # type: ignore[arg-type]


def load_config(path: str | Path, overrides: dict[str, object] | None = None) -> ExperimentConfig:
    values: dict[str, object] = dict(parse_config_text(Path(path).read_text(encoding="utf-8")))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return make_config(values)


def build_graph(cfg: ExperimentConfig) -> tuple[Graph, dict]:
    seed = cfg.seeds()["graph"]
    if cfg.dataset == "pa":
        spec = datasets.DatasetSpec("pa", cfg.n, seed=seed)
    elif cfg.dataset == "er":
        spec = datasets.DatasetSpec("er", cfg.n, cfg.p, seed)
    elif cfg.dataset == "file":
        spec = datasets.DatasetSpec("file", path=cfg.path)
    else:
        g = datasets.load_named(cfg.dataset, seed)
        return g, {"name": cfg.dataset, "n": g.n, "m": g.m, "seed": seed,
                   "sha256": datasets.edge_list_checksum(g)}
    g = datasets.generate(spec)
    return g, datasets.manifest_entry(cfg.dataset, spec, g)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_text(path: Path, text: str) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return sha256_text(text)


def training_log_csv(records: list[EpochRecord]) -> str:
    lines = ["epoch,loss,train_accuracy,val_accuracy,val_loss"]
    lines += [f"{r.epoch},{r.loss!r},{r.train_accuracy!r},{r.val_accuracy!r},{r.val_loss!r}" for r in records]
    return "\n".join(lines) + "\n"


def held_out_metrics(g: Graph, result: TrainResult, labels) -> dict:
    """Held-out metrics: argmax accuracy plus SHS precision/recall/F1 on the test nodes."""
    pred = predict_proba(g, result.params)
    m = class_metrics(pred.y_hat, labels, result.test_nodes)
    m["test_nodes"] = int(result.test_nodes.size)
    m["test_shs"] = int(np.sum(np.asarray(labels)[result.test_nodes]))
    return m


@dataclass
class ExperimentResult:
    out_dir: Path
    manifest: dict
    report: BenchReport
    train: TrainResult
    artifacts: dict[str, Path] = field(default_factory=dict)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = cfg.seeds()

    g, dataset_entry = build_graph(cfg)
    if cfg.k > g.n:
        raise ConfigError(f"k={cfg.k} exceeds n={g.n}")
    log.info("graph %s: n=%d m=%d", cfg.dataset, g.n, g.m)
    checksums = {"graph.txt": write_text(out / "graph.txt", format_edge_list(g))}

    truth = label_top_k(g, cfg.k)
    labels = truth.labels(g.n)
    checksums["labels.txt"] = write_text(out / "labels.txt", format_labels(labels))

    tcfg = TrainConfig(
        epochs=cfg.epochs, learning_rate=cfg.lr, weight_decay=cfg.weight_decay,
        seed=seeds["train"], hidden=cfg.hidden,
    )
    result = fit(g, None, labels, tcfg)
    model_text = json.dumps(params_to_dict(result.params), indent=1) + "\n"
    checksums["model.json"] = write_text(out / "model.json", model_text)
    checksums["train_log.csv"] = write_text(out / "train_log.csv", training_log_csv(result.log))
    metrics = held_out_metrics(g, result, labels)
    log.info("test accuracy %.4f (F1 %.3f)", metrics["accuracy"], metrics["f1"])

    if cfg.mode == "single-deletions":
        seq = make_deletion_sequence(g, cfg.count, seeds["dynamics"])
    else:
        seq = make_batch_update(g, cfg.deletions, cfg.insertions, seeds["dynamics"])
    report = run_bench(seq, result.params, cfg.k, dataset=cfg.dataset, mode=cfg.mode, repeats=cfg.repeats)
    pred_lines = [
        f"{r.snapshot} " + " ".join(str(v) for v in r.predicted_spanners) for r in report.records
    ]
    checksums["predictions.txt"] = write_text(out / "predictions.txt", "\n".join(pred_lines) + "\n")
    write_text(out / "bench.json", report.to_json())
    write_text(out / "bench.csv", report.to_csv())

    manifest = {
        "config": asdict(cfg),
        "seeds": seeds,
        "dataset": dataset_entry,
        "k": cfg.k,
        "test_metrics": metrics,
        "best_epoch": result.best_epoch,
        "snapshot_accuracy": [r.accuracy for r in report.records],
        "snapshot_edges": [s.m for s in seq.snapshots],
        "checksums": checksums,
    }
    write_text(out / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    artifacts = {name: out / name for name in [*checksums, "bench.json", "bench.csv", "manifest.json"]}
    return ExperimentResult(out, manifest, report, result, artifacts)


def write_training_outputs(result: TrainResult, model_path: Path, log_path: Path | None) -> None:
    model_path.write_text(json.dumps(params_to_dict(result.params), indent=1) + "\n", encoding="utf-8")
    if log_path is not None:
        log_path.write_text(training_log_csv(result.log), encoding="utf-8")


def write_features_csv(fm, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "effective_size", "efficiency", "degree"])
        for i, row in enumerate(fm.values):
            w.writerow([i, repr(float(row[0])), repr(float(row[1])), int(row[2])])
