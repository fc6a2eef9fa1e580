"""Command-line entry point.

Exit codes: 0 success, 1 usage/configuration, 2 data or parse error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import datasets, dynamics, experiment
from .errors import ConfigError, InvalidEdgeError, InvalidKError, NumericError, ParseError
from .features import build_features
from .graph import format_edge_list, read_edge_list
from .model import TrainConfig, fit, load_model, predict
from .oracle import format_labels, greedy_top_k, label_top_k, read_labels

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3

log = logging.getLogger("gnnshs")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_generate(args: argparse.Namespace) -> int:
    if args.kind == "er" and args.p is None:
        raise ConfigError("--p is required for --kind er")
    spec = datasets.DatasetSpec(args.kind, args.n, args.p or 0.0, args.seed)
    g = datasets.generate(spec)
    _write(args.out, format_edge_list(g))
    if args.out and args.out != "-":
        entry = datasets.manifest_entry(Path(args.out).stem, spec, g)
        Path(args.manifest or f"{args.out}.manifest.json").write_text(
            json.dumps(entry, indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )
    log.info("generated n=%d m=%d", g.n, g.m)
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    g = read_edge_list(args.graph)
    if args.k < 1 or args.k > g.n:
        raise InvalidKError(f"k must satisfy 1 <= k <= n={g.n}, got {args.k}")
    pick = greedy_top_k if args.method == "greedy" else label_top_k
    result = pick(g, args.k, workers=args.workers)
    _write(args.out, format_labels(result.labels(g.n)))
    log.info("labelled %d spanners; residual connectivity %d", args.k, result.residual_connectivity)
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    g = read_edge_list(args.graph)
    fm = build_features(g)
    if args.out and args.out != "-":
        experiment.write_features_csv(fm, Path(args.out))
    else:
        lines = ["node,effective_size,efficiency,degree"]
        lines += [f"{i},{r[0]!r},{r[1]!r},{int(r[2])}" for i, r in enumerate(fm.values.tolist())]
        sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _train_config(args: argparse.Namespace) -> TrainConfig:
    values: dict = {}
    if args.config:
        values.update(experiment.parse_config_text(Path(args.config).read_text(encoding="utf-8")))
    mapping = {"epochs": "epochs", "lr": "learning_rate", "weight_decay": "weight_decay",
               "seed": "seed", "hidden": "hidden"}
    kwargs = {}
    for src, dst in mapping.items():
        value = getattr(args, src, None)
        if value is None:
            value = values.get(src)
        if value is not None:
            kwargs[dst] = float(value) if dst in ("learning_rate", "weight_decay") else int(value)
    return TrainConfig(**kwargs)


def cmd_train(args: argparse.Namespace) -> int:
    g = read_edge_list(args.graph)
    labels = read_labels(args.labels, g.n)
    cfg = _train_config(args)
    result = fit(g, None, labels, cfg)
    log_path = Path(args.log) if args.log else Path(args.out).with_suffix(".log.csv")
    experiment.write_training_outputs(result, Path(args.out), log_path)
    metrics = experiment.held_out_metrics(g, result, labels)
    print(
        f"best epoch {result.best_epoch}; test accuracy {metrics['accuracy']:.4f}, "
        f"SHS F1 {metrics['f1']:.3f} on {metrics['test_nodes']} nodes"
    )
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    g = read_edge_list(args.graph)
    model = load_model(args.model)
    result = predict(g, model, args.k)
    _write(args.out, format_labels(result.labels(g.n)))
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    g = read_edge_list(args.graph)
    if not Path(args.model).is_file():
        raise FileNotFoundError(f"model file {args.model} not found")
    model = load_model(args.model)
    if args.k < 1 or args.k > g.n:
        raise InvalidKError(f"k must satisfy 1 <= k <= n={g.n}, got {args.k}")
    if args.mode == "batch":
        seq = dynamics.make_batch_update(g, args.deletions, args.insertions, args.seed)
    else:
        seq = dynamics.make_deletion_sequence(g, args.count, args.seed)
    report = dynamics.run_bench(
        seq, model, args.k, dataset=Path(args.graph).stem, mode=args.mode, repeats=args.repeats
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.json").write_text(report.to_json(), encoding="utf-8")
    (out / "bench.csv").write_text(report.to_csv(), encoding="utf-8")
    print(report.summary_table())
    return 0


def cmd_run_experiment(args: argparse.Namespace) -> int:
    overrides = {
        "seed": args.seed, "out": args.out, "k": args.k, "epochs": args.epochs,
        "lr": args.lr, "weight_decay": args.weight_decay,
    }
    cfg = experiment.load_config(args.config, overrides)
    result = experiment.run_experiment(cfg)
    m = result.manifest["test_metrics"]
    print(f"test accuracy {m['accuracy']:.4f}  SHS F1 {m['f1']:.3f}")
    print(result.report.summary_table())
    print(f"artifacts in {result.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gnnshs", description="Top-k structural hole spanners in dynamic graphs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic graph as an edge list")
    p.add_argument("--kind", choices=["pa", "er"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("label", help="ground-truth SHS labels from the connectivity oracle")
    p.add_argument("graph")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--method", choices=["oneshot", "greedy"], default="oneshot")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("features", help="dump per-node ego features as CSV")
    p.add_argument("graph")
    p.add_argument("--out")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train the GNN on one labelled graph")
    p.add_argument("graph")
    p.add_argument("labels")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--log", help="per-epoch CSV log (default: <out>.log.csv)")
    p.add_argument("--config")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", type=float)
    p.add_argument("--hidden", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a trained model to a graph snapshot")
    p.add_argument("graph")
    p.add_argument("model")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="time oracle recomputation against the model on snapshots")
    p.add_argument("graph")
    p.add_argument("model")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--mode", choices=["single-deletions", "batch"], default="single-deletions")
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--deletions", type=int, default=5)
    p.add_argument("--insertions", type=int, default=5)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="bench-out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("run-experiment", help="generate, label, train and bench from one config file")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--k", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", type=float)
    p.set_defaults(func=cmd_run_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("GNNSHS_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, InvalidKError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, InvalidEdgeError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
