"""Snapshot sequences and the oracle-vs-model benchmark."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import ConfigError
from .graph import Graph
from .model import ModelParams, predict, snapshot_features
from .oracle import PAIR_CONVENTION, label_top_k


@dataclass(frozen=True)
class Update:
    op: str  # "delete" or "insert"
    i: int
    j: int


def apply_updates(g: Graph, updates: Iterable[Update]) -> Graph:
    out = g.copy()
    for u in updates:
        if u.op == "delete":
            if not out.remove_edge(u.i, u.j):
                raise ConfigError(f"cannot delete absent edge ({u.i}, {u.j})")
        elif u.op == "insert":
            if not out.add_edge(u.i, u.j):
                raise ConfigError(f"cannot insert present edge ({u.i}, {u.j})")
        else:
            raise ConfigError(f"unknown update {u.op!r}")
    return out


@dataclass
class SnapshotSequence:
    base: Graph
    steps: list[list[Update]] = field(default_factory=list)
    snapshots: list[Graph] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.snapshots)

    def replay(self) -> list[Graph]:
        """Re-derive every snapshot from the base graph and the recorded updates."""
        out = []
        g = self.base
        for step in self.steps:
            g = apply_updates(g, step)
            out.append(g)
        return out


def make_deletion_sequence(g: Graph, count: int, seed: int) -> SnapshotSequence:
    """``count`` snapshots, each deleting one uniformly chosen edge of the previous one."""
    if count < 0 or count > g.m:
        raise ConfigError(f"cannot delete {count} edges from a graph with {g.m}")
    rng = np.random.default_rng(seed)
    seq = SnapshotSequence(g.copy())
    current = seq.base
    for _ in range(count):
        edges = list(current.edges())
        i, j = edges[int(rng.integers(len(edges)))]
        step = [Update("delete", i, j)]
        current = apply_updates(current, step)
        seq.steps.append(step)
        seq.snapshots.append(current)
    return seq


def _sample_non_edges(g: Graph, count: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    n = g.n
    free = n * (n - 1) // 2 - g.m
    if count > free:
        raise ConfigError(f"cannot insert {count} edges; only {free} node pairs are free")
    if count == 0:
        return []
    if free <= 4 * count or n <= 64:
        pool = [(i, j) for i in range(n) for j in range(i + 1, n) if not g.has_edge(i, j)]
        pick = rng.choice(len(pool), size=count, replace=False)
        return sorted(pool[int(t)] for t in pick)
    chosen: set[tuple[int, int]] = set()
    while len(chosen) < count:
        i, j = (int(v) for v in rng.integers(n, size=2))
        if i == j:
            continue
        pair = (min(i, j), max(i, j))
        if not g.has_edge(*pair):
            chosen.add(pair)
    return sorted(chosen)


def make_batch_update(g: Graph, deletions: int, insertions: int, seed: int) -> SnapshotSequence:
    """A single snapshot applying ``deletions`` edge removals and ``insertions`` new edges at once.

    Inserted pairs are drawn from pairs absent in ``g``, so a deleted edge is
    never re-added in the same batch.
    """
    if deletions < 0 or insertions < 0:
        raise ConfigError("update counts must be non-negative")
    if deletions > g.m:
        raise ConfigError(f"cannot delete {deletions} edges from a graph with {g.m}")
    rng = np.random.default_rng(seed)
    edges = list(g.edges())
    gone = sorted(edges[int(t)] for t in rng.choice(len(edges), size=deletions, replace=False)) if deletions else []
    added = _sample_non_edges(g, insertions, rng)
    step = [Update("delete", i, j) for i, j in gone] + [Update("insert", i, j) for i, j in added]
    seq = SnapshotSequence(g.copy())
    seq.steps.append(step)
    seq.snapshots.append(apply_updates(seq.base, step))
    return seq


# ---------------------------------------------------------------------------
# timing and evaluation


def median_time(fn: Callable[[], object], repeats: int = 3) -> tuple[float, object]:
    """Median wall time over ``repeats`` calls (monotonic clock) and the last result."""
    times = []
    result = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), result


@dataclass
class SnapshotRecord:
    snapshot: int
    oracle_s: float
    model_s: float
    feature_s: float
    accuracy: float
    overlap: int
    oracle_spanners: list[int]
    predicted_spanners: list[int]

    @property
    def speedup(self) -> float:
        return self.oracle_s / self.model_s


def evaluate_snapshot(
    g_t: Graph, model: ModelParams, k: int, repeats: int = 3, index: int = 0
) -> SnapshotRecord:
    """Time the one-shot oracle and the model on one snapshot and compare their labels.

    Model time covers feature extraction, the forward pass and top-k
    selection; feature time is also reported on its own.
    """
    oracle_s, truth = median_time(lambda: label_top_k(g_t, k), repeats)
    model_s, guess = median_time(lambda: predict(g_t, model, k, residual=False), repeats)
    feature_s, _ = median_time(lambda: snapshot_features(g_t, model), repeats)
    truth_set = set(truth.spanners)  # type: ignore[attr-defined]
    guess_set = set(guess.spanners)  # type: ignore[attr-defined]
    overlap = len(truth_set & guess_set)
    # both label vectors have exactly k ones, so every miss costs two nodes
    acc = 1.0 - 2.0 * (k - overlap) / g_t.n if g_t.n else 1.0
    return SnapshotRecord(
        index,
        max(oracle_s, 1e-9),
        max(model_s, 1e-9),
        feature_s,
        acc,
        overlap,
        list(truth.spanners),  # type: ignore[attr-defined]
        list(guess.spanners),  # type: ignore[attr-defined]
    )


@dataclass
class SpeedupStats:
    geometric_mean: float
    min: float
    max: float


def geometric_mean(values: Iterable[float]) -> float:
    vals = list(values)
    return math.exp(math.fsum(math.log(v) for v in vals) / len(vals))


def speedup_stats(records: list[SnapshotRecord]) -> SpeedupStats:
    if not records:
        raise ConfigError("no snapshot records to summarize")
    s = [r.speedup for r in records]
    lo, hi = min(s), max(s)
    # guard against the last ulp of exp(mean(log)) stepping outside [min, max]
    gm = min(max(geometric_mean(s), lo), hi)
    return SpeedupStats(gm, lo, hi)


@dataclass
class BenchReport:
    dataset: str
    k: int
    mode: str
    records: list[SnapshotRecord]
    stats: SpeedupStats
    extra: dict = field(default_factory=dict)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([r.accuracy for r in self.records]))

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "k": self.k,
            "mode": self.mode,
            "pair_convention": PAIR_CONVENTION,
            "pair_convention_note": "connectivity counts ordered pairs; divide by 2 for unordered",
            "speedup": asdict(self.stats),
            "mean_accuracy": self.mean_accuracy,
            "snapshots": [{**asdict(r), "speedup": r.speedup} for r in self.records],
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["snapshot", "oracle_s", "model_s", "speedup", "accuracy"])
        for r in self.records:
            w.writerow([r.snapshot, f"{r.oracle_s:.6g}", f"{r.model_s:.6g}", f"{r.speedup:.6g}", f"{r.accuracy:.6f}"])
        w.writerow(["geomean", "", "", f"{self.stats.geometric_mean:.6g}", f"{self.mean_accuracy:.6f}"])
        return buf.getvalue()

    def summary_table(self) -> str:
        head = f"{'Dataset':<16}{'Geometric Mean':>16}{'Min':>12}{'Max':>12}{'Accuracy':>10}"
        row = (
            f"{self.dataset:<16}{self.stats.geometric_mean:>16.1f}"
            f"{self.stats.min:>12.1f}{self.stats.max:>12.1f}{self.mean_accuracy:>10.4f}"
        )
        return f"{head}\n{row}"


def run_bench(
    seq: SnapshotSequence,
    model: ModelParams,
    k: int,
    dataset: str = "",
    mode: str = "single-deletions",
    repeats: int = 3,
) -> BenchReport:
    """Evaluate every snapshot serially (timings are never taken concurrently)."""
    records = [
        evaluate_snapshot(g_t, model, k, repeats=repeats, index=idx)
        for idx, g_t in enumerate(seq.snapshots, start=1)
    ]
    return BenchReport(dataset, k, mode, records, speedup_stats(records))
