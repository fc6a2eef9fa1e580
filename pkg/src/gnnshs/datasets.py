"""Synthetic generators and the bundled real-world edge lists."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .graph import Graph, format_edge_list, read_edge_list

DATA_DIR_ENV = "GNNSHS_DATA_DIR"


@dataclass(frozen=True)
class DatasetSpec:
    kind: str  # "pa", "er" or "file"
    n: int = 0
    p: float = 0.0
    seed: int = 0
    path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("pa", "er", "file"):
            raise ConfigError(f"unknown dataset kind {self.kind!r}")
        if self.kind != "file" and self.n <= 0:
            raise ConfigError("n must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p must lie in [0, 1], got {self.p}")
        if self.kind == "file" and not self.path:
            raise ConfigError("file datasets need a path")


def generate_pa(n: int, seed: int) -> Graph:
    """Preferential attachment tree: one edge per arriving node, degree-proportional target.

    Starts from the single edge {0, 1}, so the result always has ``n - 1``
    edges and is connected.
    """
    if n < 2:
        raise ConfigError(f"preferential attachment needs n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    # every edge endpoint listed once: uniform pick == degree-proportional pick
    ends = np.empty(2 * (n - 1), dtype=np.int64)
    ends[0], ends[1] = 0, 1
    g = Graph(n)
    g.add_edge(0, 1)
    filled = 2
    draws = rng.random(n)
    for v in range(2, n):
        target = int(ends[int(draws[v] * filled)])
        g.add_edge(target, v)
        ends[filled] = target
        ends[filled + 1] = v
        filled += 2
    return g


def generate_er(n: int, p: float, seed: int) -> Graph:
    """G(n, p): every unordered pair kept independently with probability ``p``."""
    if n < 1:
        raise ConfigError(f"need n >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"p must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    rows, cols = np.triu_indices(n, k=1)
    keep = rng.random(rows.size) < p
    return Graph(n, zip(rows[keep].tolist(), cols[keep].tolist()))


def load_edge_list(path: str | Path) -> Graph:
    return read_edge_list(path)


def generate(spec: DatasetSpec) -> Graph:
    if spec.kind == "pa":
        return generate_pa(spec.n, spec.seed)
    if spec.kind == "er":
        return generate_er(spec.n, spec.p, spec.seed)
    return load_edge_list(spec.path)  # type: ignore[arg-type]


def edge_list_checksum(g: Graph) -> str:
    return hashlib.sha256(format_edge_list(g).encode("utf-8")).hexdigest()


def file_checksum(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# named datasets


@dataclass(frozen=True)
class NamedDataset:
    name: str
    kind: str
    n: int
    m: int | None
    p: float = 0.0
    file: str | None = None
    sha256: str | None = None
    k: int = 50
    note: str = ""


def _manifest() -> dict:
    text = resources.files("gnnshs.data").joinpath("manifest.json").read_text(encoding="utf-8")
    return json.loads(text)


def catalog() -> dict[str, NamedDataset]:
    return {d["name"]: NamedDataset(**d) for d in _manifest()["datasets"]}


def locate(name: str) -> Path:
    """Path of a bundled (or user-supplied) real-world edge list.

    Files are looked up in ``$GNNSHS_DATA_DIR`` first, then in the package data.
    """
    entry = catalog()[name]
    if entry.file is None:
        raise ConfigError(f"{name} is generated, not loaded from a file")
    override = os.environ.get(DATA_DIR_ENV)
    if override and (Path(override) / entry.file).is_file():
        return Path(override) / entry.file
    path = Path(str(resources.files("gnnshs.data").joinpath(entry.file)))
    if not path.is_file():
        raise FileNotFoundError(
            f"edge list for {name!r} ({entry.file}) is not bundled; "
            f"place it in ${DATA_DIR_ENV} ({entry.note})"
        )
    return path


def load_named(name: str, seed: int = 0) -> Graph:
    """Build a catalog dataset and check its size against the catalog entry."""
    entry = catalog()[name]
    if entry.kind == "pa":
        return generate_pa(entry.n, seed)
    if entry.kind == "er":
        return generate_er(entry.n, entry.p, seed)
    path = locate(name)
    if entry.sha256 and file_checksum(path) != entry.sha256:
        raise ConfigError(f"checksum mismatch for {path}")
    g = load_edge_list(path)
    if g.n != entry.n or (entry.m is not None and g.m != entry.m):
        raise ConfigError(f"{name}: expected n={entry.n}, m={entry.m}; file has n={g.n}, m={g.m}")
    return g


def manifest_entry(name: str, spec: DatasetSpec, g: Graph) -> dict:
    return {
        "name": name,
        **{k: v for k, v in asdict(spec).items() if v is not None},
        "n": g.n,
        "m": g.m,
        "sha256": edge_list_checksum(g),
    }
