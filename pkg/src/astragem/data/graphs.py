"""Graph samples, datasets, and the versioned JSON container format.

A graph is a binary symmetric adjacency matrix with zero diagonal. The disk
format lists each edge once (u < v):

    {"format_version": 1,
     "graphs": [{"n": 4, "edges": [[0, 1], [1, 2]]}, ...],
     "metadata": {...}}

Validation happens on construction and again on load; nothing read from disk
is trusted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from astragem.errors import DataError, FormatError

GRAPH_FORMAT_VERSION = 1


@dataclass(frozen=True)
class GraphSample:
    """Binary symmetric zero-diagonal adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DataError(f"adjacency must be square, got shape {a.shape}")
        if not np.isin(a, (0, 1)).all():
            raise DataError("adjacency entries must be 0 or 1")
        if a.diagonal().any():
            raise DataError("adjacency diagonal must be zero")
        if not np.array_equal(a, a.T):
            raise DataError("adjacency must be symmetric")
        object.__setattr__(self, "adjacency", np.ascontiguousarray(a, dtype=np.int8))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return int(self.adjacency.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        iu, ju = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(iu.tolist(), ju.tolist()))

    def dense(self) -> np.ndarray:
        return np.asarray(self.adjacency, dtype=np.float64)

    @classmethod
    def from_edges(cls, n: int, edges) -> "GraphSample":
        a = np.zeros((n, n), dtype=np.int8)
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise DataError(f"edge ({u}, {v}) invalid for n={n}")
            a[u, v] = 1
            a[v, u] = 1
        return cls(a)

    def permuted(self, perm) -> "GraphSample":
        perm = np.asarray(perm)
        return GraphSample(self.adjacency[np.ix_(perm, perm)])


@dataclass
class Dataset:
    """A named list of graphs plus provenance metadata (nonempty)."""

    name: str
    graphs: list[GraphSample]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.graphs:
            raise DataError(f"dataset '{self.name}' is empty")
        for g in self.graphs:
            if not isinstance(g, GraphSample):
                raise DataError("dataset graphs must be GraphSample instances")

    def __len__(self):
        return len(self.graphs)

    def sizes(self) -> list[int]:
        return [g.n for g in self.graphs]

    def adjacencies(self) -> list[np.ndarray]:
        return [g.dense() for g in self.graphs]


class _EmptyDataset(Dataset):
    """Dataset that may be empty (split with fraction 1.0, count-0 samples)."""

    def __post_init__(self):
        pass


def split(dataset: Dataset, train_fraction: float = 0.8, seed: int = 0):
    """Deterministic shuffled split into (train, test)."""
    if not 0.0 < train_fraction <= 1.0:
        raise DataError(f"train fraction must be in (0, 1], got {train_fraction}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(dataset.graphs))
    n_train = int(round(train_fraction * len(order)))
    meta = dict(dataset.metadata, split_seed=seed, train_fraction=train_fraction)
    train = Dataset(
        f"{dataset.name}-train", [dataset.graphs[i] for i in order[:n_train]], dict(meta, split="train")
    )
    test_graphs = [dataset.graphs[i] for i in order[n_train:]]
    cls = Dataset if test_graphs else _EmptyDataset
    return train, cls(f"{dataset.name}-test", test_graphs, dict(meta, split="test"))


def save_graphs(dataset: Dataset, path):
    """Write the versioned JSON container."""
    doc = {
        "format_version": GRAPH_FORMAT_VERSION,
        "name": dataset.name,
        "graphs": [{"n": g.n, "edges": [[u, v] for u, v in g.edges()]} for g in dataset.graphs],
        "metadata": dataset.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"), sort_keys=True)
        fh.write("\n")


def load_graphs(path) -> Dataset:
    """Read and validate a graph container file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise FormatError(f"graph file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise FormatError(f"graph file {path} is not valid JSON: {err}") from None
    version = doc.get("format_version")
    if version != GRAPH_FORMAT_VERSION:
        raise FormatError(
            f"graph file {path} has format_version {version!r}, expected {GRAPH_FORMAT_VERSION}"
        )
    try:
        graphs = [GraphSample.from_edges(g["n"], g["edges"]) for g in doc["graphs"]]
    except (KeyError, TypeError) as err:
        raise FormatError(f"graph file {path} is malformed: {err}") from None
    cls = Dataset if graphs else _EmptyDataset
    return cls(doc.get("name", "unnamed"), graphs, doc.get("metadata", {}))
