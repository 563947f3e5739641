"""Edge-list ingestion and ego-network extraction.

The ingestion path expects one edge per line, whitespace-separated string
node ids. Self-loops and duplicate edges are dropped, and ids are mapped to
dense integers in sorted order so extraction is independent of line order in
the source file. The real citation network is user-supplied; a synthetic
preferential-attachment stand-in ships for exercising the pipeline.
"""

from __future__ import annotations

import numpy as np

from astragem.data.graphs import Dataset, GraphSample
from astragem.errors import DataError


class CitationGraph:
    """An undirected simple graph over string node ids."""

    def __init__(self, node_ids: list[str], edges: set[tuple[int, int]]):
        self.node_ids = node_ids
        self.adj = [set() for _ in node_ids]
        for u, v in edges:
            self.adj[u].add(v)
            self.adj[v].add(u)

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def num_edges(self) -> int:
        return sum(len(nb) for nb in self.adj) // 2

    def ego(self, center: int) -> GraphSample:
        """Radius-1 ego network: center, neighbours, induced edges."""
        nodes = sorted({center} | self.adj[center])
        index = {v: i for i, v in enumerate(nodes)}
        a = np.zeros((len(nodes), len(nodes)), dtype=np.int8)
        for v in nodes:
            for w in self.adj[v]:
                if w in index:
                    a[index[v], index[w]] = 1
        return GraphSample(a)


def ingest_edge_list(path) -> CitationGraph:
    """Parse a whitespace-separated edge-list file into a simple graph."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as err:
        raise DataError(f"cannot read edge list {path}: {err}") from None
    raw_edges = []
    ids = set()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected two node ids, got {len(parts)}")
        u, v = parts
        if u == v:
            continue  # self-loop
        ids.update((u, v))
        raw_edges.append((u, v))
    if not raw_edges:
        raise DataError(f"{path}: no edges found")
    node_ids = sorted(ids)
    index = {v: i for i, v in enumerate(node_ids)}
    edges = {tuple(sorted((index[u], index[v]))) for u, v in raw_edges}
    return CitationGraph(node_ids, edges)


def extract_ego_small(
    graph: CitationGraph,
    count: int,
    seed: int,
    min_nodes: int = 4,
    max_nodes: int = 18,
) -> Dataset:
    """Radius-1 ego networks with size inside [min_nodes, max_nodes].

    Centers are visited in a seeded shuffled order without replacement;
    if fewer than ``count`` qualifying egos exist the error reports how many
    were found.
    """
    if count < 1:
        raise DataError("count must be >= 1")
    rng = np.random.default_rng(seed)
    order = rng.permutation(graph.n)
    graphs = []
    for center in order:
        size = len(graph.adj[center]) + 1
        if min_nodes <= size <= max_nodes:
            graphs.append(graph.ego(int(center)))
            if len(graphs) == count:
                break
    if len(graphs) < count:
        raise DataError(
            f"only {len(graphs)} qualifying ego networks exist, {count} requested"
        )
    meta = {
        "generator": "ego-small",
        "seed": seed,
        "min_nodes": min_nodes,
        "max_nodes": max_nodes,
        "source_nodes": graph.n,
        "source_edges": graph.num_edges,
    }
    return Dataset("ego-small", graphs, meta)


def synthetic_citation_graph(n_nodes: int = 600, out_degree: int = 2, seed: int = 0) -> CitationGraph:
    """Preferential-attachment stand-in for a real citation network."""
    if n_nodes < out_degree + 1:
        raise DataError("need more nodes than the attachment degree")
    rng = np.random.default_rng(seed)
    edges = set()
    repeated = list(range(out_degree))
    for v in range(out_degree, n_nodes):
        chosen = set()
        while len(chosen) < out_degree:
            chosen.add(repeated[int(rng.integers(len(repeated)))])
        for w in chosen:
            edges.add((min(v, w), max(v, w)))
            repeated.extend((v, w))
    node_ids = [f"paper{i:04d}" for i in range(n_nodes)]
    return CitationGraph(node_ids, edges)


def write_edge_list(graph: CitationGraph, path):
    """Write the edge-list format consumed by :func:`ingest_edge_list`."""
    with open(path, "w", encoding="utf-8") as fh:
        for u in range(graph.n):
            for v in sorted(graph.adj[u]):
                if u < v:
                    fh.write(f"{graph.node_ids[u]}\t{graph.node_ids[v]}\n")
