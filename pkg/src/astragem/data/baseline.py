"""Density-matched random-graph baseline.

For every node count in the training set, the empirical edge density of the
training graphs with that size is estimated; baseline graphs draw a size
from the empirical size distribution and wire each pair independently with
that size's density. The weakest model that still matches first-order
statistics — the yardstick a trained energy model has to beat.
"""

from __future__ import annotations

import numpy as np

from astragem.data.graphs import Dataset, GraphSample
from astragem.errors import DataError


def per_size_density(dataset: Dataset) -> dict[int, float]:
    dens: dict[int, list[float]] = {}
    for g in dataset.graphs:
        pairs = g.n * (g.n - 1) / 2
        dens.setdefault(g.n, []).append(g.num_edges / pairs if pairs else 0.0)
    return {n: float(np.mean(v)) for n, v in dens.items()}


def density_matched_baseline(train: Dataset, count: int, seed: int) -> Dataset:
    """Erdos-Renyi graphs matching the training size and density profile."""
    if count < 1:
        raise DataError("count must be >= 1")
    rng = np.random.default_rng(seed)
    densities = per_size_density(train)
    sizes = train.sizes()
    graphs = []
    for _ in range(count):
        n = sizes[int(rng.integers(len(sizes)))]
        p = densities[n]
        upper = np.triu(rng.random((n, n)) < p, k=1).astype(np.int8)
        graphs.append(GraphSample(upper | upper.T))
    meta = {
        "generator": "er-baseline",
        "seed": seed,
        "source": train.name,
        "densities": {str(k): v for k, v in sorted(densities.items())},
    }
    return Dataset("er-baseline", graphs, meta)
