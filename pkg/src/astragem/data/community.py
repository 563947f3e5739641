"""Procedural two-community graphs.

Each graph draws its node count uniformly from [n_min, n_max], splits the
nodes into two halves (ceil/floor), wires each half independently with
i.i.d. Bernoulli(p_intra) edges, then adds ceil(inter_rate * n) distinct
cross edges uniformly at random.
"""

from __future__ import annotations

import math

import numpy as np

from astragem.data.graphs import Dataset, GraphSample
from astragem.errors import DataError


def gen_community_small(
    count: int,
    seed: int,
    n_min: int = 12,
    n_max: int = 20,
    p_intra: float = 0.7,
    inter_rate: float = 0.05,
) -> Dataset:
    """The two-community benchmark dataset; deterministic in the seed."""
    if count < 1:
        raise DataError("count must be >= 1")
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(count):
        n = int(rng.integers(n_min, n_max + 1))
        size_a = math.ceil(n / 2)
        a = np.zeros((n, n), dtype=np.int8)
        for lo, hi in ((0, size_a), (size_a, n)):
            block = rng.random((hi - lo, hi - lo)) < p_intra
            block = np.triu(block, k=1)
            a[lo:hi, lo:hi] = block | block.T
        cross = [(u, v) for u in range(size_a) for v in range(size_a, n)]
        n_cross = min(math.ceil(inter_rate * n), len(cross))
        for idx in rng.choice(len(cross), size=n_cross, replace=False):
            u, v = cross[idx]
            a[u, v] = 1
            a[v, u] = 1
        graphs.append(GraphSample(a))
    meta = {
        "generator": "community-small",
        "seed": seed,
        "n_min": n_min,
        "n_max": n_max,
        "p_intra": p_intra,
        "inter_rate": inter_rate,
    }
    return Dataset("community-small", graphs, meta)
