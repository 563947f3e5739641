"""Per-graph statistic features: degree, clustering, orbit."""

from __future__ import annotations

import numpy as np

from astragem.metrics.orbits import orbit_counts


def degree_stat(graph, max_degree: int) -> np.ndarray:
    """Normalized degree histogram over bins 0..max_degree."""
    a = graph.adjacency
    degrees = np.asarray(a.sum(axis=1), dtype=np.int64)
    hist = np.bincount(degrees, minlength=max_degree + 1).astype(np.float64)
    return hist / hist.sum()


def clustering_stat(graph, bins: int = 100) -> np.ndarray:
    """Normalized histogram of local clustering coefficients on [0, 1].

    coefficient(v) = triangles through v / C(deg(v), 2), defined as 0 for
    degree < 2. The last bin is closed, so a coefficient of exactly 1 lands
    in it.
    """
    a = np.asarray(graph.adjacency, dtype=np.float64)
    deg = a.sum(axis=1)
    tri = np.diag(a @ a @ a) / 2.0
    denom = deg * (deg - 1) / 2.0
    coeff = np.where(denom > 0, tri / np.maximum(denom, 1.0), 0.0)
    hist, _ = np.histogram(coeff, bins=bins, range=(0.0, 1.0))
    return hist.astype(np.float64) / len(coeff)


def orbit_stat(graph) -> np.ndarray:
    """Node-mean graphlet orbit count vector (15 dimensions)."""
    counts = orbit_counts(graph.adjacency)
    return counts.mean(axis=0)
