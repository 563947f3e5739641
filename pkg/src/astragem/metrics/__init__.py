"""Graph statistics and MMD evaluation."""

from astragem.metrics.mmd import KernelConfig, evaluate, mmd, wasserstein_1d
from astragem.metrics.orbits import N_ORBITS, orbit_counts
from astragem.metrics.stats import clustering_stat, degree_stat, orbit_stat

__all__ = [
    "KernelConfig",
    "N_ORBITS",
    "clustering_stat",
    "degree_stat",
    "evaluate",
    "mmd",
    "orbit_counts",
    "orbit_stat",
    "wasserstein_1d",
]
