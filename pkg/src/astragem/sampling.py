"""Graph generation from a trained energy model.

Node counts are drawn from the empirical size distribution of the training
set; adjacency coordinates start Uniform(0,1) and follow overdamped Langevin
dynamics on the energy

    u <- u + (eta_t / 2) * dE/du + sqrt(eta_t) * xi,   xi ~ N(0, I),

with a geometric step-size schedule, mirrored to a full matrix and clamped
to [0,1] after every step (projected dynamics: the data support is {0,1}).
The final continuous matrix is thresholded into a binary graph.

Chains are independent: each sample owns a seed spawned from the master
seed, so results are identical however chains are grouped or parallelized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from astragem import autodiff as ad
from astragem import nets, triangle
from astragem.data.graphs import GraphSample
from astragem.errors import DataError, NonFiniteError, SamplingError


@dataclass(frozen=True)
class LangevinConfig:
    steps: int = 1000
    eta_start: float = 1e-2
    eta_end: float = 1e-4
    threshold: float = 0.5

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if not self.eta_start >= self.eta_end > 0:
            raise ValueError("need eta_start >= eta_end > 0")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be inside (0, 1)")

    def schedule(self) -> np.ndarray:
        """Geometric interpolation from eta_start to eta_end."""
        if self.steps == 0:
            return np.empty(0)
        if self.steps == 1:
            return np.array([self.eta_start])
        t = np.arange(self.steps) / (self.steps - 1)
        return self.eta_start * (self.eta_end / self.eta_start) ** t

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "eta_start": self.eta_start,
            "eta_end": self.eta_end,
            "threshold": self.threshold,
        }


class ModelEnergy:
    """Energy of upper-triangle coordinates under a trained network."""

    def __init__(self, params, config):
        self.params = params
        self.config = config

    def coord_energy_sum(self, z, n):
        theta = nets.as_leaves(self.params)
        return nets.energy(ad.mirror_upper(z, n), theta, self.config).sum()


class QuadraticToyEnergy:
    """E(u) = -|u - center|^2 / (2 tau): an exact Gaussian log-density.

    Calibration harness: Langevin samples must reproduce N(center, tau I)
    moments (up to boundary clamping, kept negligible by choosing tau small
    and the center away from {0, 1}).
    """

    def __init__(self, center, tau):
        self.center = np.asarray(center, dtype=np.float64)
        self.tau = float(tau)

    def coord_energy_sum(self, z, n):
        if z.shape[-1] != self.center.shape[-1]:
            raise DataError(
                f"toy energy center has dimension {self.center.shape[-1]}, got {z.shape[-1]}"
            )
        diff = z - ad.Tensor(self.center)
        return ad.scale(ad.reduce_sum(ad.square(diff)), -1.0 / (2.0 * self.tau))


def sample_node_count(sizes, rng) -> int:
    """Draw a node count from the empirical distribution of training sizes."""
    sizes = list(sizes)
    if not sizes:
        raise DataError("cannot sample a node count from an empty size list")
    return int(sizes[int(rng.integers(len(sizes)))])


def _run_chains(model, n, u0, noise, schedule):
    """Advance a stack of chains; u0 (B, d), noise (B, steps, d)."""
    u = u0
    for t, eta in enumerate(schedule):
        z = ad.Tensor(u)
        try:
            energy = model.coord_energy_sum(z, n)
            (g,) = ad.gradient(energy, [z], detach=True)
        except NonFiniteError as err:
            raise SamplingError(t, str(err)) from err
        u = u + 0.5 * eta * g.data + np.sqrt(eta) * noise[:, t, :]
        np.clip(u, 0.0, 1.0, out=u)
    return u


def langevin_sample(model, n, config: LangevinConfig, rng) -> np.ndarray:
    """One chain: returns the final continuous symmetric matrix (n, n)."""
    d = triangle.dim(n)
    u0 = rng.uniform(0.0, 1.0, (1, d))
    noise = rng.standard_normal((1, config.steps, d))
    u = _run_chains(model, n, u0, noise, config.schedule())
    return triangle.to_matrix(u[0], n)


def discretize(matrix, threshold: float) -> GraphSample:
    """Entries >= threshold become edges (ties round up); diagonal stays 0."""
    a = np.asarray(matrix, dtype=np.float64)
    out = (a >= threshold).astype(np.int8)
    np.fill_diagonal(out, 0)
    return GraphSample(out)


def generate(model, sizes, count, config: LangevinConfig, seed):
    """Sample ``count`` graphs; returns (graphs, per-sample metadata).

    Each sample gets its own seed spawned from the master seed by index;
    chains with equal node count run as one stacked batch, which draws
    exactly the same numbers as running them one by one.
    """
    master = np.random.SeedSequence(seed)
    children = master.spawn(count)
    rngs = [np.random.default_rng(c) for c in children]
    counts = [sample_node_count(sizes, rng) for rng in rngs]

    by_n = {}
    for idx, n in enumerate(counts):
        by_n.setdefault(n, []).append(idx)

    graphs: list[GraphSample | None] = [None] * count
    for n in sorted(by_n):
        members = by_n[n]
        d = triangle.dim(n)
        u0 = np.stack([rngs[i].uniform(0.0, 1.0, d) for i in members])
        noise = np.stack([rngs[i].standard_normal((config.steps, d)) for i in members])
        final = _run_chains(model, n, u0, noise, config.schedule())
        for row, i in enumerate(members):
            graphs[i] = discretize(triangle.to_matrix(final[row], n), config.threshold)

    metadata = [
        {"index": i, "n": counts[i], "seed_entropy": str(children[i].entropy), "seed_key": list(children[i].spawn_key)}
        for i in range(count)
    ]
    return graphs, metadata
