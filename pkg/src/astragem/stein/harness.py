"""Point-cloud instantiation of the training loop with tiny MLPs.

Same duck-typed interface as :class:`~astragem.stein.training.GraphProblem`
but over flat points in R^d with a tanh-MLP energy and a modulated-MLP
critic. Used to sanity-check the adversarial machinery on distributions with
analytically known scores (a 1-D Gaussian fit should drive the learned score
at the data mean to zero).
"""

from __future__ import annotations

import numpy as np

from astragem import autodiff as ad
from astragem.errors import DataError
from astragem.stein.noise import NoiseLadder, perturb_coords
from astragem.stein.training import Bucket


class GaussianHarness:
    """Train an MLP energy on a cloud of points in R^d."""

    def __init__(self, points, ladder: NoiseLadder, hidden=16):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim == 1:
            points = points[:, None]
        if points.shape[0] == 0:
            raise DataError("harness dataset is empty")
        self.points = points
        self.dim = points.shape[1]
        self.hidden = hidden
        self.ladder = ladder

    def __len__(self):
        return len(self.points)

    def _mlp_params(self, rng, out_dim):
        s1 = np.sqrt(6.0 / (self.dim + self.hidden))
        s2 = np.sqrt(6.0 / (self.hidden + out_dim))
        return {
            "w1": rng.uniform(-s1, s1, (self.dim, self.hidden)),
            "b1": np.zeros(self.hidden),
            "w2": rng.uniform(-s2, s2, (self.hidden, out_dim)),
            "b2": np.zeros(out_dim),
        }

    def init_energy_params(self, seed):
        return self._mlp_params(np.random.default_rng(seed), 1)

    def init_critic_params(self, seed):
        p = self._mlp_params(np.random.default_rng(seed), self.dim)
        p["alpha"] = np.ones((1, len(self.ladder)))
        p["beta"] = np.zeros((1, len(self.ladder)))
        return p

    def draw_buckets(self, rng, batch_size, grouping="mixed"):
        m = len(self.points)
        idx = rng.choice(m, size=min(batch_size, m), replace=False)
        clean = self.points[np.sort(idx)]
        return [Bucket(0, clean, perturb_coords(clean, self.ladder.as_array(), rng))]

    def energy_sum(self, theta, key, z):
        h = ad.tanh(ad.linear(z, theta["w1"], theta["b1"]))
        return ad.linear(h, theta["w2"], theta["b2"]).sum()

    def energy_at(self, theta_np, points):
        """Energy values at given points (plain arrays in, array out)."""
        from astragem.nets import as_leaves

        theta = as_leaves(theta_np)
        z = ad.tensor(np.atleast_2d(np.asarray(points, dtype=np.float64)))
        h = ad.tanh(ad.linear(z, theta["w1"], theta["b1"]))
        return ad.linear(h, theta["w2"], theta["b2"]).data[:, 0]

    def score_at(self, theta_np, points):
        """Learned score d(energy)/dz at given points."""
        from astragem.nets import as_leaves

        theta = as_leaves(theta_np)
        z = ad.tensor(np.atleast_2d(np.asarray(points, dtype=np.float64)))
        e = self.energy_sum(theta, 0, z)
        (g,) = ad.gradient(e, [z])
        return g.data

    def critic_field(self, psi, key, z):
        k = len(self.ladder)
        pre = ad.linear(z, psi["w1"], psi["b1"])
        bshape = (k,) + (1,) * (pre.ndim - 1)
        a0 = ad.slice_axis(psi["alpha"], -2, 0, 1).reshape(bshape)
        b0 = ad.slice_axis(psi["beta"], -2, 0, 1).reshape(bshape)
        h = ad.tanh(pre * a0 + b0)
        return ad.linear(h, psi["w2"], psi["b2"])
