"""The adversarial training loop.

Each outer iteration draws a generator batch, corrupts it at every ladder
level, runs ``critic_steps`` ascent steps of the critic objective on fresh
batches, then one descent step of the energy parameters:

    critic:     max_psi   sum_i ( S(q_i, E_theta, C_i) - lambda_K |S(q_i, KDE_i, C_i)| ) - lambda_L2 |psi|^2
    generator:  min_theta sum_i   S(q_i, E_theta, C_i)

where S is the batch-mean Stein term and the KDE bandwidth at level i equals
sigma_i with the current batch's clean graphs (same node count) as reference
set. Minibatches are bucketed by node count so adjacency tensors stack; the
per-level expectation sums bucket contributions and divides by the full
batch size. All noise levels are evaluated in one stacked network pass.

The loop is deterministic given the seed: every random draw (batches, noise,
Hutchinson probes) comes from one generator in a fixed order, and its state
is captured in :class:`TrainState` so an interrupted run resumes bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from astragem import _backend as kern
from astragem import autodiff as ad
from astragem import nets, triangle
from astragem.errors import DataError, NonFiniteError, TrainingAborted
from astragem.stein.kde import kde_score
from astragem.stein.noise import NoiseLadder, perturb_coords


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 2000
    batch_size: int = 16
    critic_steps: int = 5
    lambda_kde: float = 0.1
    lambda_l2: float = 1e-3
    critic_lr: float = 1e-3
    generator_lr: float = 1e-4
    optimizer: str = "adam"
    trace_mode: str = "hutchinson"  # "exact" | "hutchinson"
    trace_probes: int = 2
    # "same-size" draws each minibatch from one node-count class (class picked
    # by empirical frequency): identical expectation to "mixed" bucketing but
    # one stacked tensor per step instead of many small ones.
    batch_grouping: str = "same-size"
    seed: int = 0
    checkpoint_every: int = 200

    def __post_init__(self):
        if self.iterations < 0 or self.critic_steps < 0:
            raise ValueError("iterations and critic_steps must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lambda_kde < 0 or self.lambda_l2 < 0:
            raise ValueError("regularization weights must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer '{self.optimizer}'")
        if self.trace_mode not in ("exact", "hutchinson"):
            raise ValueError(f"unknown trace mode '{self.trace_mode}'")
        if self.batch_grouping not in ("same-size", "mixed"):
            raise ValueError(f"unknown batch grouping '{self.batch_grouping}'")

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "batch_size": self.batch_size,
            "critic_steps": self.critic_steps,
            "lambda_kde": self.lambda_kde,
            "lambda_l2": self.lambda_l2,
            "critic_lr": self.critic_lr,
            "generator_lr": self.generator_lr,
            "optimizer": self.optimizer,
            "trace_mode": self.trace_mode,
            "trace_probes": self.trace_probes,
            "batch_grouping": self.batch_grouping,
            "seed": self.seed,
            "checkpoint_every": self.checkpoint_every,
        }


class Adam:
    """Functional Adam: ``step`` returns a fresh parameter snapshot."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8, maximize=False):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.maximize = maximize
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        self.t += 1
        out = {}
        for name, p in params.items():
            g = grads[name] if self.maximize else -grads[name]
            p = p.copy()
            kern.adam_update(
                p, g, self.m[name], self.v[name], self.t, self.lr, self.beta1, self.beta2, self.eps
            )
            out[name] = p
        return out

    def state_dict(self):
        return {
            "t": self.t,
            "m": {k: v.copy() for k, v in self.m.items()},
            "v": {k: v.copy() for k, v in self.v.items()},
        }

    def load_state(self, state):
        self.t = int(state["t"])
        self.m = {k: np.asarray(v, dtype=np.float64) for k, v in state["m"].items()}
        self.v = {k: np.asarray(v, dtype=np.float64) for k, v in state["v"].items()}


class Sgd:
    """Plain gradient steps, same interface as :class:`Adam`."""

    def __init__(self, params, lr, maximize=False):
        self.lr = lr
        self.maximize = maximize
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        sign = 1.0 if self.maximize else -1.0
        return {k: p + sign * self.lr * grads[k] for k, p in params.items()}

    def state_dict(self):
        return {"t": self.t, "m": {}, "v": {}}

    def load_state(self, state):
        self.t = int(state["t"])


def make_optimizer(kind, params, lr, maximize):
    if kind == "adam":
        return Adam(params, lr, maximize=maximize)
    return Sgd(params, lr, maximize=maximize)


@dataclass
class Bucket:
    """One stack of same-dimension samples from a minibatch."""

    key: int  # node count for graphs
    clean: np.ndarray  # (B, d) clean coordinates
    noisy: np.ndarray  # (k, B, d) corrupted at every ladder level


class GraphProblem:
    """Adapts a graph dataset plus the two networks to the coordinate loop."""

    def __init__(self, adjacencies, net_config, ladder: NoiseLadder):
        if not adjacencies:
            raise DataError("training dataset is empty")
        self.net_config = net_config
        self.ladder = ladder
        self.coords = [triangle.upper_coords(np.asarray(a, dtype=np.float64)) for a in adjacencies]
        self.sizes = [a.shape[-1] for a in adjacencies]
        self._by_size = {}
        for i, n in enumerate(self.sizes):
            self._by_size.setdefault(n, []).append(i)
        self._size_classes = sorted(self._by_size)
        self._size_weights = np.array(
            [len(self._by_size[n]) for n in self._size_classes], dtype=np.float64
        )
        self._size_weights /= self._size_weights.sum()

    def __len__(self):
        return len(self.coords)

    def init_energy_params(self, seed):
        return nets.init_energy_params(self.net_config, seed)

    def init_critic_params(self, seed):
        return nets.init_critic_params(self.net_config, len(self.ladder), seed)

    def draw_buckets(self, rng, batch_size, grouping="mixed"):
        """Sample a minibatch as node-count buckets of stacked coordinates.

        "mixed" draws graphs uniformly and buckets them by size; "same-size"
        draws a size class by empirical frequency, then graphs within it —
        every graph is equally likely either way, but the batch stacks into
        a single tensor.
        """
        sigmas = self.ladder.as_array()
        if grouping == "same-size":
            n = self._size_classes[
                rng.choice(len(self._size_classes), p=self._size_weights)
            ]
            members = self._by_size[n]
            take = min(batch_size, len(members))
            chosen = rng.choice(len(members), size=take, replace=False)
            clean = np.stack([self.coords[members[i]] for i in np.sort(chosen)])
            return [Bucket(n, clean, perturb_coords(clean, sigmas, rng))]
        m = len(self.coords)
        idx = rng.choice(m, size=min(batch_size, m), replace=False)
        groups = {}
        for i in idx:
            groups.setdefault(self.sizes[i], []).append(i)
        buckets = []
        for n in sorted(groups):
            clean = np.stack([self.coords[i] for i in groups[n]])
            buckets.append(Bucket(n, clean, perturb_coords(clean, sigmas, rng)))
        return buckets

    def energy_sum(self, theta, key, z):
        mats = ad.mirror_upper(z, key)
        return nets.energy(mats, theta, self.net_config).sum()

    def critic_field(self, psi, key, z):
        mats = ad.mirror_upper(z, key)
        out = nets.critic_matrix(mats, psi, self.net_config, (0, len(self.ladder)))
        return ad.take_upper(out)


def _stein_level_sums(problem, theta, psi, buckets, config, rng, with_kde):
    """Per-level sums of the Stein term over every bucket of a minibatch.

    Returns (stein_sums, kde_sums, count): (k,)-shaped tensors holding
    sum_b [score^T f + tr df] per noise level, and the batch size summed
    across buckets. ``kde_sums`` is None unless requested.
    """
    sigmas = problem.ladder.as_array()
    k = len(sigmas)
    se_total = None
    sk_total = None
    count = 0
    for bucket in buckets:
        z = ad.Tensor(bucket.noisy)
        count += bucket.clean.shape[0]

        e_sum = problem.energy_sum(theta, bucket.key, z)
        (score,) = ad.gradient(e_sum, [z])
        fz = problem.critic_field(psi, bucket.key, z)

        dots = ad.reduce_sum(ad.multiply(score, fz), axis=-1)  # (k, B)
        traces = ad.batch_trace(
            fz, z, mode=config.trace_mode, n_probes=config.trace_probes, rng=rng
        )
        se = ad.reduce_sum(ad.add(dots, traces), axis=-1)  # (k,)
        se_total = se if se_total is None else ad.add(se_total, se)

        if with_kde and bucket.clean.shape[0] > 0:
            kscore = np.stack(
                [
                    kde_score(bucket.noisy[i], bucket.clean, sigmas[i])
                    for i in range(k)
                ]
            )
            kdots = ad.reduce_sum(ad.multiply(ad.Tensor(kscore), fz), axis=-1)
            sk = ad.reduce_sum(ad.add(kdots, traces), axis=-1)
            sk_total = sk if sk_total is None else ad.add(sk_total, sk)
    return se_total, sk_total, count


def critic_step(problem, theta_np, psi_np, buckets, config, rng, optimizer):
    """One ascent step of the critic objective; returns the new psi."""
    theta = nets.as_leaves(theta_np)
    psi = nets.as_leaves(psi_np)
    se, sk, count = _stein_level_sums(problem, theta, psi, buckets, config, rng, with_kde=True)
    objective = ad.scale(ad.reduce_sum(se), 1.0 / count)
    if sk is not None and config.lambda_kde > 0:
        # |S_KDE| via its subgradient: sign(S) held constant for the step.
        signs = np.sign(sk.data) / count
        penalty = ad.reduce_sum(ad.multiply(sk, ad.Tensor(signs)))
        objective = ad.subtract(objective, ad.scale(penalty, config.lambda_kde))
    if config.lambda_l2 > 0:
        l2 = None
        for t in psi.values():
            s = ad.reduce_sum(ad.square(t))
            l2 = s if l2 is None else ad.add(l2, s)
        objective = ad.subtract(objective, ad.scale(l2, config.lambda_l2))
    names = list(psi_np)
    grads = ad.gradient(objective, [psi[name] for name in names], detach=True)
    return optimizer.step(psi_np, {n: g.data for n, g in zip(names, grads)})


def generator_step(problem, theta_np, psi_np, buckets, config, rng, optimizer):
    """One descent step of sum_i S_i for the energy parameters.

    Returns (new theta, per-level discrepancy values). The trace term is
    evaluated as part of S but carries no theta-gradient.
    """
    theta = nets.as_leaves(theta_np)
    psi = nets.as_leaves(psi_np)
    se, _, count = _stein_level_sums(problem, theta, psi, buckets, config, rng, with_kde=False)
    per_level = se.data / count
    objective = ad.scale(ad.reduce_sum(se), 1.0 / count)
    names = list(theta_np)
    grads = ad.gradient(objective, [theta[name] for name in names], detach=True)
    new_theta = optimizer.step(theta_np, {n: g.data for n, g in zip(names, grads)})
    return new_theta, per_level


@dataclass
class TrainState:
    """Everything needed to continue a run bit-exactly."""

    theta: dict
    psi: dict
    opt_theta: object
    opt_psi: object
    iteration: int
    rng: np.random.Generator

    rng_state: dict = field(default=None, repr=False)  # only used when thawing

    @classmethod
    def fresh(cls, problem, config):
        ss = np.random.SeedSequence(config.seed)
        s_theta, s_psi, s_loop = ss.spawn(3)
        theta = problem.init_energy_params(s_theta)
        psi = problem.init_critic_params(s_psi)
        return cls(
            theta=theta,
            psi=psi,
            opt_theta=make_optimizer(config.optimizer, theta, config.generator_lr, maximize=False),
            opt_psi=make_optimizer(config.optimizer, psi, config.critic_lr, maximize=True),
            iteration=0,
            rng=np.random.default_rng(s_loop),
        )


def _param_norm(params):
    return float(np.sqrt(sum(float(np.sum(v * v)) for v in params.values())))


def train(problem, config, log_fn=None, checkpoint_fn=None, state=None):
    """Run the full adversarial loop; returns (final TrainState, log records).

    ``log_fn`` receives one record per outer iteration. ``checkpoint_fn``
    receives the state every ``checkpoint_every`` iterations and at the end.
    A non-finite loss aborts with :class:`TrainingAborted`; previously
    written checkpoints are left in place.
    """
    if state is None:
        state = TrainState.fresh(problem, config)
    records = []
    it = state.iteration
    try:
        while it < config.iterations:
            gen_buckets = problem.draw_buckets(
                state.rng, config.batch_size, config.batch_grouping
            )
            for _ in range(config.critic_steps):
                cr_buckets = problem.draw_buckets(
                    state.rng, config.batch_size, config.batch_grouping
                )
                state.psi = critic_step(
                    problem, state.theta, state.psi, cr_buckets, config, state.rng, state.opt_psi
                )
            state.theta, per_level = generator_step(
                problem, state.theta, state.psi, gen_buckets, config, state.rng, state.opt_theta
            )
            it += 1
            state.iteration = it
            record = {
                "iteration": it,
                "stein": {
                    f"{sigma:g}": float(val)
                    for sigma, val in zip(problem.ladder.sigmas, per_level)
                },
                "theta_norm": _param_norm(state.theta),
                "psi_norm": _param_norm(state.psi),
            }
            records.append(record)
            if log_fn is not None:
                log_fn(record)
            if checkpoint_fn is not None and (
                it % config.checkpoint_every == 0 or it == config.iterations
            ):
                checkpoint_fn(state)
    except NonFiniteError as err:
        raise TrainingAborted(it, str(err)) from err
    if checkpoint_fn is not None and config.iterations == 0:
        checkpoint_fn(state)
    return state, records
