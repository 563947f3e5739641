"""Permutation-invariant energy network and noise-conditioned critic family.

Both networks share the same message-passing backbone: a multi-channel GNN
with an edge update alongside the node update. Per message step t

    m_{c,v}   = A_c @ h            (one message per channel)
    h'        = NodeMLP(cat[m_1 .. m_C, (1+eps) h])
    A'_c      = sym(EdgeMLP_c(A_c[u,v], h'_u + h'_v, h'_u * h'_v))

The edge MLP consumes only u<->v symmetric combinations of the endpoint
features, so its raw output is already symmetric; the explicit symmetrize is
a safety projection. Initial node features embed the weighted degree through
a learned affine map, and the initial channels replicate the input matrix.

The energy readout sum-pools node features and mean-pools |A_c| at every
step (including step 0), concatenates across steps and feeds a small MLP:
a permutation-invariant scalar. The critic reuses the backbone with every
affine layer modulated per noise level as ``(W x + b) * alpha_i + beta_i``
(shared W, b; per-level alpha, beta) and reads out one value per edge,
giving a permutation-equivariant symmetric field with zero diagonal.

All forwards accept arbitrary leading batch axes on the adjacency input.
The critic additionally treats axis 0 as the noise-level axis so a whole
ladder of corruptions is evaluated in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from astragem import autodiff as ad
from astragem.errors import DataError, ShapeError

SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class EdpgnnConfig:
    """Architecture knobs shared by the energy network and the critic."""

    channels: int = 2
    msg_steps: int = 3
    node_dim: int = 16
    hidden: int = 32
    activation: str = "elu"
    eps_mode: str = "learnable"  # "learnable" | "fixed"
    eps_value: float = 0.0
    # "inverse-n" divides messages by the node count: a per-graph constant
    # the node MLP could absorb, but without it the raw sum aggregation
    # compounds a factor ~n per step and the default init explodes at n~20.
    # "none" keeps the literal update equation (used by the row-sum oracle).
    message_scale: str = "inverse-n"

    def __post_init__(self):
        if self.channels < 1 or self.msg_steps < 1 or self.node_dim < 1:
            raise ValueError("channels, msg_steps and node_dim must be >= 1")
        if self.activation not in ("elu", "tanh", "relu"):
            raise ValueError(f"unknown activation '{self.activation}'")
        if self.eps_mode not in ("learnable", "fixed"):
            raise ValueError(f"unknown eps_mode '{self.eps_mode}'")
        if self.message_scale not in ("inverse-n", "none"):
            raise ValueError(f"unknown message_scale '{self.message_scale}'")

    def readout_dim(self) -> int:
        return (self.msg_steps + 1) * (self.node_dim + self.channels)

    def modulated_layers(self) -> int:
        # embed + per step: two node-MLP affines and two affines per edge MLP
        return 1 + self.msg_steps * (2 + 2 * self.channels)

    def to_dict(self) -> dict:
        return {
            "channels": self.channels,
            "msg_steps": self.msg_steps,
            "node_dim": self.node_dim,
            "hidden": self.hidden,
            "activation": self.activation,
            "eps_mode": self.eps_mode,
            "eps_value": self.eps_value,
            "message_scale": self.message_scale,
        }


def check_symmetric(a: np.ndarray):
    gap = np.abs(a - np.swapaxes(a, -1, -2)).max() if a.size else 0.0
    if gap > SYMMETRY_TOL:
        raise DataError(f"adjacency input is not symmetric (max gap {gap:.3g})")


def as_leaves(params: dict[str, np.ndarray]) -> dict[str, ad.Tensor]:
    """Wrap a parameter dict as fresh graph leaves for one differentiation task."""
    return {name: ad.Tensor(arr) for name, arr in params.items()}


def _affine(x, p, name, modulate, layer_idx):
    y = ad.linear(x, p[f"{name}/w"], p[f"{name}/b"])
    if modulate is not None:
        y = modulate(layer_idx, y)
    return y


def _edge_affine(chans_in, h, h_prod, p, name, modulate, layer_idx, lead, n):
    """First affine of an edge MLP over per-edge features
    (channel values, h_u + h_v, h_u * h_v), algebraically unpacked.

    The stored (c + 2*d_h, wide) weight stacks rows
    [channel block | h-sum block | h-product block]. Slicing it lets the
    h_u + h_v block contract on n rows instead of n^2 and skips
    materializing the concatenated per-edge feature tensor: same map, same
    parameters, cheaper graph. The raw output can differ from its transpose
    by rounding only; the symmetrize after the MLP removes that.
    """
    dh = h.shape[-1]
    c = len(chans_in)
    w = p[f"{name}/w"]
    wide = w.shape[-1]
    w_s = ad.slice_axis(w, -2, c, c + dh)
    w_p = ad.slice_axis(w, -2, c + dh, c + 2 * dh)
    hw_b = ad.linear(h, w_s, p[f"{name}/b"])  # bias enters exactly once
    hw = ad.matmul(h, w_s)
    pre = hw_b.reshape(lead + (n, 1, wide)) + hw.reshape(lead + (1, n, wide))
    pre = ad.add(pre, ad.matmul(h_prod, w_p))
    for i, chan in enumerate(chans_in):
        w_a = ad.slice_axis(w, -2, i, i + 1).reshape((wide,))
        pre = ad.add(pre, ad.multiply(chan.reshape(lead + (n, n, 1)), w_a))
    if modulate is not None:
        pre = modulate(layer_idx, pre)
    return pre


def edpgnn_forward(a, params, config, modulate=None):
    """Run the message-passing backbone.

    ``a``: Tensor with trailing (n, n) axes, symmetric. Returns the list of
    (node_features, edge_channels) for every step t = 0..T, retained for the
    readouts. ``modulate`` is an optional per-affine hook (the critic's noise
    conditioning); affine layers are numbered in execution order.
    """
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ShapeError(f"adjacency must have square trailing axes, got {a.shape}")
    check_symmetric(a.data)
    n = a.shape[-1]
    lead = a.shape[:-2]
    act = ad._ACTIVATIONS[config.activation]
    c_ch = config.channels
    dh = config.node_dim

    # Weighted degree scaled to O(1); the constant is absorbable into the
    # embed affine, it only conditions the initialization.
    deg = ad.scale(a.sum(axis=-1, keepdims=True), 1.0 / max(n - 1, 1))
    h = _affine(deg, params, "embed", modulate, 0)
    chans = [a] * c_ch
    layer = 1

    retained = [(h, chans)]
    for t in range(config.msg_steps):
        msgs = [ad.matmul(chan, h) for chan in chans]
        if config.message_scale == "inverse-n":
            msgs = [ad.scale(m, 1.0 / n) for m in msgs]
        if config.eps_mode == "learnable":
            eps = params[f"step{t}/eps"]
            self_term = h * (eps + 1.0)
        else:
            self_term = ad.scale(h, 1.0 + config.eps_value)
        node_in = ad.concat(msgs + [self_term], axis=-1)
        hidden = act(_affine(node_in, params, f"step{t}/node/1", modulate, layer))
        h = _affine(hidden, params, f"step{t}/node/2", modulate, layer + 1)
        layer += 2

        left = h.reshape(lead + (n, 1, dh))
        right = h.reshape(lead + (1, n, dh))
        h_prod = left * right
        new_chans = []
        for c in range(c_ch):
            pre = _edge_affine(
                [chans[c]], h, h_prod, params, f"step{t}/edge{c}/1", modulate, layer, lead, n
            )
            e_out = _affine(act(pre), params, f"step{t}/edge{c}/2", modulate, layer + 1)
            layer += 2
            new_chans.append(ad.symmetrize(e_out.reshape(lead + (n, n))))
        chans = new_chans
        retained.append((h, chans))
    return retained


def energy(a, params, config):
    """Permutation-invariant energy of adjacency ``a``.

    For a plain (n, n) input the result is a scalar tensor; leading batch
    axes are carried through (one energy per batch entry). Differentiable in
    both the input and the parameters.
    """
    retained = edpgnn_forward(a, params, config)
    lead = a.shape[:-2]
    feats = []
    for h_t, chans in retained:
        feats.append(h_t.sum(axis=-2))  # (..., d_h) node sum-pool
        for chan in chans:
            feats.append(ad.absolute(chan).mean(axis=(-2, -1)).reshape(lead + (1,)))
    x = ad.concat(feats, axis=-1)
    x = x.reshape(lead + (1, config.readout_dim()))
    hidden = ad._ACTIVATIONS[config.activation](_affine(x, params, "readout/1", None, 0))
    out = _affine(hidden, params, "readout/2", None, 0)
    return out.reshape(lead)


def _modulator(params, level_lo, level_hi):
    alpha = params["modulation/alpha"]
    beta = params["modulation/beta"]
    k_used = level_hi - level_lo

    def modulate(layer_idx, y):
        a_j = ad.slice_axis(
            ad.slice_axis(alpha, -2, layer_idx, layer_idx + 1), -1, level_lo, level_hi
        ).reshape((k_used,))
        b_j = ad.slice_axis(
            ad.slice_axis(beta, -2, layer_idx, layer_idx + 1), -1, level_lo, level_hi
        ).reshape((k_used,))
        return ad.level_scale_shift(y, a_j, b_j)

    return modulate


def critic_matrix(a, params, config, levels):
    """Critic field as a symmetric matrix, evaluated for a range of noise levels.

    ``a``: Tensor of shape (k, ..., n, n) where axis 0 enumerates the noise
    levels ``levels = (lo, hi)`` with ``hi - lo == k`` (a contiguous slice of
    the ladder). Every backbone affine is modulated by that level's
    (alpha, beta); the per-edge readout is unmodulated so zeroing it makes
    the critic vanish identically at all levels.
    """
    lo, hi = levels
    if a.ndim < 3:
        raise ShapeError(f"critic input needs a leading level axis, got {a.shape}")
    if hi - lo != a.shape[0]:
        raise ShapeError(f"level axis {a.shape[0]} != requested range [{lo},{hi})")
    k_total = params["modulation/alpha"].shape[-1]
    if not 0 <= lo < hi <= k_total:
        raise ShapeError(f"noise-level range [{lo},{hi}) outside ladder of size {k_total}")

    retained = edpgnn_forward(a, params, config, modulate=_modulator(params, lo, hi))
    h_t, chans = retained[-1]
    n = a.shape[-1]
    lead = a.shape[:-2]
    dh = config.node_dim

    left = h_t.reshape(lead + (n, 1, dh))
    right = h_t.reshape(lead + (1, n, dh))
    pre = _edge_affine(chans, h_t, left * right, params, "readout/1", None, 0, lead, n)
    e_out = _affine(ad._ACTIVATIONS[config.activation](pre), params, "readout/2", None, 0)
    return ad.symmetrize(e_out.reshape(lead + (n, n)))


def critic(a, level, params, config):
    """Single-graph, single-level critic: (n, n) in, (n, n) out.

    Output is exactly symmetric with exactly zero diagonal (the field lives
    in upper-triangle coordinates; the full matrix mirrors them).
    """
    n = a.shape[-1]
    field = critic_matrix(a.reshape((1,) + a.shape), params, config, (level, level + 1))
    u = ad.take_upper(field)
    return ad.mirror_upper(u, n).reshape((n, n))


# ---------------------------------------------------------------------------
# initialization


def _glorot(rng, fan_in, fan_out, shape=None):
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=shape if shape is not None else (fan_in, fan_out))


def _backbone_params(rng, config):
    c_ch, dh, hid = config.channels, config.node_dim, config.hidden
    p = {"embed/w": _glorot(rng, 1, dh), "embed/b": np.zeros(dh)}
    for t in range(config.msg_steps):
        p[f"step{t}/node/1/w"] = _glorot(rng, (c_ch + 1) * dh, hid)
        p[f"step{t}/node/1/b"] = np.zeros(hid)
        p[f"step{t}/node/2/w"] = _glorot(rng, hid, dh)
        p[f"step{t}/node/2/b"] = np.zeros(dh)
        for c in range(c_ch):
            p[f"step{t}/edge{c}/1/w"] = _glorot(rng, 2 * dh + 1, hid)
            p[f"step{t}/edge{c}/1/b"] = np.zeros(hid)
            p[f"step{t}/edge{c}/2/w"] = _glorot(rng, hid, 1)
            p[f"step{t}/edge{c}/2/b"] = np.zeros(1)
        if config.eps_mode == "learnable":
            p[f"step{t}/eps"] = np.zeros(())
    return p


def init_energy_params(config, seed):
    """Energy-network parameters; deterministic in the seed."""
    rng = np.random.default_rng(seed)
    p = _backbone_params(rng, config)
    f = config.readout_dim()
    p["readout/1/w"] = _glorot(rng, f, config.hidden)
    p["readout/1/b"] = np.zeros(config.hidden)
    p["readout/2/w"] = _glorot(rng, config.hidden, 1)
    p["readout/2/b"] = np.zeros(1)
    return p


def init_critic_params(config, n_levels, seed):
    """Critic parameters: shared backbone, per-level modulation, edge readout.

    alpha starts at 1 and beta at 0, so the critic is initially identical
    across noise levels.
    """
    if n_levels < 1:
        raise ValueError("critic needs at least one noise level")
    rng = np.random.default_rng(seed)
    p = _backbone_params(rng, config)
    f = config.channels + 2 * config.node_dim
    p["readout/1/w"] = _glorot(rng, f, config.hidden)
    p["readout/1/b"] = np.zeros(config.hidden)
    p["readout/2/w"] = _glorot(rng, config.hidden, 1)
    p["readout/2/b"] = np.zeros(1)
    p["modulation/alpha"] = np.ones((config.modulated_layers(), n_levels))
    p["modulation/beta"] = np.zeros((config.modulated_layers(), n_levels))
    return p


def validate_params(params: dict[str, np.ndarray]):
    for name, arr in params.items():
        if not np.isfinite(arr).all():
            raise DataError(f"parameter '{name}' contains non-finite values")
