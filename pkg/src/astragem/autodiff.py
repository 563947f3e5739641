"""Dense float64 tensors with reverse-mode automatic differentiation.

The differentiation graph is implicit: every :class:`Tensor` keeps references
to its parents plus a monotonically increasing id, so parents always have
smaller ids and the graph is acyclic by construction. Backward rules are
expressed in terms of the same primitive ops they differentiate, which makes
the output of :func:`gradient` an ordinary graph node — it can be
differentiated again (the training objective needs d/dtheta of expressions
containing d/dz terms).

Cotangents may carry extra leading axes (``lead``), which lets
:func:`jacobian_trace` evaluate many directional derivatives of a vector
field in a single backward sweep instead of one sweep per coordinate.

Every value-producing op checks its output for NaN/Inf and raises
:class:`~astragem.errors.NonFiniteError` naming the op; pure data-movement
ops (reshape, slice, concat, ...) skip the check since they cannot create
non-finite values.
"""

from __future__ import annotations

import itertools
import weakref

import numpy as np

from astragem import _backend as kern
from astragem.errors import NonFiniteError, ShapeError

_ids = itertools.count()

_UPPER_IDX = {}


def _upper_indices(n):
    if n not in _UPPER_IDX:
        _UPPER_IDX[n] = np.triu_indices(n, k=1)
    return _UPPER_IDX[n]


class Tensor:
    """A float64 array plus its position in the differentiation graph.

    Leaves (constants, parameters, inputs) have no parents. Do not mutate
    ``data``; tensors are value-immutable once created.
    """

    __slots__ = ("data", "op", "parents", "vjp", "id", "__weakref__")

    def __init__(self, data, op=None, parents=(), vjp=None):
        self.data = data
        self.op = op
        self.parents = parents
        self.vjp = vjp
        self.id = next(_ids)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def numpy(self):
        return np.array(self.data)

    def detach(self):
        """A leaf tensor sharing this tensor's values."""
        return Tensor(self.data)

    # Arithmetic sugar; python scalars are promoted to constant leaves.
    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return subtract(self, _as_tensor(other))

    def __rsub__(self, other):
        return subtract(_as_tensor(other), self)

    def __mul__(self, other):
        return multiply(self, _as_tensor(other))

    def __rmul__(self, other):
        return multiply(_as_tensor(other), self)

    def __matmul__(self, other):
        return matmul(self, _as_tensor(other))

    def __neg__(self):
        return scale(self, -1.0)

    def sum(self, axis=None, keepdims=False):
        return reduce_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return reduce_mean(self, axis, keepdims)

    def reshape(self, shape):
        return reshape(self, shape)

    def transpose(self):
        return transpose(self)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op!r}, id={self.id})"


def tensor(values):
    """Create a leaf tensor from array-like values (must be finite)."""
    data = np.asarray(values, dtype=np.float64)
    if not kern.all_finite(data):
        raise NonFiniteError("non-finite values in tensor constructor")
    return Tensor(data)


def _as_tensor(x):
    if isinstance(x, Tensor):
        return x
    return tensor(x)


def _make(op, data, parents, vjp, check=True):
    if check and not kern.all_finite(data):
        raise NonFiniteError(f"op '{op}' produced non-finite values")
    return Tensor(data, op, parents, vjp)


def _shape_err(op, *shapes):
    listed = ", ".join(str(s) for s in shapes)
    return ShapeError(f"op '{op}': incompatible shapes {listed}")


def _norm_axes(axes, ndim, op):
    """Normalize axes to negative trailing indices (lead-axis safe)."""
    if axes is None:
        return tuple(range(-ndim, 0))
    if isinstance(axes, int):
        axes = (axes,)
    out = []
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise _shape_err(op, f"axis {ax} out of range for ndim {ndim}")
        out.append(ax - ndim if ax >= 0 else ax)
    return tuple(sorted(set(out)))


def _reduce_to(t, shape, lead):
    """Sum away broadcast axes so the trailing shape matches ``shape``.

    ``t`` has ``lead`` leading probe axes that are preserved untouched; only
    the remaining trailing axes are reduced against the target shape.
    """
    tlen = t.ndim - lead
    if tlen == len(shape) and t.shape[lead:] == shape:
        return t
    extra = tuple(range(-tlen, -len(shape))) if tlen > len(shape) else ()
    if extra:
        t = reduce_sum(t, extra, keepdims=False)
    keep = tuple(
        i - len(shape)
        for i in range(len(shape))
        if shape[i] == 1 and t.shape[t.ndim - len(shape) + i] != 1
    )
    if keep:
        t = reduce_sum(t, keep, keepdims=True)
    return t


# ---------------------------------------------------------------------------
# primitives


def _binary(op, a, b, fwd, da, db):
    try:
        data = fwd(a.data, b.data)
    except ValueError:
        raise _shape_err(op, a.shape, b.shape) from None

    def vjp(cot, lead, needs):
        ga = _reduce_to(da(cot), a.shape, lead) if needs[0] else None
        gb = _reduce_to(db(cot), b.shape, lead) if needs[1] else None
        return ga, gb

    return _make(op, data, (a, b), vjp)


def add(a, b):
    return _binary("add", a, b, np.add, lambda c: c, lambda c: c)


def subtract(a, b):
    return _binary("subtract", a, b, np.subtract, lambda c: c, lambda c: scale(c, -1.0))


def multiply(a, b):
    return _binary(
        "elementwise-multiply",
        a,
        b,
        np.multiply,
        lambda c: multiply(c, b),
        lambda c: multiply(c, a),
    )


def scale(a, c):
    """Multiply by a python float constant."""
    c = float(c)

    def vjp(cot, lead, needs):
        return (scale(cot, c),)

    return _make("scalar-scale", a.data * c, (a,), vjp)


def matmul(a, b):
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise _shape_err("matmul", a.shape, b.shape)
    try:
        data = np.matmul(a.data, b.data)
    except ValueError:
        raise _shape_err("matmul", a.shape, b.shape) from None

    def vjp(cot, lead, needs):
        ga = gb = None
        if needs[0]:
            ga = _reduce_to(matmul(cot, transpose(b)), a.shape, lead)
        if needs[1]:
            gb = _reduce_to(matmul(transpose(a), cot), b.shape, lead)
        return ga, gb

    return _make("matmul", data, (a, b), vjp)


def transpose(a):
    """Swap the last two axes."""
    if a.ndim < 2:
        raise _shape_err("transpose", a.shape)

    def vjp(cot, lead, needs):
        return (transpose(cot),)

    return _make("transpose", np.swapaxes(a.data, -1, -2), (a,), vjp, check=False)


def contract_last(a, b):
    """sum over all leading axes of outer(a[..., :], b[..., :]) -> (F, H).

    The weight-gradient contraction of :func:`linear`: collapses every
    leading axis into one big GEMM instead of a swarm of tiny batched ones.
    Leading axes broadcast (``b`` may carry extra probe axes).
    """
    if a.ndim < 1 or b.ndim < 1:
        raise _shape_err("contract-last", a.shape, b.shape)
    f, h = a.shape[-1], b.shape[-1]
    if a.shape[:-1] == b.shape[:-1]:
        data = np.matmul(
            a.data.reshape(-1, f).T, b.data.reshape(-1, h)
        )
    else:
        try:
            data = np.einsum("...f,...h->fh", a.data, b.data, optimize=True)
        except ValueError:
            raise _shape_err("contract-last", a.shape, b.shape) from None

    def vjp(cot, lead, needs):
        ga = gb = None
        if needs[0]:
            ga = _reduce_to(matmul(b, transpose(cot)), a.shape, lead)
        if needs[1]:
            gb = _reduce_to(matmul(a, cot), b.shape, lead)
        return ga, gb

    return _make("contract-last", data, (a, b), vjp)


def linear(x, w, b):
    """Fused affine map x @ w + b over the last axis (w: (F, H), b: (H,))."""
    if x.ndim < 2 or w.ndim != 2 or b.ndim != 1 or x.shape[-1] != w.shape[0]:
        raise _shape_err("linear", x.shape, w.shape, b.shape)
    if w.shape[1] != b.shape[0]:
        raise _shape_err("linear", w.shape, b.shape)
    data = np.matmul(x.data, w.data)
    data += b.data

    def vjp(cot, lead, needs):
        gx = matmul(cot, transpose(w)) if needs[0] else None
        gw = contract_last(x, cot) if needs[1] else None
        gb = _reduce_to(cot, b.shape, lead) if needs[2] else None
        return gx, gw, gb

    return _make("linear", data, (x, w, b), vjp)


def reshape(a, shape):
    shape = tuple(int(s) for s in shape)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise _shape_err("reshape", a.shape, shape) from None

    def vjp(cot, lead, needs):
        return (reshape(cot, cot.shape[:lead] + a.shape),)

    return _make("reshape", data, (a,), vjp, check=False)


def expand(a, shape):
    """Broadcast to a larger shape (trailing-axis semantics of numpy)."""
    shape = tuple(int(s) for s in shape)
    try:
        data = np.broadcast_to(a.data, shape)
    except ValueError:
        raise _shape_err("expand", a.shape, shape) from None

    def vjp(cot, lead, needs):
        return (_reduce_to(cot, a.shape, lead),)

    return _make("expand", data, (a,), vjp, check=False)


def reduce_sum(a, axis=None, keepdims=False):
    axes = _norm_axes(axis, a.ndim, "sum")
    data = np.sum(a.data, axis=axes if axes else None, keepdims=keepdims)

    def vjp(cot, lead, needs):
        g = cot
        if not keepdims:
            kshape = tuple(
                1 if i - a.ndim in axes else a.shape[i] for i in range(a.ndim)
            )
            g = reshape(g, g.shape[:lead] + kshape)
        return (expand(g, g.shape[:lead] + a.shape),)

    return _make("sum", data, (a,), vjp)


def reduce_mean(a, axis=None, keepdims=False):
    axes = _norm_axes(axis, a.ndim, "mean")
    count = 1
    for ax in axes:
        count *= a.shape[ax]
    return scale(reduce_sum(a, axes, keepdims), 1.0 / count)


def concat(tensors, axis):
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("op 'concat': empty input list")
    ndim = tensors[0].ndim
    (ax,) = _norm_axes(axis, ndim, "concat")
    try:
        data = np.concatenate([t.data for t in tensors], axis=ax)
    except ValueError:
        raise _shape_err("concat", *[t.shape for t in tensors]) from None
    splits = [t.shape[ax] for t in tensors]

    def vjp(cot, lead, needs):
        out = []
        lo = 0
        for need, width in zip(needs, splits):
            out.append(slice_axis(cot, ax, lo, lo + width) if need else None)
            lo += width
        return tuple(out)

    return _make("concat", data, tuple(tensors), vjp, check=False)


def slice_axis(a, axis, start, stop):
    """Slice [start:stop) along one (negatively indexed) trailing axis."""
    (ax,) = _norm_axes(axis, a.ndim, "slice")
    if not 0 <= start <= stop <= a.shape[ax]:
        raise _shape_err("slice", a.shape, f"[{start}:{stop}] on axis {ax}")
    idx = (Ellipsis, slice(start, stop)) + (slice(None),) * (-ax - 1)

    def vjp(cot, lead, needs):
        return (pad_axis(cot, ax, start, a.shape[ax]),)

    return _make("slice", a.data[idx], (a,), vjp, check=False)


def pad_axis(a, axis, start, size):
    """Embed into zeros of a larger axis; adjoint of :func:`slice_axis`."""
    (ax,) = _norm_axes(axis, a.ndim, "pad")
    width = a.shape[ax]
    out_shape = a.shape[:a.ndim + ax] + (size,) + a.shape[a.ndim + ax + 1 :]
    data = np.zeros(out_shape, dtype=np.float64)
    idx = (Ellipsis, slice(start, start + width)) + (slice(None),) * (-ax - 1)
    data[idx] = a.data

    def vjp(cot, lead, needs):
        return (slice_axis(cot, ax, start, start + width),)

    return _make("pad", data, (a,), vjp, check=False)


def square(a):
    def vjp(cot, lead, needs):
        return (scale(multiply(cot, a), 2.0),)

    return _make("square", np.square(a.data), (a,), vjp)


def exp(a):
    # Self-references from a node's vjp closure to the node itself must be
    # weak, or every graph containing the op needs the cyclic GC to free
    # (multi-GB training graphs then stall the process). The referent is
    # always alive when the vjp runs: the backward sweep holds the node.
    def vjp(cot, lead, needs):
        return (multiply(cot, out_ref()),)

    out = _make("exponent", np.exp(a.data), (a,), vjp)
    out_ref = weakref.ref(out)
    return out


def log(a):
    def vjp(cot, lead, needs):
        return (multiply(cot, reciprocal(a)),)

    with np.errstate(divide="ignore", invalid="ignore"):
        data = np.log(a.data)
    return _make("logarithm", data, (a,), vjp)


def reciprocal(a):
    def vjp(cot, lead, needs):
        return (scale(multiply(cot, square(out_ref())), -1.0),)

    with np.errstate(divide="ignore"):
        data = 1.0 / a.data
    out = _make("reciprocal", data, (a,), vjp)
    out_ref = weakref.ref(out)
    return out


def absolute(a):
    sign = Tensor(np.sign(a.data))

    def vjp(cot, lead, needs):
        return (multiply(cot, sign),)

    return _make("absolute", np.abs(a.data), (a,), vjp)


def elu_prime(a):
    """ELU derivative (1 for x > 0, exp(x) below) as a differentiable node.

    Its own backward uses elu''(x) = (x <= 0) * elu'(x), expressed through
    the saved output, so the chain stays differentiable to any order.
    """

    def vjp(cot, lead, needs):
        neg = Tensor((a.data <= 0.0).astype(np.float64))
        return (multiply(cot, multiply(neg, out_ref())),)

    out = _make("elu-prime", kern.elu_prime(a.data), (a,), vjp)
    out_ref = weakref.ref(out)
    return out


def elu(a):
    # The derivative factor node is cached: the same forward node is
    # usually differentiated several times per training step (score pass,
    # trace sweep, objective pass).
    memo = []

    def vjp(cot, lead, needs):
        if not memo:
            memo.append(elu_prime(a))
        return (multiply(cot, memo[0]),)

    return _make("activation(elu)", kern.elu(a.data), (a,), vjp)


def tanh(a):
    # No factor memo here: 1 - out^2 has the node itself in its parent
    # chain, and caching it on the vjp closure would recreate the reference
    # cycle the weakref avoids.
    def vjp(cot, lead, needs):
        one = Tensor(np.float64(1.0))
        return (multiply(cot, subtract(one, square(out_ref()))),)

    out = _make("activation(tanh)", np.tanh(a.data), (a,), vjp)
    out_ref = weakref.ref(out)
    return out


def relu(a):
    def vjp(cot, lead, needs):
        return (multiply(cot, Tensor((a.data > 0.0).astype(np.float64))),)

    return _make("activation(relu)", kern.relu(a.data), (a,), vjp)


_ACTIVATIONS = {"elu": elu, "tanh": tanh, "relu": relu}


def activation(kind, a):
    if kind not in _ACTIVATIONS:
        raise ValueError(f"unknown activation kind '{kind}'")
    return _ACTIVATIONS[kind](a)


def logsumexp(a, axis=None, keepdims=False):
    """log(sum(exp(a))) over trailing axes, stabilized by the detached max."""
    axes = _norm_axes(axis, a.ndim, "reduce-logsumexp")
    m = np.max(a.data, axis=axes, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)  # all -inf slices (empty mixtures)
    shifted = exp(subtract(a, Tensor(m)))
    s = log(reduce_sum(shifted, axes, keepdims=True))
    out = add(s, Tensor(m))
    if not keepdims:
        kept = tuple(a.shape[i] for i in range(a.ndim) if i - a.ndim not in axes)
        out = reshape(out, kept)
    return out


def level_scale_shift(y, alpha, beta):
    """Per-level affine modulation: y * alpha + beta with axis 0 of ``y``
    enumerating levels and ``alpha``/``beta`` of shape (k,). Fused forward;
    one kernel pass instead of a broadcast multiply plus add."""
    if y.ndim < 2 or alpha.ndim != 1 or beta.shape != alpha.shape or y.shape[0] != alpha.shape[0]:
        raise _shape_err("level-scale-shift", y.shape, alpha.shape, beta.shape)
    bshape = alpha.shape + (1,) * (y.ndim - 1)
    red_axes = tuple(range(-(y.ndim - 1), 0))

    def vjp(cot, lead, needs):
        gy = ga = gb = None
        if needs[0]:
            gy = multiply(cot, reshape(alpha, bshape))
        if needs[1]:
            ga = reduce_sum(multiply(cot, y), red_axes)
        if needs[2]:
            gb = reduce_sum(cot, red_axes)
        return gy, ga, gb

    return _make(
        "level-scale-shift",
        kern.level_scale_shift(y.data, alpha.data, beta.data),
        (y, alpha, beta),
        vjp,
    )


def symmetrize(a):
    """(M + M^T)/2 over the last two axes; bitwise symmetric output."""
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise _shape_err("symmetrize", a.shape)

    def vjp(cot, lead, needs):
        return (symmetrize(cot),)

    return _make("symmetrize", kern.symmetrize(a.data), (a,), vjp)


def take_upper(a):
    """Strict upper triangle of trailing (n, n) axes as a coordinate vector."""
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise _shape_err("take-upper", a.shape)
    n = a.shape[-1]
    iu, ju = _upper_indices(n)

    def vjp(cot, lead, needs):
        return (put_upper(cot, n),)

    return _make("take-upper", kern.take_upper(a.data, iu, ju), (a,), vjp, check=False)


def put_upper(u, n):
    """Scatter coordinates into the strict upper triangle (lower stays 0)."""
    iu, ju = _upper_indices(n)
    if u.shape[-1] != iu.shape[0]:
        raise _shape_err("put-upper", u.shape, f"n={n}")

    def vjp(cot, lead, needs):
        return (take_upper(cot),)

    return _make(
        "put-upper", kern.put_upper(u.data, iu, ju, n, sym=False), (u,), vjp, check=False
    )


def mirror_upper(u, n):
    """Coordinates to a full symmetric matrix with exactly zero diagonal."""
    iu, ju = _upper_indices(n)
    if u.shape[-1] != iu.shape[0]:
        raise _shape_err("mirror-upper", u.shape, f"n={n}")

    def vjp(cot, lead, needs):
        return (add(take_upper(cot), take_upper(transpose(cot))),)

    return _make(
        "mirror-upper", kern.put_upper(u.data, iu, ju, n, sym=True), (u,), vjp, check=False
    )


_APPLY = {
    "matmul": matmul,
    "add": add,
    "subtract": subtract,
    "elementwise-multiply": multiply,
    "scalar-scale": scale,
    "sum": reduce_sum,
    "mean": reduce_mean,
    "concat": concat,
    "transpose": transpose,
    "slice": slice_axis,
    "square": square,
    "exponent": exp,
    "logarithm": log,
    "reduce-logsumexp": logsumexp,
    "symmetrize": symmetrize,
}


def apply(op_tag, *inputs, **kwargs):
    """Dispatch an op by tag; ``activation(kind)`` selects the nonlinearity."""
    if op_tag.startswith("activation(") and op_tag.endswith(")"):
        return activation(op_tag[len("activation(") : -1], *inputs, **kwargs)
    fn = _APPLY.get(op_tag)
    if fn is None:
        raise ValueError(f"unknown op tag '{op_tag}'")
    return fn(*inputs, **kwargs)


# ---------------------------------------------------------------------------
# reverse-mode engine


def _reachable(output):
    """All ancestors of ``output`` (inclusive), sorted by ascending id."""
    seen = {output.id}
    stack = [output]
    nodes = [output]
    while stack:
        node = stack.pop()
        for p in node.parents:
            if p.id not in seen:
                seen.add(p.id)
                stack.append(p)
                nodes.append(p)
    nodes.sort(key=lambda t: t.id)
    return nodes


def gradient(output, wrt, seed=None, lead=0, detach=False):
    """Reverse-mode derivatives of ``output`` with respect to each tensor in ``wrt``.

    The returned tensors are ordinary graph nodes, so they can be fed back
    into :func:`gradient` for higher-order derivatives. A ``wrt`` tensor that
    is unreachable from ``output`` yields a zero tensor of matching shape
    (documented behaviour, not an error).

    ``seed`` is the cotangent at ``output``; it defaults to 1 for scalar
    outputs. It may carry ``lead`` extra leading axes, in which case every
    returned gradient has shape ``seed.shape[:lead] + w.shape`` — one
    directional derivative per leading index, all computed in one sweep.

    ``detach=True`` stores accumulated cotangents as leaves so backward
    intermediates free as the sweep proceeds. Values are identical but the
    results cannot be differentiated further; use it for the outermost pass
    of a step, where only numbers are needed.
    """
    wrt = list(wrt)
    if seed is None:
        if output.size != 1:
            raise ShapeError(
                f"gradient of non-scalar output {output.shape} requires a seed"
            )
        seed = Tensor(np.ones_like(output.data))
    if seed.shape[lead:] != output.shape:
        raise _shape_err("gradient-seed", seed.shape, output.shape)

    nodes = _reachable(output)
    wrt_ids = {w.id for w in wrt}
    useful = set()
    for node in nodes:
        if node.id in wrt_ids or any(p.id in useful for p in node.parents):
            useful.add(node.id)

    cots = {output.id: seed}
    for node in reversed(nodes):
        cot = cots.get(node.id)
        if cot is None:
            continue
        if node.id not in wrt_ids:
            del cots[node.id]
        if node.vjp is None or node.id not in useful:
            continue
        needs = tuple(p.id in useful for p in node.parents)
        if not any(needs):
            continue
        for p, g in zip(node.parents, node.vjp(cot, lead, needs)):
            if g is None:
                continue
            if detach:
                g = Tensor(g.data)
            prev = cots.get(p.id)
            cots[p.id] = g if prev is None else (
                Tensor(prev.data + g.data) if detach else add(prev, g)
            )

    lead_shape = seed.shape[:lead]
    out = []
    for w in wrt:
        g = cots.get(w.id)
        if g is None:
            g = Tensor(np.zeros(lead_shape + w.shape))
        out.append(g)
    return out


def _probe_sweep(fz, z, probes):
    """sum_r <probe_r, J(z)^T probe_r> for a stack of probe vectors."""
    seed = Tensor(np.ascontiguousarray(probes))
    (g,) = gradient(fz, [z], seed=seed, lead=1)
    return reduce_sum(multiply(g, seed))


def jacobian_trace(field, z, mode="exact", n_probes=64, rng=None, chunk=32):
    """Trace of the Jacobian of ``field`` at ``z``, over all coordinates.

    ``exact`` evaluates the d directional derivatives e_j^T (df/dz) e_j
    (vectorized in chunks of probe rows); ``hutchinson`` averages
    v^T (df/dz) v over ``n_probes`` Rademacher probes. Either way the result
    is a scalar tensor that remains differentiable with respect to any
    parameters the field closes over.
    """
    fz = field(z)
    if fz.shape != z.shape:
        raise _shape_err("jacobian-trace", fz.shape, z.shape)
    d = z.size
    if d == 0:
        return Tensor(np.float64(0.0))
    if mode == "exact":
        total = None
        eye = np.eye(d, dtype=np.float64)
        for lo in range(0, d, chunk):
            block = eye[lo : min(lo + chunk, d)].reshape((-1,) + z.shape)
            part = _probe_sweep(fz, z, block)
            total = part if total is None else add(total, part)
        return total
    if mode == "hutchinson":
        if rng is None:
            raise ValueError("hutchinson mode requires an rng")
        probes = rng.integers(0, 2, size=(n_probes,) + z.shape) * 2.0 - 1.0
        return scale(_probe_sweep(fz, z, probes), 1.0 / n_probes)
    raise ValueError(f"unknown trace mode '{mode}'")


def batch_trace(fz, z, mode="exact", n_probes=64, rng=None, chunk=32):
    """Per-sample Jacobian trace along the last axis of a batched field.

    ``fz = field(z)`` must already be evaluated, with ``z`` of shape
    ``(..., d)`` and the field acting independently on each leading index
    (cross-sample derivatives vanish). Returns a tensor of shape
    ``z.shape[:-1]`` holding tr(df_b/dz_b) for every sample b. Fast path for
    training: block-diagonal structure means d probes cover the whole batch.
    """
    if fz.shape != z.shape:
        raise _shape_err("batch-trace", fz.shape, z.shape)
    d = z.shape[-1]
    lead_sum_axis = -z.ndim  # the probe axis after the coordinate reduction

    def sweep(probes):
        seed = Tensor(np.ascontiguousarray(probes))
        (g,) = gradient(fz, [z], seed=seed, lead=1)
        per = reduce_sum(multiply(g, seed), axis=-1)
        return reduce_sum(per, axis=lead_sum_axis)

    if d == 0:
        return Tensor(np.zeros(z.shape[:-1]))
    if mode == "exact":
        total = None
        for lo in range(0, d, chunk):
            hi = min(lo + chunk, d)
            block = np.zeros((hi - lo,) + z.shape, dtype=np.float64)
            for r in range(hi - lo):
                block[(r, Ellipsis, lo + r)] = 1.0
            part = sweep(block)
            total = part if total is None else add(total, part)
        return total
    if mode == "hutchinson":
        if rng is None:
            raise ValueError("hutchinson mode requires an rng")
        probes = rng.integers(0, 2, size=(n_probes,) + z.shape) * 2.0 - 1.0
        return scale(sweep(probes), 1.0 / n_probes)
    raise ValueError(f"unknown trace mode '{mode}'")
