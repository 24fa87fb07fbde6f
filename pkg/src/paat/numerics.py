"""Dense float64 matrix operations with tape-based reverse-mode differentiation.

Values are plain ``numpy.ndarray`` objects (float64, row-major). An operation
applied to :class:`Node` inputs returns a new :class:`Node`; when the owning
:class:`Tape` is recording, the operation appends one :class:`TapeEntry`
holding the closure that maps the output adjoint to input adjoints.

Softmax is always taken along rows (the last axis). An attention matrix of
shape ``L x N`` therefore distributes each label's mass over the ``N`` tokens.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ContractError(ValueError):
    """A caller-side precondition was violated."""


@dataclass
class TapeEntry:
    kind: str
    inputs: tuple
    output: int
    vjp: Callable


@dataclass
class Tape:
    """Ordered record of primitive operations.

    Node ids are handed out in creation order, so every entry's inputs have
    smaller ids than its output. With ``record=False`` the tape only hands out
    ids; nothing is cached and :func:`backward` is unavailable.
    """

    record: bool = True
    entries: list = field(default_factory=list)
    leaves: dict = field(default_factory=dict)
    _count: int = 0

    def _new_id(self) -> int:
        self._count += 1
        return self._count - 1

    def leaf(self, name: str, value) -> "Node":
        """Register a differentiable input under ``name``."""
        node = Node(self, self._new_id(), _as_float(value), requires_grad=self.record)
        self.leaves[name] = node
        return node

    def const(self, value) -> "Node":
        return Node(self, self._new_id(), _as_float(value), requires_grad=False)


class Node:
    __slots__ = ("tape", "id", "value", "requires_grad")

    def __init__(self, tape, node_id, value, requires_grad):
        self.tape = tape
        self.id = node_id
        self.value = value
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node(id={self.id}, shape={self.value.shape})"


def _as_float(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    return arr


def _lift(tape: Tape, x) -> Node:
    if isinstance(x, Node):
        return x
    return tape.const(x)


def _tape_of(*xs) -> Tape:
    for x in xs:
        if isinstance(x, Node):
            return x.tape
    raise ContractError("at least one operand must be a Node")


def _emit(kind: str, inputs, value: np.ndarray, vjp) -> Node:
    tape = inputs[0].tape
    needs = tape.record and any(n.requires_grad for n in inputs)
    out = Node(tape, tape._new_id(), value, requires_grad=needs)
    if needs:
        tape.entries.append(TapeEntry(kind, tuple(n.id for n in inputs), out.id, vjp))
    return out


def _same_shape(kind: str, a: Node, b: Node):
    if a.shape != b.shape:
        raise ShapeError(f"{kind}: shapes {a.shape} and {b.shape} differ")


# ---------------------------------------------------------------------------
# primitives


def matmul(a, b) -> Node:
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    av, bv = a.value, b.value
    return _emit("matmul", (a, b), av @ bv, lambda g: (g @ bv.T, av.T @ g))


def transpose(a: Node) -> Node:
    return _emit("transpose", (a,), a.value.T.copy(), lambda g: (g.T,))


def add(a, b) -> Node:
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    _same_shape("add", a, b)
    return _emit("add", (a, b), a.value + b.value, lambda g: (g, g))


def mul(a, b) -> Node:
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    _same_shape("mul", a, b)
    av, bv = a.value, b.value
    return _emit("mul", (a, b), av * bv, lambda g: (g * bv, g * av))


def scale(a: Node, c: float) -> Node:
    c = float(c)
    return _emit("scale", (a,), a.value * c, lambda g: (g * c,))


def tanh(a: Node) -> Node:
    y = np.tanh(a.value)
    return _emit("tanh", (a,), y, lambda g: (g * (1.0 - y * y),))


def sigmoid(a: Node) -> Node:
    y = _sigmoid(a.value)
    return _emit("sigmoid", (a,), y, lambda g: (g * y * (1.0 - y),))


def row_softmax(a: Node) -> Node:
    y = softmax_rows(a.value)

    def vjp(g):
        return (y * (g - np.sum(g * y, axis=-1, keepdims=True)),)

    return _emit("row_softmax", (a,), y, vjp)


def diag_of(a: Node) -> Node:
    """Main diagonal of a square matrix as a length-L vector."""
    if a.value.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"diag_of: expected a square matrix, got {a.shape}")
    n = a.shape[0]

    def vjp(g):
        out = np.zeros((n, n))
        out[np.arange(n), np.arange(n)] = g
        return (out,)

    return _emit("diag_of", (a,), np.diagonal(a.value).copy(), vjp)


def total(a: Node) -> Node:
    """Sum of all entries, as a 0-d value."""
    shape = a.shape
    return _emit("sum", (a,), np.asarray(a.value.sum()), lambda g: (np.full(shape, float(g)),))


def row_sum(a: Node) -> Node:
    """Per-row sum of a matrix, giving a vector of length rows."""
    cols = a.shape[1]
    return _emit("row_sum", (a,), a.value.sum(axis=1), lambda g: (np.repeat(g[:, None], cols, axis=1),))


def col_mean(a: Node) -> Node:
    """Mean over columns, giving a vector of length rows."""
    cols = a.shape[1]
    return _emit("col_mean", (a,), a.value.mean(axis=1), lambda g: (np.repeat(g[:, None] / cols, cols, axis=1),))


def add_col_vector(a, v) -> Node:
    """Add vector ``v`` (length rows) to every column of ``a``."""
    tape = _tape_of(a, v)
    a, v = _lift(tape, a), _lift(tape, v)
    if v.value.ndim != 1 or a.shape[0] != v.shape[0]:
        raise ShapeError(f"add_col_vector: vector {v.shape} does not match rows of {a.shape}")
    return _emit("add_col_vector", (a, v), a.value + v.value[:, None], lambda g: (g, g.sum(axis=1)))


def scale_cols(a, v) -> Node:
    """Multiply column ``j`` of ``a`` by ``v[j]``."""
    tape = _tape_of(a, v)
    a, v = _lift(tape, a), _lift(tape, v)
    if v.value.ndim != 1 or a.shape[1] != v.shape[0]:
        raise ShapeError(f"scale_cols: vector {v.shape} does not match columns of {a.shape}")
    av, vv = a.value, v.value
    return _emit("scale_cols", (a, v), av * vv[None, :], lambda g: (g * vv[None, :], np.sum(g * av, axis=0)))


def col_slice(a: Node, start: int, stop: int) -> Node:
    shape = a.shape
    if not 0 <= start < stop <= shape[1]:
        raise ContractError(f"col_slice: bad range [{start}, {stop}) for {shape[1]} columns")

    def vjp(g):
        out = np.zeros(shape)
        out[:, start:stop] = g
        return (out,)

    return _emit("col_slice", (a,), a.value[:, start:stop].copy(), vjp)


def column(a: Node, j: int) -> Node:
    """Column ``j`` of a matrix as a vector."""
    shape = a.shape

    def vjp(g):
        out = np.zeros(shape)
        out[:, j] = g
        return (out,)

    return _emit("column", (a,), a.value[:, j].copy(), vjp)


def hcat(parts) -> Node:
    """Concatenate matrices along columns."""
    parts = list(parts)
    rows = {p.shape[0] for p in parts}
    if len(rows) != 1:
        raise ShapeError(f"hcat: row counts differ {[p.shape for p in parts]}")
    edges = np.cumsum([0] + [p.shape[1] for p in parts])

    def vjp(g):
        return tuple(g[:, edges[k]:edges[k + 1]] for k in range(len(parts)))

    return _emit("hcat", tuple(parts), np.concatenate([p.value for p in parts], axis=1), vjp)


def vcat(parts) -> Node:
    """Concatenate matrices along rows."""
    parts = list(parts)
    cols = {p.shape[1] for p in parts}
    if len(cols) != 1:
        raise ShapeError(f"vcat: column counts differ {[p.shape for p in parts]}")
    edges = np.cumsum([0] + [p.shape[0] for p in parts])

    def vjp(g):
        return tuple(g[edges[k]:edges[k + 1]] for k in range(len(parts)))

    return _emit("vcat", tuple(parts), np.concatenate([p.value for p in parts], axis=0), vjp)


def stack_cols(vectors) -> Node:
    """Stack equal-length vectors as the columns of a matrix."""
    vectors = list(vectors)
    if len({v.shape for v in vectors}) != 1 or vectors[0].value.ndim != 1:
        raise ShapeError(f"stack_cols: vectors must share one 1-d shape, got {[v.shape for v in vectors]}")

    def vjp(g):
        return tuple(g[:, k] for k in range(len(vectors)))

    return _emit("stack_cols", tuple(vectors), np.stack([v.value for v in vectors], axis=1), vjp)


def gather_cols(table: Node, ids) -> Node:
    """Select columns ``ids`` of ``table`` (embedding lookup)."""
    ids = np.asarray(ids, dtype=np.int64)
    shape = table.shape

    def vjp(g):
        return (np.stack([np.bincount(ids, weights=row, minlength=shape[1]) for row in g]),)

    return _emit("gather_cols", (table,), table.value[:, ids], vjp)


def segment_mix(x: Node, boundaries, gamma: float) -> Node:
    """Add ``gamma`` times the segment-mean column to every column of each segment."""
    gamma = float(gamma)
    bounds = [(int(s), int(e)) for s, e in boundaries]
    xv = x.value
    out = xv.copy()
    for s, e in bounds:
        out[:, s:e] += gamma * xv[:, s:e].mean(axis=1, keepdims=True)

    def vjp(g):
        dx = g.copy()
        for s, e in bounds:
            dx[:, s:e] += gamma * g[:, s:e].mean(axis=1, keepdims=True)
        return (dx,)

    return _emit("segment_mix", (x,), out, vjp)


def segment_softmax(a: Node, boundaries) -> Node:
    """Row softmax taken separately inside each column segment."""
    bounds = [(int(s), int(e)) for s, e in boundaries]
    av = a.value
    y = np.empty_like(av)
    for s, e in bounds:
        y[:, s:e] = softmax_rows(av[:, s:e])

    def vjp(g):
        out = np.empty_like(g)
        for s, e in bounds:
            ys, gs = y[:, s:e], g[:, s:e]
            out[:, s:e] = ys * (gs - np.sum(gs * ys, axis=1, keepdims=True))
        return (out,)

    return _emit("segment_softmax", (a,), y, vjp)


def segment_context(h: Node, a: Node, boundaries) -> Node:
    """Stack ``h[:, seg_k] @ a[:, seg_k].T`` over segments into an ``n x rows(h) x rows(a)`` array."""
    bounds = [(int(s), int(e)) for s, e in boundaries]
    if h.shape[1] != a.shape[1]:
        raise ShapeError(f"segment_context: {h.shape} and {a.shape} differ in columns")
    hv, av = h.value, a.value
    out = np.stack([hv[:, s:e] @ av[:, s:e].T for s, e in bounds])

    def vjp(g):
        dh = np.empty_like(hv)
        da = np.empty_like(av)
        for k, (s, e) in enumerate(bounds):
            dh[:, s:e] = g[k] @ av[:, s:e]
            da[:, s:e] = g[k].T @ hv[:, s:e]
        return dh, da

    return _emit("segment_context", (h, a), out, vjp)


def batch_matmul(w: Node, x: Node) -> Node:
    """``w @ x[k]`` for every leading index ``k`` of a 3-d ``x``."""
    if w.value.ndim != 2 or x.value.ndim != 3 or w.shape[1] != x.shape[1]:
        raise ShapeError(f"batch_matmul: cannot multiply {w.shape} by batch {x.shape}")
    wv, xv = w.value, x.value

    def vjp(g):
        return np.einsum("kdl,kcl->dc", g, xv), np.matmul(wv.T, g)

    return _emit("batch_matmul", (w, x), np.matmul(wv, xv), vjp)


def diag_product(u: Node, z: Node) -> Node:
    """``out[k, l] = (u @ z[k])[l, l]`` without forming the ``L x L`` products."""
    if u.value.ndim != 2 or z.value.ndim != 3 or z.shape[1:] != (u.shape[1], u.shape[0]):
        raise ShapeError(f"diag_product: {u.shape} incompatible with batch {z.shape}")
    uv, zv = u.value, z.value

    def vjp(g):
        return np.einsum("kl,kdl->ld", g, zv), g[:, None, :] * uv.T[None, :, :]

    return _emit("diag_product", (u, z), np.einsum("ld,kdl->kl", uv, zv), vjp)


def mix_segments(m: Node, vs: Node) -> Node:
    """``out[:, l] = sum_k m[l, k] * vs[k][:, l]``."""
    if m.value.ndim != 2 or vs.value.ndim != 3 or m.shape != (vs.shape[2], vs.shape[0]):
        raise ShapeError(f"mix_segments: weights {m.shape} incompatible with batch {vs.shape}")
    mv, vv = m.value, vs.value
    out = vv[0] * mv[:, 0][None, :]
    for k in range(1, vv.shape[0]):
        out = out + vv[k] * mv[:, k][None, :]

    def vjp(g):
        return np.einsum("il,kil->lk", g, vv), g[None, :, :] * mv.T[:, None, :]

    return _emit("mix_segments", (m, vs), out, vjp)


def bce_with_logits(logits: Node, targets) -> Node:
    """Mean binary cross-entropy of clamped sigmoid probabilities.

    Probabilities are clamped to ``[1e-12, 1 - 1e-12]``; the gradient is zero
    through clamped entries, matching the clamp exactly.
    """
    y = np.asarray(targets, dtype=np.float64)
    z = logits.value
    if z.shape != y.shape:
        raise ShapeError(f"bce: logits {z.shape} vs targets {y.shape}")
    p_raw = _sigmoid(z)
    p = np.clip(p_raw, 1e-12, 1.0 - 1e-12)
    n = z.size
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    live = (p_raw == p).astype(np.float64)

    def vjp(g):
        return (float(g) * live * (p - y) / n,)

    return _emit("bce", (logits,), np.asarray(loss), vjp)


def bilstm(x: Node, fwd, bwd) -> Node:
    """Bidirectional LSTM over the columns of ``x`` (e x N).

    ``fwd`` and ``bwd`` are ``(w_x, w_h, b)`` node triples of shapes
    ``(4u, e)``, ``(4u, u)``, ``(4u,)``. Output is ``2u x N``: forward hidden
    states stacked on top of backward hidden states for each position.
    """
    xv = x.value
    e = xv.shape[0]
    w_x_f, w_h_f, b_f = fwd
    w_x_b, w_h_b, b_b = bwd
    u = w_h_f.shape[1]
    for w_x, w_h, b in (fwd, bwd):
        if w_x.shape != (4 * u, e) or w_h.shape != (4 * u, u) or b.shape != (4 * u,):
            raise ShapeError(
                f"bilstm: weights {w_x.shape}, {w_h.shape}, {b.shape} inconsistent with e={e}, u={u}"
            )
    # kernels are time-major: transpose once on the way in and out
    xt = np.ascontiguousarray(xv.T)
    xt_rev = np.ascontiguousarray(xt[::-1])

    def run(xs, w_x, w_h, b):
        return kernels.lstm_forward(xs @ w_x.value.T + b.value, w_h.value)

    gates_f, cells_f, hid_f = run(xt, w_x_f, w_h_f, b_f)
    gates_b, cells_b, hid_b = run(xt_rev, w_x_b, w_h_b, b_b)
    out = np.concatenate([hid_f, hid_b[::-1]], axis=1).T.copy()

    def grads(xs, d_hid, gates, cells, hid, w_x, w_h):
        d_pre = kernels.lstm_backward(np.ascontiguousarray(d_hid), gates, cells, w_h.value)
        h_prev = np.zeros_like(hid)
        h_prev[1:] = hid[:-1]
        return d_pre.T @ xs, d_pre.T @ h_prev, d_pre.sum(axis=0), d_pre @ w_x.value

    def vjp(g):
        gt = g.T
        dwx_f, dwh_f, db_f, dx_f = grads(xt, gt[:, :u], gates_f, cells_f, hid_f, w_x_f, w_h_f)
        dwx_b, dwh_b, db_b, dx_b = grads(xt_rev, gt[::-1, u:], gates_b, cells_b, hid_b, w_x_b, w_h_b)
        return ((dx_f + dx_b[::-1]).T, dwx_f, dwh_f, db_f, dwx_b, dwh_b, db_b)

    return _emit("bilstm", (x, w_x_f, w_h_f, b_f, w_x_b, w_h_b, b_b), out, vjp)


def elementwise(fn: str, *operands, c: float = None) -> Node:
    """Dispatch by name: ``tanh``, ``sigmoid``, ``scale``, ``add``, ``mul``."""
    if fn == "tanh":
        return tanh(*operands)
    if fn == "sigmoid":
        return sigmoid(*operands)
    if fn == "scale":
        return scale(operands[0], c)
    if fn == "add":
        return add(*operands)
    if fn == "mul":
        return mul(*operands)
    raise ValueError(f"unknown elementwise function {fn!r}")


# ---------------------------------------------------------------------------
# differentiation


def backward(tape: Tape, loss: Node) -> dict:
    """Gradient of scalar ``loss`` with respect to every leaf of ``tape``."""
    if not tape.record:
        raise ContractError("backward requires a recording tape")
    if loss.tape is not tape:
        raise ContractError("loss node belongs to a different tape")
    if loss.value.size != 1:
        raise ContractError(f"backward: loss must be scalar, got shape {loss.shape}")
    adj = {loss.id: np.ones_like(loss.value)}
    for entry in reversed(tape.entries):
        g = adj.pop(entry.output, None)
        if g is None:
            continue
        for nid, gi in zip(entry.inputs, entry.vjp(g)):
            if gi is None:
                continue
            prev = adj.get(nid)
            adj[nid] = gi if prev is None else prev + gi
    return {name: adj.get(node.id, np.zeros_like(node.value)) for name, node in tape.leaves.items()}


# ---------------------------------------------------------------------------
# plain-array helpers


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    ez = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + ez), ez / (1.0 + ez))


def softmax_rows(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    shifted = x - np.max(x, axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / np.sum(ex, axis=-1, keepdims=True)


def sigmoid_array(z) -> np.ndarray:
    return _sigmoid(z)
