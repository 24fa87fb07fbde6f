"""Segment-wise token encoding followed by a bi-LSTM integration layer.

A document of ``N`` token ids is cut into contiguous segments; each segment is
embedded on its own (with optional segment-local context mixing) and the
concatenated segment encodings are run through one bi-LSTM that crosses
segment boundaries. The result is the hidden matrix ``H`` of shape ``2u x N``.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics as nx

SECTION_HEADER_ID = 2

TRAINABLE_EMBEDDING = "trainable-embedding"
FROZEN_PROJECTION = "frozen-projection"


class InputError(ValueError):
    pass


def segment_tokens(tokens, n: int) -> list:
    """Split ``len(tokens)`` positions into ``min(n, N)`` near-equal contiguous segments.

    Earlier segments take the remainder: ``N=10, n=3`` gives sizes 4, 3, 3.
    Returns half-open ``(start, end)`` pairs.
    """
    size = tokens if isinstance(tokens, (int, np.integer)) else len(tokens)
    if size < 1:
        raise InputError("cannot segment an empty token sequence")
    if n < 1:
        raise InputError(f"segment count must be >= 1, got {n}")
    n_eff = min(n, size)
    base, extra = divmod(size, n_eff)
    bounds = []
    start = 0
    for k in range(n_eff):
        end = start + base + (1 if k < extra else 0)
        bounds.append((start, end))
        start = end
    return bounds


def segment_at_headers(token_ids, header_id: int = SECTION_HEADER_ID) -> list:
    """Start a new segment at every occurrence of ``header_id`` (after position 0)."""
    ids = np.asarray(token_ids)
    if ids.size == 0:
        raise InputError("cannot segment an empty token sequence")
    starts = [0] + [int(i) for i in np.flatnonzero(ids == header_id) if i > 0]
    ends = starts[1:] + [int(ids.size)]
    return list(zip(starts, ends))


@dataclass(frozen=True)
class SegmentEncoderSpec:
    kind: str = TRAINABLE_EMBEDDING
    vocab_size: int = 2003
    embed_dim: int = 32
    gamma: float = 0.5

    def __post_init__(self):
        if self.kind not in (TRAINABLE_EMBEDDING, FROZEN_PROJECTION):
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")

    @property
    def table_name(self) -> str:
        return "embedding" if self.kind == TRAINABLE_EMBEDDING else "projection"


def frozen_projection(vocab_size: int, embed_dim: int, seed: int) -> np.ndarray:
    """Fixed Gaussian projection of one-hot token vectors (``embed_dim x vocab_size``)."""
    rng = np.random.default_rng([seed, 0x5EED])
    return rng.normal(0.0, 1.0 / np.sqrt(embed_dim), size=(embed_dim, vocab_size))


def check_ids(ids, vocab_size: int) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    bad = np.flatnonzero((ids < 0) | (ids >= vocab_size))
    if bad.size:
        pos = int(bad[0])
        raise InputError(f"token id {int(ids[pos])} at position {pos} is outside the vocabulary of {vocab_size}")
    return ids


def encode_nodes(spec: SegmentEncoderSpec, table: nx.Node, ids, boundaries) -> nx.Node:
    """Tape version of the segment encoder over a whole document."""
    ids = check_ids(ids, spec.vocab_size)
    x = nx.gather_cols(table, ids)
    if spec.kind == TRAINABLE_EMBEDDING and spec.gamma != 0.0:
        x = nx.segment_mix(x, boundaries, spec.gamma)
    return x


def encode_segment(spec: SegmentEncoderSpec, params: dict, tokens) -> np.ndarray:
    """Encode a single segment to an ``e x N_k`` matrix."""
    tape = nx.Tape(record=False)
    table = tape.const(params[spec.table_name])
    n = len(tokens)
    if n == 0:
        raise InputError("empty segment")
    return encode_nodes(spec, table, tokens, [(0, n)]).value


@dataclass
class BiLstmParams:
    fwd: tuple
    bwd: tuple

    @property
    def hidden_size(self) -> int:
        return self.fwd[1].shape[1]

    @classmethod
    def from_params(cls, params: dict, prefix: str = "lstm") -> "BiLstmParams":
        def triple(d):
            return tuple(params[f"{prefix}.{d}.{k}"] for k in ("w_x", "w_h", "b"))

        return cls(triple("fwd"), triple("bwd"))


def dropout_mask(shape, rate: float, rng) -> np.ndarray:
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def bilstm_forward(params: BiLstmParams, x, dropout_rate: float = 0.0, rng=None) -> np.ndarray:
    """Bi-LSTM over the columns of ``x``; returns ``2u x N``.

    Inverted dropout is applied to the output only when ``rng`` is given and
    ``dropout_rate > 0``.
    """
    tape = nx.Tape(record=False)
    xn = tape.const(x)
    fwd = tuple(tape.const(p) for p in params.fwd)
    bwd = tuple(tape.const(p) for p in params.bwd)
    h = nx.bilstm(xn, fwd, bwd).value
    if rng is not None and dropout_rate > 0.0:
        h = h * dropout_mask(h.shape, dropout_rate, rng)
    return h
