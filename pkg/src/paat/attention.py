"""Conventional and partition-based label attention with shared ``W`` and ``U``.

Conventional attention over the hidden matrix ``H`` (``2u x N``)::

    Z = tanh(W H)            d_a x N
    A = softmax_rows(U Z)    L x N
    V = H A^T                2u x L

Partition attention runs the same block on every column segment ``H_k`` and
then scores each segment's label features against the labels::

    Zhat_k = tanh(W V_k)     d_a x L
    Ahat_k = U Zhat_k        L x L   (no softmax)
    T[:, k] = alpha * diag(Ahat_k)
    M = softmax_rows(T)      L x n
    V_p[:, l] = sum_k M[l, k] V_k[:, l]

``alpha`` only rescales the segment scores before the segment softmax.
"""

from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx


@dataclass
class AttentionParams:
    W: np.ndarray
    U: np.ndarray


@dataclass
class AttentionOutput:
    A: np.ndarray
    V: np.ndarray


@dataclass
class PartitionAttentionOutput:
    per_segment: list
    T: np.ndarray
    M: np.ndarray
    V_p: np.ndarray
    boundaries: list = field(default_factory=list)


def attention_scores(W: nx.Node, U: nx.Node, H: nx.Node) -> nx.Node:
    """``U tanh(W H)``: label-by-token logits shared by both mechanisms."""
    if W.shape[1] != H.shape[0]:
        raise nx.ShapeError(f"label attention: W {W.shape} does not accept H {H.shape}")
    return nx.matmul(U, nx.tanh(nx.matmul(W, H)))


def label_attention_nodes(W: nx.Node, U: nx.Node, H: nx.Node, scores: nx.Node = None):
    S = attention_scores(W, U, H) if scores is None else scores
    A = nx.row_softmax(S)
    V = nx.matmul(H, nx.transpose(A))
    return A, V


def partition_attention_nodes(W: nx.Node, U: nx.Node, H: nx.Node, boundaries, alpha: float,
                              scores: nx.Node = None):
    """Returns ``(A_seg, V_stack, T, M, V_p)`` as nodes.

    ``A_seg`` (L x N) holds every ``A_k`` in its segment's columns and
    ``V_stack`` (n x 2u x L) stacks the ``V_k``. Because ``tanh(W H_k)`` is a
    column block of ``tanh(W H)``, the token scores can be shared with
    conventional attention through ``scores``.
    """
    _check_cover(boundaries, H.shape[1])
    S = attention_scores(W, U, H) if scores is None else scores
    A_seg = nx.segment_softmax(S, boundaries)
    V_stack = nx.segment_context(H, A_seg, boundaries)
    Z_hat = nx.tanh(nx.batch_matmul(W, V_stack))
    T = nx.scale(nx.transpose(nx.diag_product(U, Z_hat)), alpha)
    M = nx.row_softmax(T)
    V_p = nx.mix_segments(M, V_stack)
    return A_seg, V_stack, T, M, V_p


def _check_cover(boundaries, n_cols: int):
    expected = 0
    for start, end in boundaries:
        if start != expected or end <= start:
            raise nx.ContractError(f"segments {boundaries} are not contiguous non-empty cover of {n_cols} columns")
        expected = end
    if expected != n_cols:
        raise nx.ContractError(f"segments {boundaries} do not cover {n_cols} columns")


def label_attention(params: AttentionParams, h) -> AttentionOutput:
    tape = nx.Tape(record=False)
    A, V = label_attention_nodes(tape.const(params.W), tape.const(params.U), tape.const(h))
    return AttentionOutput(A.value, V.value)


def partition_attention(params: AttentionParams, h, boundaries, alpha: float = 0.8) -> PartitionAttentionOutput:
    tape = nx.Tape(record=False)
    A_seg, V_stack, T, M, V_p = partition_attention_nodes(
        tape.const(params.W), tape.const(params.U), tape.const(h), boundaries, alpha
    )
    return partition_output(A_seg.value, V_stack.value, T.value, M.value, V_p.value, boundaries)


def partition_output(A_seg, V_stack, T, M, V_p, boundaries) -> PartitionAttentionOutput:
    per = [AttentionOutput(A_seg[:, s:e].copy(), V_stack[k]) for k, (s, e) in enumerate(boundaries)]
    return PartitionAttentionOutput(per, T, M, V_p, [tuple(b) for b in boundaries])


def segment_mix(t) -> np.ndarray:
    """Mixing weights over segments: row-wise softmax of segment scores."""
    return nx.softmax_rows(t)


# ---------------------------------------------------------------------------
# attention maps


@dataclass
class LabelMap:
    label: int
    conventional: list  # (position, token, weight), descending weight
    partition: list
    segment_weights: list


def _ranked(weights, tokens):
    order = sorted(range(len(weights)), key=lambda j: (-weights[j], j))
    return [(j, tokens[j], float(weights[j])) for j in order]


def attention_map(conv: AttentionOutput, part: PartitionAttentionOutput, doc_ids, vocab, labels=None) -> list:
    """Per-label token rankings from conventional and partition attention.

    The partition map places ``M[l, k] * A_k[l, j]`` on each position ``j`` of
    segment ``k``, so its weights also sum to one per label.
    """
    tokens = []
    for pos, tid in enumerate(doc_ids):
        try:
            tokens.append(vocab.token(int(tid)))
        except KeyError:
            raise ValueError(f"vocabulary has no entry for id {int(tid)} at position {pos}") from None
    n_labels = conv.A.shape[0]
    labels = range(n_labels) if labels is None else labels
    maps = []
    for l in labels:
        pw = np.zeros(len(tokens))
        for k, (start, end) in enumerate(part.boundaries):
            pw[start:end] = part.M[l, k] * part.per_segment[k].A[l]
        maps.append(LabelMap(
            label=int(l),
            conventional=_ranked(conv.A[l], tokens),
            partition=_ranked(pw, tokens),
            segment_weights=[float(x) for x in part.M[l]],
        ))
    return maps
