"""The PAAT classifier and its ablation variants.

Variants:

* ``paat``      segment encoding (``n_enc``) and partition attention (``n_att``)
* ``paat-pe``   whole-document encoding (``n_enc = 1``)
* ``paat-pa``   no partition attention; the head reads ``V`` only
* ``paat-pea``  both reductions
* ``paat-bi``   the bi-LSTM is replaced by a per-token affine map

The head reads ``concat(V[:, l], V_p[:, l])`` (width ``4u``) when partition
attention is active, ``V[:, l]`` alone (width ``2u``) otherwise. With
``n_att = 1`` partition attention reproduces ``V`` exactly, so it is treated
as inactive and the parameter set coincides with ``paat-pea``'s.
"""

import logging
import zlib
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import numerics as nx
from .attention import attention_scores, label_attention_nodes, partition_attention_nodes
from .encoder import (
    FROZEN_PROJECTION,
    TRAINABLE_EMBEDDING,
    InputError,
    SegmentEncoderSpec,
    dropout_mask,
    encode_nodes,
    frozen_projection,
    segment_tokens,
)

log = logging.getLogger(__name__)

VARIANTS = ("paat", "paat-pe", "paat-pa", "paat-pea", "paat-bi")


@dataclass(frozen=True)
class PaatConfig:
    vocab_size: int = 2003
    num_labels: int = 20
    embed_dim: int = 32
    hidden: int = 16  # u; bi-LSTM output width is 2u
    attn_dim: int = 32  # d_a
    alpha: float = 0.8
    n_enc: int = 6
    n_att: int = 6
    dropout: float = 0.3
    encoder_kind: str = TRAINABLE_EMBEDDING
    gamma: float = 0.5
    variant: str = "paat"
    max_tokens: int = 8192
    head_hidden: int = 0
    header_segments: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.max_tokens < 1 or self.n_enc < 1 or self.n_att < 1:
            raise ValueError("max_tokens, n_enc and n_att must be >= 1")
        for name in ("vocab_size", "num_labels", "embed_dim", "hidden", "attn_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @classmethod
    def paper(cls, **overrides) -> "PaatConfig":
        """Dimensions reported for the full-scale model."""
        base = dict(hidden=512, attn_dim=512, alpha=0.8, dropout=0.3, max_tokens=8192)
        base.update(overrides)
        return cls(**base)

    @property
    def effective_n_enc(self) -> int:
        return 1 if self.variant in ("paat-pe", "paat-pea") else self.n_enc

    @property
    def uses_partition_attention(self) -> bool:
        return self.variant not in ("paat-pa", "paat-pea") and self.n_att > 1

    @property
    def head_width(self) -> int:
        return (4 if self.uses_partition_attention else 2) * self.hidden

    @property
    def encoder_spec(self) -> SegmentEncoderSpec:
        return SegmentEncoderSpec(self.encoder_kind, self.vocab_size, self.embed_dim, self.gamma)

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in asdict(self).items())

    @classmethod
    def from_mapping(cls, mapping: dict) -> "PaatConfig":
        defaults = cls()
        kwargs = {}
        names = {f.name for f in fields(cls)}
        for key, raw in mapping.items():
            k = key.replace("-", "_")
            if k not in names:
                raise ValueError(f"unknown model config key {key!r}")
            default = getattr(defaults, k)
            if isinstance(default, bool):
                kwargs[k] = raw if isinstance(raw, bool) else str(raw).lower() in {"1", "true", "yes", "on"}
            elif isinstance(default, int):
                kwargs[k] = int(raw)
            elif isinstance(default, float):
                kwargs[k] = float(raw)
            else:
                kwargs[k] = str(raw)
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> "PaatConfig":
        mapping = {}
        for line in text.splitlines():
            if "=" in line:
                k, v = line.split("=", 1)
                mapping[k.strip()] = v.strip()
        return cls.from_mapping(mapping)


# ---------------------------------------------------------------------------
# parameters


def param_shapes(cfg: PaatConfig) -> dict:
    """Name -> (shape, fan_in) for every tensor of the model, in a fixed order."""
    e, u, da, L = cfg.embed_dim, cfg.hidden, cfg.attn_dim, cfg.num_labels
    shapes = {}
    shapes[cfg.encoder_spec.table_name] = ((e, cfg.vocab_size), 1)
    if cfg.variant == "paat-bi":
        shapes["affine.w"] = ((2 * u, e), e)
        shapes["affine.b"] = ((2 * u,), e)
    else:
        for d in ("fwd", "bwd"):
            shapes[f"lstm.{d}.w_x"] = ((4 * u, e), u)
            shapes[f"lstm.{d}.w_h"] = ((4 * u, u), u)
            shapes[f"lstm.{d}.b"] = ((4 * u,), u)
    shapes["attn.W"] = ((da, 2 * u), 2 * u)
    shapes["attn.U"] = ((L, da), da)
    width = cfg.head_width
    if cfg.head_hidden:
        shapes["head.hidden.w"] = ((cfg.head_hidden, width), width)
        shapes["head.hidden.b"] = ((cfg.head_hidden,), width)
        width = cfg.head_hidden
    shapes["head.w"] = ((L, width), width)
    shapes["head.b"] = ((L,), width)
    return shapes


def frozen_names(cfg: PaatConfig) -> set:
    return {"projection"} if cfg.encoder_kind == FROZEN_PROJECTION else set()


def init_params(cfg: PaatConfig) -> dict:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per tensor.

    Every tensor draws from its own stream keyed by (seed, name), so tensors
    shared between variants start identical.
    """
    params = {}
    for name, (shape, fan_in) in param_shapes(cfg).items():
        if name == "projection":
            params[name] = frozen_projection(cfg.vocab_size, cfg.embed_dim, cfg.seed)
            continue
        rng = np.random.default_rng([cfg.seed, zlib.crc32(name.encode())])
        bound = 1.0 / np.sqrt(fan_in)
        params[name] = rng.uniform(-bound, bound, size=shape)
    return params


# ---------------------------------------------------------------------------
# forward


@dataclass
class ForwardResult:
    # nodes inside forward_nodes, arrays from PaatModel.run
    logits: object
    H: object
    A: object
    V: object
    enc_bounds: list
    att_bounds: list
    partition: tuple = None  # (A_seg, V_stack, T, M, V_p) when computed


def prepare_ids(cfg: PaatConfig, ids) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        raise InputError("empty document")
    if ids.size > cfg.max_tokens:
        log.warning("document of %d tokens truncated to %d", ids.size, cfg.max_tokens)
        ids = ids[:cfg.max_tokens]
    return ids


def _boundaries(cfg: PaatConfig, ids, n: int):
    if cfg.header_segments:
        from .encoder import segment_at_headers

        return segment_at_headers(ids)
    return segment_tokens(len(ids), n)


def forward_nodes(cfg: PaatConfig, tape: nx.Tape, leaves: dict, ids, rng=None, attention: bool = False):
    """Build the forward graph for one document.

    ``leaves`` maps parameter names to nodes. Dropout is active only when
    ``rng`` is supplied. With ``attention=True`` partition attention is also
    computed for variants whose head does not consume it (for inspection).
    """
    ids = prepare_ids(cfg, ids)
    n_tok = len(ids)
    enc_bounds = _boundaries(cfg, ids, cfg.effective_n_enc)
    x = encode_nodes(cfg.encoder_spec, leaves[cfg.encoder_spec.table_name], ids, enc_bounds)
    if cfg.variant == "paat-bi":
        H = nx.add_col_vector(nx.matmul(leaves["affine.w"], x), leaves["affine.b"])
    else:
        H = nx.bilstm(
            x,
            tuple(leaves[f"lstm.fwd.{k}"] for k in ("w_x", "w_h", "b")),
            tuple(leaves[f"lstm.bwd.{k}"] for k in ("w_x", "w_h", "b")),
        )
    if rng is not None and cfg.dropout > 0.0:
        H = nx.mul(H, dropout_mask(H.shape, cfg.dropout, rng))
    W, U = leaves["attn.W"], leaves["attn.U"]
    S = attention_scores(W, U, H)
    A, V = label_attention_nodes(W, U, H, scores=S)
    att_bounds = segment_tokens(n_tok, cfg.n_att) if not cfg.header_segments else enc_bounds
    partition = None
    if cfg.uses_partition_attention or attention:
        partition = partition_attention_nodes(W, U, H, att_bounds, cfg.alpha, scores=S)
    if cfg.uses_partition_attention:
        features = nx.vcat([V, partition[4]])
    else:
        features = V
    if cfg.head_hidden:
        hid = nx.tanh(nx.add_col_vector(nx.matmul(leaves["head.hidden.w"], features), leaves["head.hidden.b"]))
        features = hid
    # logit_l = head.w[l] . features[:, l] + head.b[l]
    logits = nx.add(nx.row_sum(nx.mul(leaves["head.w"], nx.transpose(features))), leaves["head.b"])
    return ForwardResult(logits, H, A, V, enc_bounds, att_bounds, partition)


class PaatModel:
    """Configuration plus parameter tensors."""

    def __init__(self, config: PaatConfig, params: dict = None):
        self.config = config
        self.params = init_params(config) if params is None else params
        expected = param_shapes(config)
        for name, (shape, _) in expected.items():
            if name not in self.params or self.params[name].shape != shape:
                got = self.params.get(name)
                raise nx.ShapeError(f"parameter {name}: expected {shape}, got {None if got is None else got.shape}")

    @property
    def trainable(self) -> list:
        frozen = frozen_names(self.config)
        return [n for n in self.params if n not in frozen]

    def _leaves(self, tape):
        frozen = frozen_names(self.config)
        return {n: (tape.const(p) if n in frozen else tape.leaf(n, p)) for n, p in self.params.items()}

    def logits(self, ids) -> np.ndarray:
        tape = nx.Tape(record=False)
        return forward_nodes(self.config, tape, self._leaves(tape), ids).logits.value

    def predict_proba(self, ids) -> np.ndarray:
        return predict(self.logits(ids))

    def run(self, ids, attention: bool = True) -> ForwardResult:
        """Forward pass with every intermediate returned as a plain array."""
        tape = nx.Tape(record=False)
        out = forward_nodes(self.config, tape, self._leaves(tape), ids, attention=attention)
        part = None if out.partition is None else tuple(node.value for node in out.partition)
        return ForwardResult(out.logits.value, out.H.value, out.A.value, out.V.value,
                             out.enc_bounds, out.att_bounds, part)

    def loss_and_grads(self, ids, targets, rng=None):
        tape = nx.Tape()
        out = forward_nodes(self.config, tape, self._leaves(tape), ids, rng=rng)
        loss = nx.bce_with_logits(out.logits, targets)
        return float(loss.value), nx.backward(tape, loss)

    def loss(self, ids, targets) -> float:
        tape = nx.Tape(record=False)
        out = forward_nodes(self.config, tape, self._leaves(tape), ids)
        return float(nx.bce_with_logits(out.logits, targets).value)

    def with_config(self, **changes) -> "PaatModel":
        return PaatModel(replace(self.config, **changes), self.params)


def predict(logits) -> np.ndarray:
    """Sigmoid probabilities clamped strictly inside (0, 1)."""
    return np.clip(nx.sigmoid_array(logits), 1e-12, 1.0 - 1e-12)


def bce_loss(probs, gold) -> float:
    """Mean over labels of the binary cross-entropy of clamped probabilities."""
    p = np.clip(np.asarray(probs, dtype=np.float64), 1e-12, 1.0 - 1e-12)
    y = np.asarray(gold, dtype=np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def targets_for(gold, num_labels: int) -> np.ndarray:
    y = np.zeros(num_labels)
    for l in gold:
        y[l] = 1.0
    return y
