"""Per-document AdamW training with validation micro-F1 model selection."""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import gold_matrix
from .metrics import f1_scores
from .model import PaatConfig, PaatModel, targets_for
from .optim import AdamWState, adamw_step

log = logging.getLogger(__name__)


class DivergenceError(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    lr: float = 0.0015
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    patience: int = 5
    accumulate: int = 1
    threshold: float = 0.5


@dataclass
class EpochRecord:
    epoch: int
    train_bce: float
    valid_micro_f1: float

    def line(self) -> str:
        return f"{self.epoch}\t{self.train_bce!r}\t{self.valid_micro_f1!r}"


@dataclass
class TrainResult:
    model: PaatModel
    best_epoch: int
    best_valid_micro_f1: float
    history: list = field(default_factory=list)

    def log_text(self) -> str:
        return "epoch\ttrain_bce\tvalid_micro_f1\n" + "".join(r.line() + "\n" for r in self.history)


def encode_docs(docs, vocab):
    return [vocab.encode(d.tokens) for d in docs]


def predict_matrix(model: PaatModel, encoded) -> np.ndarray:
    return np.stack([model.predict_proba(ids) for ids in encoded]) if encoded else np.zeros((0, model.config.num_labels))


def mean_bce(model: PaatModel, encoded, docs) -> float:
    L = model.config.num_labels
    return float(np.mean([model.loss(ids, targets_for(d.gold, L)) for ids, d in zip(encoded, docs)]))


def train_loop(config: PaatConfig, train_docs, valid_docs, vocab, tc: TrainConfig = TrainConfig(),
               model: PaatModel = None, on_epoch=None) -> TrainResult:
    """Shuffled per-document updates; keeps the epoch with the best validation micro-F1.

    Shuffling and dropout draw from streams derived from ``config.seed``, so a
    fixed seed reproduces the run bit for bit.
    """
    if not train_docs or not valid_docs:
        raise ValueError("training and validation sets must be non-empty")
    model = PaatModel(config) if model is None else model
    L = config.num_labels
    x_train = encode_docs(train_docs, vocab)
    y_train = [targets_for(d.gold, L) for d in train_docs]
    x_valid = encode_docs(valid_docs, vocab)
    g_valid = gold_matrix(valid_docs, L)

    shuffle_rng = np.random.default_rng([config.seed, 1])
    dropout_rng = np.random.default_rng([config.seed, 2])
    state = AdamWState(tc.lr, tc.beta1, tc.beta2, tc.eps, tc.weight_decay)
    best = None
    best_epoch, best_f1 = 0, -1.0
    stale = 0
    history = []
    for epoch in range(1, tc.epochs + 1):
        order = shuffle_rng.permutation(len(x_train))
        losses = []
        pending = None
        for step, i in enumerate(order, 1):
            loss, grads = model.loss_and_grads(x_train[i], y_train[i], rng=dropout_rng)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}, step {step}")
            losses.append(loss)
            if tc.accumulate > 1:
                pending = grads if pending is None else {k: pending[k] + grads[k] for k in grads}
                if step % tc.accumulate and step != len(order):
                    continue
                grads = {k: g / tc.accumulate for k, g in pending.items()}
                pending = None
            try:
                adamw_step(model.params, grads, state)
            except FloatingPointError as exc:
                raise DivergenceError(f"epoch {epoch}, step {step}: {exc}") from None
        scores = predict_matrix(model, x_valid)
        f1 = f1_scores(scores, g_valid, tc.threshold)["micro_f1"]
        rec = EpochRecord(epoch, float(np.mean(losses)), f1)
        history.append(rec)
        log.info("epoch %d train_bce=%.6f valid_micro_f1=%.4f", epoch, rec.train_bce, f1)
        if on_epoch is not None:
            on_epoch(rec)
        if f1 > best_f1:
            best_f1, best_epoch, stale = f1, epoch, 0
            best = {k: v.copy() for k, v in model.params.items()}
        else:
            stale += 1
            if tc.patience and stale >= tc.patience:
                log.info("early stop after epoch %d (best %d)", epoch, best_epoch)
                break
    return TrainResult(PaatModel(config, best), best_epoch, best_f1, history)


def train_config_dict(tc: TrainConfig) -> dict:
    return asdict(tc)
