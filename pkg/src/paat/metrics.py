"""Multi-label evaluation: AUC, F1, precision@k and model disagreement.

Score matrices are ``D x L`` (documents by labels); gold matrices are boolean
of the same shape. Decisions binarize at ``score >= threshold``.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata


def _check(scores, gold):
    s = np.asarray(scores, dtype=np.float64)
    g = np.asarray(gold, dtype=bool)
    if s.shape != g.shape:
        raise ValueError(f"score shape {s.shape} differs from gold shape {g.shape}")
    return s, g


def auc_binary(scores, positives):
    """Probability that a random positive outscores a random negative (ties count 1/2).

    Returns None when every item is positive or every item is negative.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    pos = np.asarray(positives, dtype=bool).ravel()
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def macro_micro_auc(scores, gold):
    """``(macro, micro, excluded)``; macro skips labels without both classes."""
    s, g = _check(scores, gold)
    per_label = [auc_binary(s[:, l], g[:, l]) for l in range(s.shape[1])]
    valid = [a for a in per_label if a is not None]
    macro = float(np.mean(valid)) if valid else None
    micro = auc_binary(s, g)
    return macro, micro, len(per_label) - len(valid)


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def _prf(tp, fp, fn):
    p = _safe_div(tp, tp + fp)
    r = _safe_div(tp, tp + fn)
    f = _safe_div(2 * p * r, p + r)
    return p, r, f


def f1_scores(scores, gold, threshold: float = 0.5) -> dict:
    s, g = _check(scores, gold)
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    pred = s >= threshold
    tp = (pred & g).sum(axis=0)
    fp = (pred & ~g).sum(axis=0)
    fn = (~pred & g).sum(axis=0)
    p, r, f = _prf(tp, fp, fn)
    mp, mr, mf = _prf(tp.sum(), fp.sum(), fn.sum())
    return {
        "macro_precision": float(p.mean()),
        "macro_recall": float(r.mean()),
        "macro_f1": float(f.mean()),
        "micro_precision": float(mp),
        "micro_recall": float(mr),
        "micro_f1": float(mf),
        "per_label": {
            "precision": p.tolist(),
            "recall": r.tolist(),
            "f1": f.tolist(),
            "support": g.sum(axis=0).astype(int).tolist(),
        },
    }


def precision_at_k(scores, gold, k: int) -> float:
    """Mean over documents of ``|top-k ∩ gold| / k``; ties go to the lower label index."""
    s, g = _check(scores, gold)
    n_labels = s.shape[1]
    if not 1 <= k <= n_labels:
        raise ValueError(f"k={k} outside 1..{n_labels}")
    top = np.argsort(-s, axis=1, kind="stable")[:, :k]
    hits = np.take_along_axis(g, top, axis=1).sum(axis=1)
    return float(np.mean(hits / k))


def disagreement_report(scores_a, scores_b, gold, threshold: float = 0.5) -> dict:
    """Precision and recall of two models restricted to cells where their decisions differ."""
    a, g = _check(scores_a, gold)
    b, _ = _check(scores_b, gold)
    pa, pb = a >= threshold, b >= threshold
    cells = pa != pb
    report = {"cells": int(cells.sum()), "total_cells": int(cells.size)}
    if not cells.any():
        return report
    labels = cells.any(axis=0)
    for key, pred in (("a", pa), ("b", pb)):
        tp = (pred & g & cells).sum(axis=0)
        fp = (pred & ~g & cells).sum(axis=0)
        fn = (~pred & g & cells).sum(axis=0)
        p, r, _f = _prf(tp, fp, fn)
        mp, mr, _mf = _prf(tp.sum(), fp.sum(), fn.sum())
        report[key] = {
            "macro_precision": float(p[labels].mean()),
            "macro_recall": float(r[labels].mean()),
            "micro_precision": float(mp),
            "micro_recall": float(mr),
        }
    return report


@dataclass
class MetricsReport:
    macro_auc: float
    micro_auc: float
    macro_f1: float
    micro_f1: float
    p_at_k: dict
    excluded_labels: int
    f1_detail: dict = field(default_factory=dict)
    disagreement: dict = None

    def to_dict(self) -> dict:
        out = {
            "macro_auc": self.macro_auc,
            "micro_auc": self.micro_auc,
            "macro_f1": self.macro_f1,
            "micro_f1": self.micro_f1,
            "p_at_k": {str(k): v for k, v in self.p_at_k.items()},
            "excluded_labels": self.excluded_labels,
            "macro_precision": self.f1_detail.get("macro_precision"),
            "macro_recall": self.f1_detail.get("macro_recall"),
            "micro_precision": self.f1_detail.get("micro_precision"),
            "micro_recall": self.f1_detail.get("micro_recall"),
            "per_label": self.f1_detail.get("per_label"),
        }
        if self.disagreement is not None:
            out["disagreement"] = self.disagreement
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def evaluate(scores, gold, ks=(5, 8), threshold: float = 0.5, compare=None) -> MetricsReport:
    s, g = _check(scores, gold)
    macro_auc, micro_auc, excluded = macro_micro_auc(s, g)
    f1 = f1_scores(s, g, threshold)
    pk = {int(k): precision_at_k(s, g, int(k)) for k in ks if int(k) <= s.shape[1]}
    dis = disagreement_report(s, compare, g, threshold) if compare is not None else None
    return MetricsReport(macro_auc, micro_auc, f1["macro_f1"], f1["micro_f1"], pk, excluded, f1, dis)
