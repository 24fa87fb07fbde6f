"""Synthetic multi-label corpora, dataset files, vocabularies and splits.

Dataset file format (UTF-8, one document per line)::

    <doc-id> TAB <space-separated tokens> TAB <semicolon-separated label names>

Label names are ``C00`` .. ``C{L-1}`` (zero padded to at least two digits).
The label field may be empty.
"""

import math
import re
from collections import Counter
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

PAD, UNK, SECTION = "<pad>", "<unk>", "<sec>"
RESERVED = (PAD, UNK, SECTION)

_LABEL_RE = re.compile(r"C(\d+)\Z")


class SpecError(ValueError):
    pass


class ParseError(ValueError):
    pass


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class Document:
    id: str
    tokens: tuple
    gold: frozenset

    def __post_init__(self):
        if not self.tokens:
            raise InputError(f"document {self.id!r} has no tokens")


def label_name(index: int, num_labels: int = 100) -> str:
    width = max(2, len(str(max(num_labels - 1, 0))))
    return f"C{index:0{width}d}"


def parse_label(name: str) -> int:
    m = _LABEL_RE.match(name)
    if not m:
        raise InputError(f"unknown label name {name!r}")
    return int(m.group(1))


# ---------------------------------------------------------------------------
# vocabulary


class Vocab:
    """Token string <-> id mapping with ids 0, 1, 2 reserved for pad, unknown and section header."""

    def __init__(self, tokens=()):
        self._itos = list(RESERVED)
        self._stoi = {t: i for i, t in enumerate(self._itos)}
        for t in tokens:
            if t in self._stoi:
                raise ValueError(f"duplicate vocabulary token {t!r}")
            self._stoi[t] = len(self._itos)
            self._itos.append(t)

    def __len__(self):
        return len(self._itos)

    def __eq__(self, other):
        return isinstance(other, Vocab) and self._itos == other._itos

    def id(self, token: str) -> int:
        return self._stoi.get(token, 1)

    def token(self, idx: int) -> str:
        if not 0 <= idx < len(self._itos):
            raise KeyError(idx)
        return self._itos[idx]

    def encode(self, tokens) -> np.ndarray:
        return np.fromiter((self._stoi.get(t, 1) for t in tokens), dtype=np.int64, count=len(tokens))

    @property
    def assigned(self) -> list:
        return self._itos[len(RESERVED):]


def build_vocab(docs, min_freq: int = 1) -> Vocab:
    counts = Counter(t for d in docs for t in d.tokens if t not in RESERVED)
    kept = sorted((t for t, c in counts.items() if c >= min_freq), key=lambda t: (-counts[t], t))
    return Vocab(kept)


# ---------------------------------------------------------------------------
# generator


@dataclass(frozen=True)
class GenSpec:
    num_labels: int = 20
    vocab_size: int = 2000
    signature_per_label: int = 12
    doc_len_min: int = 600
    doc_len_max: int = 600
    labels_per_doc_min: int = 1
    labels_per_doc_max: int = 4
    regions: int = 6
    dispersion: int = 6
    density: int = 1
    section_headers: bool = False
    num_docs: int = 2800
    seed: int = 0

    def validate(self):
        if self.num_labels < 1 or self.num_docs < 1:
            raise SpecError("num_labels and num_docs must be >= 1")
        if self.dispersion < 1:
            raise SpecError("dispersion must be >= 1")
        if self.density < 1:
            raise SpecError("density must be >= 1")
        if self.dispersion > self.regions:
            raise SpecError(f"dispersion {self.dispersion} exceeds region count {self.regions}")
        if not 1 <= self.doc_len_min <= self.doc_len_max:
            raise SpecError("need 1 <= doc_len_min <= doc_len_max")
        if not 0 <= self.labels_per_doc_min <= self.labels_per_doc_max <= self.num_labels:
            raise SpecError("need 0 <= labels_per_doc_min <= labels_per_doc_max <= num_labels")
        if self.signature_per_label < self.dispersion * self.density:
            raise SpecError(
                f"signature_per_label {self.signature_per_label} < dispersion*density "
                f"{self.dispersion * self.density}"
            )
        if self.num_labels * self.signature_per_label >= self.vocab_size:
            raise SpecError(
                f"{self.num_labels} labels x {self.signature_per_label} signature tokens leave no noise "
                f"tokens in a vocabulary of {self.vocab_size}"
            )
        volume = self.labels_per_doc_max * self.dispersion * self.density
        width = self.doc_len_min // self.regions
        per_region = self.labels_per_doc_max * self.density + (1 if self.section_headers else 0)
        if volume > self.doc_len_min or per_region > width:
            raise SpecError(
                f"signature volume exceeds docLength: up to {volume} planted tokens "
                f"({per_region} per region of width {width}) in documents of length {self.doc_len_min}"
            )

    @classmethod
    def from_mapping(cls, mapping: dict) -> "GenSpec":
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            k = key.replace("-", "_")
            if k not in known:
                raise SpecError(f"unknown generator key {key!r}")
            kwargs[k] = _coerce(raw, getattr(cls, k))
        return cls(**kwargs)

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in asdict(self).items())


def _coerce(raw, default):
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        return str(raw).strip().lower() in {"1", "true", "yes", "on"}
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def read_keyvalue(path) -> dict:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def token_string(idx: int) -> str:
    return f"w{idx:04d}"


def region_bounds(length: int, regions: int) -> list:
    base, extra = divmod(length, regions)
    out, start = [], 0
    for r in range(regions):
        end = start + base + (1 if r < extra else 0)
        out.append((start, end))
        start = end
    return out


def signature_ids(spec: GenSpec, label: int) -> range:
    s = spec.signature_per_label
    return range(label * s, (label + 1) * s)


def generate_corpus(spec: GenSpec) -> list:
    """Documents whose gold labels are evidenced by planted signature tokens.

    For every gold label, ``dispersion`` of the ``regions`` equal-width
    regions are chosen and ``density`` distinct signature tokens of that label
    are planted at uniform free positions inside each. Every other position
    holds a noise token drawn uniformly from the non-signature ids.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n_sig = spec.num_labels * spec.signature_per_label
    noise_pool = np.arange(n_sig, spec.vocab_size)
    names = [token_string(i) for i in range(spec.vocab_size)]
    width = len(str(spec.num_docs - 1))
    docs = []
    for idx in range(spec.num_docs):
        length = int(rng.integers(spec.doc_len_min, spec.doc_len_max + 1))
        n_lab = int(rng.integers(spec.labels_per_doc_min, spec.labels_per_doc_max + 1))
        gold = sorted(int(x) for x in rng.choice(spec.num_labels, size=n_lab, replace=False))
        ids = rng.choice(noise_pool, size=length)
        taken = np.zeros(length, dtype=bool)
        regions = region_bounds(length, spec.regions)
        if spec.section_headers:
            for start, _ in regions:
                taken[start] = True
        for label in gold:
            sig = rng.choice(np.asarray(signature_ids(spec, label)), size=spec.dispersion * spec.density, replace=False)
            chosen = np.sort(rng.choice(spec.regions, size=spec.dispersion, replace=False))
            for site, r in enumerate(chosen):
                start, end = regions[r]
                free = np.flatnonzero(~taken[start:end]) + start
                pos = rng.choice(free, size=spec.density, replace=False)
                taken[pos] = True
                ids[pos] = sig[site * spec.density:(site + 1) * spec.density]
        tokens = [names[i] for i in ids]
        if spec.section_headers:
            for start, _ in regions:
                tokens[start] = SECTION
        docs.append(Document(f"doc{idx:0{width}d}", tuple(tokens), frozenset(gold)))
    return docs


def audit_corpus(docs, spec: GenSpec) -> dict:
    """Scan generated documents for the construction guarantees.

    Returns minimum number of regions covered by any gold label's signature
    tokens, and the number of signature tokens of non-gold labels found.
    """
    sig_owner = {}
    for label in range(spec.num_labels):
        for i in signature_ids(spec, label):
            sig_owner[token_string(i)] = label
    min_regions = None
    stray = 0
    for d in docs:
        regions = region_bounds(len(d.tokens), spec.regions)
        seen = {}
        for r, (start, end) in enumerate(regions):
            for t in d.tokens[start:end]:
                owner = sig_owner.get(t)
                if owner is None:
                    continue
                if owner in d.gold:
                    seen.setdefault(owner, set()).add(r)
                else:
                    stray += 1
        for label in d.gold:
            covered = len(seen.get(label, ()))
            min_regions = covered if min_regions is None else min(min_regions, covered)
    return {"documents": len(docs), "dispersion": spec.dispersion, "min_regions_covered": min_regions or 0,
            "stray_signature_tokens": stray}


# ---------------------------------------------------------------------------
# files


def write_dataset(docs, path, num_labels: int = 100):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in docs:
            labels = ";".join(label_name(l, num_labels) for l in sorted(d.gold))
            fh.write(f"{d.id}\t{' '.join(d.tokens)}\t{labels}\n")


def read_dataset(path, num_labels: int = None) -> list:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
            doc_id, text, label_field = parts
            tokens = tuple(text.split())
            if not doc_id or not tokens:
                raise ParseError(f"{path}:{lineno}: empty document id or token field")
            gold = set()
            if label_field:
                for name in label_field.split(";"):
                    if not name:
                        raise ParseError(f"{path}:{lineno}: empty label name in {label_field!r}")
                    try:
                        idx = parse_label(name)
                    except InputError:
                        raise ParseError(f"{path}:{lineno}: malformed label {name!r}") from None
                    if num_labels is not None and idx >= num_labels:
                        raise InputError(f"{path}:{lineno}: label {name} outside {num_labels} labels")
                    if idx in gold:
                        raise ParseError(f"{path}:{lineno}: duplicate label {name}")
                    gold.add(idx)
            docs.append(Document(doc_id, tokens, frozenset(gold)))
    return docs


def split_dataset(docs, ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Seeded shuffle by document id, then cut by ratio.

    Valid and test sizes are ``floor(n * ratio)``; train takes the rest.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise InputError(f"ratios must be three positive numbers summing to 1, got {ratios}")
    if len(docs) < 3:
        raise InputError(f"need at least 3 documents to split, got {len(docs)}")
    ordered = sorted(docs, key=lambda d: d.id)
    perm = np.random.default_rng(seed).permutation(len(ordered))
    n = len(ordered)
    n_valid = math.floor(n * ratios[1] + 1e-9)
    n_test = math.floor(n * ratios[2] + 1e-9)
    n_train = n - n_valid - n_test
    picked = [ordered[i] for i in perm]
    return picked[:n_train], picked[n_train:n_train + n_valid], picked[n_train + n_valid:]


def gold_matrix(docs, num_labels: int) -> np.ndarray:
    y = np.zeros((len(docs), num_labels), dtype=bool)
    for i, d in enumerate(docs):
        for l in d.gold:
            y[i, l] = True
    return y
