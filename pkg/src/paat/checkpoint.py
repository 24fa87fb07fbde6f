"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"PAATCKPT"                     magic, 8 bytes
    u32 version                     currently 1
    u32 tensor count
    u32 text length, UTF-8 text     model config as key=value lines, then an
                                    optional "[vocab]" line and one token per line
    per tensor:
        u16 name length, UTF-8 name
        u8 rank, rank x u64 dims
        prod(dims) x f64 values, row-major
"""

import struct
from pathlib import Path

import numpy as np

from .data import RESERVED, Vocab
from .model import PaatConfig, PaatModel, param_shapes

MAGIC = b"PAATCKPT"
VERSION = 1


class FormatError(ValueError):
    pass


def save_checkpoint(model: PaatModel, path, vocab: Vocab = None) -> None:
    text = model.config.to_text()
    if vocab is not None:
        text += "[vocab]\n" + "".join(t + "\n" for t in vocab.assigned)
    blob = text.encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(model.params)), struct.pack("<I", len(blob)), blob]
    for name, arr in model.params.items():
        raw = name.encode("utf-8")
        arr = np.ascontiguousarray(arr, dtype="<f8")
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated checkpoint: need {n} bytes at offset {self.pos}, have {len(self.data) - self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path, expect: PaatConfig = None):
    """Read ``(model, vocab)``; ``vocab`` is None when none was stored.

    With ``expect`` given, every stored tensor must have the shape that
    configuration requires.
    """
    r = _Reader(Path(path).read_bytes())
    if r.take(len(MAGIC)) != MAGIC:
        raise FormatError("bad magic: not a PAAT checkpoint")
    version, count = r.unpack("<II")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    (text_len,) = r.unpack("<I")
    try:
        text = r.take(text_len).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"config block is not UTF-8: {exc}") from None
    cfg_text, sep, vocab_text = text.partition("[vocab]\n")
    try:
        config = PaatConfig.from_text(cfg_text)
    except ValueError as exc:
        raise FormatError(f"bad embedded config: {exc}") from None
    vocab = None
    if sep:
        vocab = Vocab([t for t in vocab_text.split("\n") if t and t not in RESERVED])
    params = {}
    for _ in range(count):
        (n,) = r.unpack("<H")
        name = r.take(n).decode("utf-8")
        (rank,) = r.unpack("<B")
        dims = r.unpack(f"<{rank}Q")
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        params[name] = np.frombuffer(r.take(8 * size), dtype="<f8").astype(np.float64).reshape(dims)
    if r.pos != len(r.data):
        raise FormatError(f"{len(r.data) - r.pos} trailing bytes after last tensor")
    target = expect if expect is not None else config
    shapes = param_shapes(target)
    if set(shapes) != set(params):
        raise FormatError(f"tensor names {sorted(params)} disagree with config ({sorted(shapes)})")
    for name, (shape, _) in shapes.items():
        if params[name].shape != shape:
            raise FormatError(f"tensor {name} has shape {params[name].shape}, config requires {shape}")
    return PaatModel(target, params), vocab
