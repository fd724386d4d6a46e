"""Versioned flat-binary weight checkpoints.

Layout: magic "QFWT", u32 version, u32 layer count, then per layer the
weight tensor followed by the bias vector, each as u32 ndim, ndim x u32
dims, and the row-major payload as little-endian float64.
"""

import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .network import LayerParams, Weights

MAGIC = b"QFWT"
VERSION = 1


def _pack_array(arr: np.ndarray) -> bytes:
    dims = arr.shape
    head = struct.pack(f"<I{len(dims)}I", len(dims), *dims)
    return head + np.ascontiguousarray(arr, dtype="<f8").tobytes()


class _Reader:
    def __init__(self, raw: bytes, path: Path):
        self.raw = raw
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise CheckpointError(f"{self.path}: corrupt checkpoint (truncated)")
        chunk = self.raw[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def array(self) -> np.ndarray:
        ndim = self.u32()
        if ndim > 8:
            raise CheckpointError(f"{self.path}: corrupt checkpoint (ndim {ndim})")
        dims = struct.unpack(f"<{ndim}I", self.take(4 * ndim))
        count = int(np.prod(dims)) if ndim else 1
        data = np.frombuffer(self.take(8 * count), dtype="<f8")
        return data.reshape(dims).astype(np.float64)


def save_weights(weights: Weights, path) -> None:
    path = Path(path)
    parts = [MAGIC, struct.pack("<II", VERSION, len(weights))]
    for params in weights:
        parts.append(_pack_array(params.w))
        parts.append(_pack_array(params.b))
    path.write_bytes(b"".join(parts))


def load_weights(path) -> Weights:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a weight checkpoint (bad magic {raw[:4]!r})")
    reader = _Reader(raw, path)
    reader.take(4)
    version = reader.u32()
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    n_layers = reader.u32()
    weights = []
    for _ in range(n_layers):
        w = reader.array()
        b = reader.array()
        weights.append(LayerParams(w, b))
    if reader.pos != len(raw):
        raise CheckpointError(f"{path}: corrupt checkpoint (trailing bytes)")
    return weights
