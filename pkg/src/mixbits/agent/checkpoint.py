"""Versioned flat-binary agent checkpoints (policy + value parameters).

Layout: magic "QFAG", u32 version, u32 action count, u32 array count,
then named arrays: u16 name length, utf-8 name, u32 ndim, ndim x u32
dims, row-major little-endian float64 payload. Round-trips bit-exact.
"""

import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointError

MAGIC = b"QFAG"
VERSION = 1


def save_checkpoint(agent, path) -> None:
    path = Path(path)
    named = [(f"policy.{k}", v) for k, v in sorted(agent.policy.params.items())]
    named += [(f"value.{k}", v) for k, v in sorted(agent.value.params.items())]
    parts = [MAGIC, struct.pack("<III", VERSION, agent.n_actions, len(named))]
    for name, arr in named:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    path.write_bytes(b"".join(parts))


def load_checkpoint(agent, path) -> None:
    """Restore policy/value parameters in place; shapes must match."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not an agent checkpoint (bad magic {raw[:4]!r})")
    pos = 4

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(raw):
            raise CheckpointError(f"{path}: corrupt checkpoint (truncated)")
        chunk = raw[pos : pos + n]
        pos += n
        return chunk

    version, n_actions, n_arrays = struct.unpack("<III", take(12))
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    if n_actions != agent.n_actions:
        raise CheckpointError(
            f"{path}: checkpoint has {n_actions} actions, agent expects {agent.n_actions}"
        )
    for _ in range(n_arrays):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        (ndim,) = struct.unpack("<I", take(4))
        if ndim > 8:
            raise CheckpointError(f"{path}: corrupt checkpoint (ndim {ndim})")
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim))
        count = int(np.prod(dims)) if ndim else 1
        arr = np.frombuffer(take(8 * count), dtype="<f8").reshape(dims).astype(np.float64)
        scope, _, key = name.partition(".")
        target = agent.policy.params if scope == "policy" else agent.value.params
        if key not in target or target[key].shape != arr.shape:
            raise CheckpointError(f"{path}: unexpected parameter {name!r}")
        target[key] = arr
    if pos != len(raw):
        raise CheckpointError(f"{path}: corrupt checkpoint (trailing bytes)")
