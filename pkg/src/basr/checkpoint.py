"""Binary parameter checkpoints.

Single little-endian file: header {magic "BASR", version u32, count u32},
then per parameter {name_len u16, name utf-8, rank u8, dims u32..., f32 values}.
Values are stored as float32 and widened back to float64 on load.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .autodiff import Parameter
from .errors import CheckpointError

MAGIC = b"BASR"
VERSION = 1


def save_params(path: str | Path, params: dict[str, Parameter]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(params)))
        for name, p in params.items():
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", p.data.ndim))
            fh.write(struct.pack(f"<{p.data.ndim}I", *p.data.shape))
            fh.write(p.data.astype("<f4").tobytes(order="C"))


def load_params(path: str | Path) -> dict[str, Parameter]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {raw[:4]!r}")
    version, count = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    params: dict[str, Parameter] = {}
    offset = 12
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", raw, offset)
            offset += 2
            name = raw[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<B", raw, offset)
            offset += 1
            dims = struct.unpack_from(f"<{rank}I", raw, offset)
            offset += 4 * rank
            n = int(np.prod(dims)) if rank else 1
            values = np.frombuffer(raw, dtype="<f4", count=n, offset=offset)
            offset += 4 * n
            params[name] = Parameter(name, values.astype(np.float64).reshape(dims))
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"{path}: truncated or corrupt checkpoint") from exc
    if offset != len(raw):
        raise CheckpointError(f"{path}: trailing bytes after {count} parameters")
    return params
