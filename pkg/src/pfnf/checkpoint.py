"""Single-file binary checkpoint format.

Layout: magic b"PFNF", format version (u32 LE), metadata length (u32 LE),
UTF-8 JSON metadata, then raw little-endian float32 blocks for each parameter
in the order declared by metadata["parameters"] (name + shape each).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"PFNF"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, metadata: dict, params: list[tuple[str, np.ndarray]]) -> None:
    """Write parameters (converted to float32) with JSON metadata."""
    meta = dict(metadata)
    meta["parameters"] = [{"name": n, "shape": list(a.shape)} for n, a in params]
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for _, a in params:
            f.write(np.ascontiguousarray(a, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read metadata and the named float32 parameter arrays."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes (not a checkpoint)")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    (meta_len,) = struct.unpack_from("<I", raw, 8)
    meta = json.loads(raw[12:12 + meta_len].decode("utf-8"))
    offset = 12 + meta_len
    params: dict[str, np.ndarray] = {}
    for spec in meta["parameters"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if end > len(raw):
            raise CheckpointError(f"{path}: truncated parameter block '{spec['name']}'")
        arr = np.frombuffer(raw[offset:end], dtype="<f4").reshape(shape)
        params[spec["name"]] = np.ascontiguousarray(arr)
        offset = end
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    return meta, params
