"""Versioned binary checkpoint: layer spec list + checksummed tensors."""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

MAGIC = b"QLCK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_tensors(path, layer_spec: str, tensors: list[tuple[str, np.ndarray]],
                 extra: dict | None = None) -> None:
    """Write little-endian float64 tensors with a per-tensor CRC32."""
    blobs = []
    entries = []
    offset = 0
    for name, arr in tensors:
        blob = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append({
            "name": name,
            "shape": list(arr.shape),
            "offset": offset,
            "crc32": zlib.crc32(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps({
        "layer_spec": layer_spec,
        "tensors": entries,
        "extra": extra or {},
    }, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_tensors(path) -> tuple[str, dict[str, np.ndarray], dict]:
    """Read a checkpoint back; checksum failures raise CheckpointError."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, header_len = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(raw[12:12 + header_len].decode("utf-8"))
    body = raw[12 + header_len:]
    tensors: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        size = 8 * int(np.prod(entry["shape"])) if entry["shape"] else 8
        blob = body[entry["offset"]:entry["offset"] + size]
        if zlib.crc32(blob) != entry["crc32"]:
            raise CheckpointError(f"{path}: checksum mismatch for tensor {entry['name']!r}")
        tensors[entry["name"]] = np.frombuffer(blob, dtype="<f8").reshape(entry["shape"]).copy()
    return header["layer_spec"], tensors, header.get("extra", {})
