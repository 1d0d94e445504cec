"""Binary checkpoint persistence.

Layout, all integers little-endian:

    bytes 0..3    magic "BPRN"
    bytes 4..7    format version, unsigned 32-bit (currently 1)
    bytes 8..15   metadata length in bytes, unsigned 64-bit
    ...           UTF-8 JSON metadata (canonical: sorted keys)
    ...           tensor payload: concatenated row-major float64 LE

The metadata holds the full run configuration, the vocabulary, optional
training-progress fields, and a tensor manifest of (name, rows, cols,
byte offset). Offsets are strictly increasing and non-overlapping, and
the payload length must equal the manifest total, so round-trips are
bit-exact.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    FormatError,
    PayloadLengthError,
    UnsupportedVersionError,
)

MAGIC = b"BPRN"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")


def canonical_json(doc):
    """Deterministic JSON encoding (sorted keys, no whitespace)."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


@dataclass
class CheckpointData:
    """Decoded checkpoint: metadata plus named float64 tensors."""

    config: dict
    vocab: list
    tensors: dict
    extra: dict


def save_checkpoint(path, config, vocab, tensors, extra=None):
    """Write a checkpoint; same inputs always produce identical bytes.

    ``tensors`` maps name -> 2-D float64 array. Manifest order follows
    sorted tensor names.
    """
    names = sorted(tensors)
    manifest = []
    chunks = []
    offset = 0
    for name in names:
        arr = np.ascontiguousarray(tensors[name], dtype=np.float64)
        if arr.ndim != 2:
            raise FormatError(f"tensor {name} must be 2-D, got {arr.ndim}-D")
        raw = arr.astype("<f8", copy=False).tobytes()
        manifest.append(
            {"name": name, "rows": arr.shape[0], "cols": arr.shape[1], "offset": offset}
        )
        chunks.append(raw)
        offset += len(raw)
    meta = {
        "config": config,
        "vocab": list(vocab),
        "tensors": manifest,
        "extra": extra or {},
    }
    meta_bytes = canonical_json(meta).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, len(meta_bytes)))
        fh.write(meta_bytes)
        for raw in chunks:
            fh.write(raw)


def load_checkpoint(path):
    """Read and validate a checkpoint written by :func:`save_checkpoint`."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"checkpoint {path} is too short for a header")
    magic, version, meta_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(
            f"unsupported checkpoint version {version}, this build reads {VERSION}"
        )
    meta_start = _HEADER.size
    if len(data) < meta_start + meta_len:
        raise FormatError("checkpoint metadata is truncated")
    try:
        meta = json.loads(data[meta_start : meta_start + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"checkpoint metadata is not valid JSON: {exc}") from exc
    for key in ("config", "vocab", "tensors"):
        if key not in meta:
            raise FormatError(f"checkpoint metadata is missing {key!r}")
    payload = data[meta_start + meta_len :]
    tensors = {}
    expected = 0
    for entry in meta["tensors"]:
        name, rows, cols, offset = (
            entry["name"],
            entry["rows"],
            entry["cols"],
            entry["offset"],
        )
        if offset != expected:
            raise FormatError(
                f"manifest offsets must be contiguous and increasing; tensor "
                f"{name} at {offset}, expected {expected}"
            )
        expected = offset + rows * cols * 8
        if expected > len(payload):
            raise PayloadLengthError(
                f"payload length mismatch: need {expected} bytes, have {len(payload)}"
            )
        flat = np.frombuffer(payload, dtype="<f8", count=rows * cols, offset=offset)
        tensors[name] = flat.reshape(rows, cols).astype(np.float64)
    if expected != len(payload):
        raise PayloadLengthError(
            f"payload length mismatch: manifest covers {expected} bytes, "
            f"file has {len(payload)}"
        )
    return CheckpointData(
        config=meta["config"],
        vocab=list(meta["vocab"]),
        tensors=tensors,
        extra=meta.get("extra", {}),
    )
