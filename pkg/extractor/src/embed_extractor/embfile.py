"""Writer for the embedding container coresel reads, plus the manifest.

The layout is the interchange contract between the two packages: a 20-byte
little-endian header (magic "EMB1", version 1, N, D, class count), N uint32
labels, N*D float32 values row-major, and a CRC32 trailer over everything
before it. This module deliberately does not import coresel; the bytes are
the interface.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib

import numpy as np

MAGIC = b"EMB1"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def encode(X: np.ndarray, labels: np.ndarray, num_classes: int) -> bytes:
    X = np.ascontiguousarray(X, dtype="<f4")
    labels = np.asarray(labels)
    n, d = X.shape
    if labels.shape != (n,):
        raise ValueError("labels must have one entry per row")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError("labels out of range")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite values")
    body = _HEADER.pack(MAGIC, VERSION, n, d, num_classes)
    body += labels.astype("<u4").tobytes() + X.tobytes()
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def _atomic_write(path: str, data: bytes):
    dest = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=dest, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_embeddings(path: str, X: np.ndarray, labels: np.ndarray, num_classes: int):
    _atomic_write(path, encode(X, labels, num_classes))


def manifest_timestamp(fallback_epoch: float) -> str:
    import datetime

    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(fallback_epoch)
    return (
        datetime.datetime.fromtimestamp(t, tz=datetime.timezone.utc)
        .strftime("%Y-%m-%dT%H:%M:%SZ")
    )


def output_entry(path: str) -> dict:
    with open(path, "rb") as f:
        blob = f.read()
    return {
        "path": os.path.basename(path),
        "bytes": len(blob),
        "crc32": f"{zlib.crc32(blob) & 0xFFFFFFFF:#010x}",
    }


def write_manifest(path: str, doc: dict):
    doc = {"format": "manifest/1", **doc}
    text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    _atomic_write(path, text.encode("utf-8"))
