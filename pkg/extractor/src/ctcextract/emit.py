"""Output writers for the extraction pipeline.

All writers go through a write-then-rename so a crashed run never leaves a
half-written file behind. The posterior container mirrors the scorer's
binary layout byte for byte: 20-byte little-endian header (magic GOPP,
version, frame count, width, flags) followed by float32 rows.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

GOPP_MAGIC = b"GOPP"
GOPP_VERSION = 1
FLAG_NATURAL_LOG = 0x01
FLAG_NORMALIZED = 0x02
_HEADER = struct.Struct("<4sIIIB3x")

LOG_FLOOR = -30.0


def atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_gopp(path: str, log_probs: np.ndarray) -> None:
    """Write a natural-log posterior matrix in the binary container format."""
    arr = np.asarray(log_probs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 2:
        raise ValueError(f"posterior matrix has unusable shape {arr.shape}")
    arr = np.maximum(arr, LOG_FLOOR)
    frames, width = arr.shape
    flags = FLAG_NATURAL_LOG | FLAG_NORMALIZED
    header = _HEADER.pack(GOPP_MAGIC, GOPP_VERSION, frames, width, flags)
    atomic_write_bytes(path, header + arr.astype("<f4").tobytes())


def write_vocab(path: str, symbols, blank_index: int = 0) -> None:
    doc = {"symbols": list(symbols), "blank_index": int(blank_index)}
    atomic_write_text(path, json.dumps(doc, ensure_ascii=False, indent=2) + "\n")


def write_canonical(path: str, rows) -> None:
    """rows: iterable of (utterance_id, symbol tuple)."""
    lines = [f"{utt}\t{' '.join(symbols)}" for utt, symbols in rows]
    atomic_write_text(path, "\n".join(lines) + "\n")
