"""Frame-level phoneme log-posterior matrices and their on-disk formats.

The canonical on-disk format is a small little-endian binary container
(magic ``GOPP``); a JSON text format exists for hand-written fixtures.
Values are natural-log probabilities everywhere inside the library; linear
inputs are converted once at load time.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .inventory import PhonemeInventory

MAGIC = b"GOPP"
BINARY_VERSION = 1
FLAG_NATURAL_LOG = 0x01
FLAG_NORMALIZED = 0x02
_HEADER = struct.Struct("<4sIIIB3x")

# Probabilities below e^-30 are clamped to log value -30 so the forward pass
# never mixes -inf into its arithmetic; structural impossibility (a sequence
# that cannot fit in T frames) is the only source of -inf downstream.
LOG_FLOOR = -30.0

# A row's linear sum may deviate from 1 by at most this much before the
# loader demands renormalization.
ROW_SUM_TOLERANCE = 1e-3


class PosteriorFormatError(ValueError):
    """A posterior file is malformed or inconsistent with its vocabulary."""


class DegenerateFrameError(ValueError):
    """A frame carries no usable probability mass (all entries at the floor)."""


@dataclass(frozen=True)
class PosteriorMatrix:
    """T x (V+1) grid of natural-log posteriors, rows = frames.

    Columns follow inventory order with the blank column at ``blank_index``.
    Instances are immutable and safe to share across workers.
    """

    log_probs: np.ndarray
    utterance_id: str = ""
    normalized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.log_probs, dtype=np.float64)
        if arr.ndim != 2:
            raise PosteriorFormatError("posterior matrix must be 2-dimensional")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise PosteriorFormatError("posterior matrix needs >= 1 frame and >= 2 columns")
        if np.isnan(arr).any() or np.isposinf(arr).any():
            raise PosteriorFormatError("posterior matrix contains NaN or +inf entries")
        arr = np.maximum(arr, LOG_FLOOR)
        arr.setflags(write=False)
        object.__setattr__(self, "log_probs", arr)

    @property
    def frame_count(self) -> int:
        return self.log_probs.shape[0]

    @property
    def width(self) -> int:
        return self.log_probs.shape[1]

    def row_log_sums(self) -> np.ndarray:
        """Log-sum-exp of each row (0 for a perfectly normalized frame)."""
        m = self.log_probs.max(axis=1)
        return m + np.log(np.exp(self.log_probs - m[:, None]).sum(axis=1))


def renormalize(matrix: PosteriorMatrix) -> PosteriorMatrix:
    """Shift each row so its log-sum-exp is 0; per-row argmax is unchanged."""
    floor_rows = np.all(matrix.log_probs <= LOG_FLOOR, axis=1)
    if floor_rows.any():
        frame = int(np.argmax(floor_rows))
        raise DegenerateFrameError(
            f"frame {frame} of {matrix.utterance_id or '<matrix>'} has no probability mass"
        )
    shifted = matrix.log_probs - matrix.row_log_sums()[:, None]
    return PosteriorMatrix(shifted, matrix.utterance_id, normalized=True)


def _finish_load(log_probs, utterance_id, vocab, want_renormalize):
    if vocab is not None and log_probs.shape[1] != vocab.width:
        raise PosteriorFormatError(
            f"posterior width {log_probs.shape[1]} does not match "
            f"vocabulary width {vocab.width}"
        )
    matrix = PosteriorMatrix(log_probs, utterance_id)
    if want_renormalize:
        return renormalize(matrix)
    deviation = np.abs(np.expm1(matrix.row_log_sums())).max()
    if deviation > ROW_SUM_TOLERANCE:
        raise PosteriorFormatError(
            f"row sums deviate from 1 by up to {deviation:.3g}; "
            "pass renormalize=True to accept this input"
        )
    return PosteriorMatrix(matrix.log_probs, utterance_id, normalized=True)


def _to_log(values, source):
    values = np.asarray(values, dtype=np.float64)
    if (values < 0).any():
        raise PosteriorFormatError(f"{source}: negative linear probabilities")
    with np.errstate(divide="ignore"):
        return np.log(values)


def load_posteriors(path, vocab: PhonemeInventory | None = None,
                    renormalize: bool = False) -> PosteriorMatrix:
    """Load a posterior matrix from the binary or text format.

    The two formats are distinguished by the ``GOPP`` magic. Rows failing the
    normalization check are an error unless ``renormalize`` is set.
    """
    with open(path, "rb") as fh:
        head = fh.read(4)
        fh.seek(0)
        if head == MAGIC:
            raw = fh.read()
        else:
            raw = None
    if raw is not None:
        matrix, utt = _parse_binary(raw, str(path))
    else:
        matrix, utt = _parse_text(path)
    return _finish_load(matrix, utt, vocab, renormalize)


def _parse_binary(raw, source):
    if len(raw) < _HEADER.size:
        raise PosteriorFormatError(f"{source}: truncated header")
    magic, version, frames, width, flags = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise PosteriorFormatError(f"{source}: bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise PosteriorFormatError(f"{source}: unsupported version {version}")
    expected = _HEADER.size + 4 * frames * width
    if len(raw) != expected:
        raise PosteriorFormatError(
            f"{source}: expected {expected} bytes for {frames}x{width}, got {len(raw)}"
        )
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).astype(np.float64)
    values = values.reshape(frames, width)
    if not flags & FLAG_NATURAL_LOG:
        values = _to_log(values, source)
    # utterance id is carried by the filename for the binary format
    utt = _stem(source)
    return values, utt


def _parse_text(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise PosteriorFormatError(f"{path}: neither GOPP binary nor JSON text: {exc}") from None
    if not isinstance(doc, dict) or "matrix" not in doc:
        raise PosteriorFormatError(f"{path}: text format requires a 'matrix' field")
    rows = doc["matrix"]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise PosteriorFormatError(f"{path}: matrix rows are empty or ragged")
    values = np.asarray(rows, dtype=np.float64)
    if not doc.get("log", False):
        values = _to_log(values, str(path))
    return values, str(doc.get("utterance_id", _stem(str(path))))


def _stem(source):
    name = source.replace("\\", "/").rsplit("/", 1)[-1]
    return name.rsplit(".", 1)[0] if "." in name else name


def save_posteriors(matrix: PosteriorMatrix, path) -> None:
    """Write the canonical binary format (float32, row-major, little-endian)."""
    flags = FLAG_NATURAL_LOG | (FLAG_NORMALIZED if matrix.normalized else 0)
    header = _HEADER.pack(MAGIC, BINARY_VERSION, matrix.frame_count, matrix.width, flags)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(matrix.log_probs.astype("<f4").tobytes())


def save_posteriors_text(matrix: PosteriorMatrix, path) -> None:
    """Write the JSON fixture format (natural-log values)."""
    doc = {
        "utterance_id": matrix.utterance_id,
        "log": True,
        "matrix": [[float(v) for v in row] for row in matrix.log_probs],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
