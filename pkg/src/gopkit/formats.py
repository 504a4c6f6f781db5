"""Text file formats shared across the toolkit.

Three TSV shapes and one JSON-lines shape:

* canonical sequences: ``utterance_id<TAB>sym sym sym ...``
* alignments:          ``utterance_id<TAB>phoneme<TAB>start_frame<TAB>end_frame``
* labels:              ``utterance_id<TAB>position<TAB>phoneme<TAB>binary_label``
                       with an optional fifth ``human_score`` column
* score reports:       one JSON document per line, sorted by utterance id

Blank lines and lines starting with '#' are ignored everywhere. All files
are UTF-8.
"""

from __future__ import annotations

import json
from pathlib import Path

from .ctc import AlignmentSegment
from .gop import GopReport, report_from_document
from .inventory import CanonicalSequence, InventoryError, PhonemeInventory


class FormatError(ValueError):
    pass


def _rows(path):
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split("\t")


def read_canonical_sequences(path, inventory: PhonemeInventory) -> dict[str, CanonicalSequence]:
    """Parse a canonical-sequence TSV into an id-keyed mapping (file order)."""
    out: dict[str, CanonicalSequence] = {}
    for lineno, fields in _rows(path):
        if len(fields) != 2:
            raise FormatError(f"{path}:{lineno}: expected 2 tab-separated fields")
        utt, symbols = fields
        if utt in out:
            raise FormatError(f"{path}:{lineno}: duplicate utterance id {utt!r}")
        try:
            seq = CanonicalSequence.from_symbols(symbols.split(), inventory, utterance_id=utt)
        except InventoryError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        out[utt] = seq
    return out


def write_canonical_sequences(path, sequences, inventory: PhonemeInventory) -> None:
    lines = []
    for seq in sequences:
        symbols = " ".join(inventory.symbol(i) for i in seq.phoneme_ids)
        lines.append(f"{seq.utterance_id}\t{symbols}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_labels(path) -> list[dict]:
    """Label rows: utterance_id, position, phoneme, binary_label in {0,1},
    optional human_score in [0,2]."""
    rows = []
    for lineno, fields in _rows(path):
        if len(fields) not in (4, 5):
            raise FormatError(f"{path}:{lineno}: expected 4 or 5 tab-separated fields")
        utt, pos, phoneme, label = fields[:4]
        try:
            pos_v = int(pos)
            label_v = int(label)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-integer position or label") from exc
        if label_v not in (0, 1):
            raise FormatError(f"{path}:{lineno}: binary label must be 0 or 1")
        human = None
        if len(fields) == 5 and fields[4] != "":
            try:
                human = float(fields[4])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric human score") from exc
        rows.append(
            {
                "utterance_id": utt,
                "pos": pos_v,
                "phoneme": phoneme,
                "label": label_v,
                "human_score": human,
            }
        )
    return rows


def write_labels(path, rows) -> None:
    lines = []
    for row in rows:
        base = (
            f"{row['utterance_id']}\t{row['pos']}\t{row['phoneme']}\t{row['label']}"
        )
        human = row.get("human_score")
        lines.append(base if human is None else f"{base}\t{human}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_alignments(path, inventory: PhonemeInventory) -> dict[str, list[AlignmentSegment]]:
    """Alignment TSV keyed by utterance, segments in file order."""
    out: dict[str, list[AlignmentSegment]] = {}
    for lineno, fields in _rows(path):
        if len(fields) != 4:
            raise FormatError(f"{path}:{lineno}: expected 4 tab-separated fields")
        utt, phoneme, start, end = fields
        try:
            pid = inventory.index(phoneme)
        except InventoryError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        try:
            seg = AlignmentSegment(pid, int(start), int(end))
        except ValueError as exc:
            raise FormatError(
                f"{path}:{lineno}: bad segment for phoneme {phoneme!r}: {exc}"
            ) from exc
        out.setdefault(utt, []).append(seg)
    return out


def write_alignments(path, alignments: dict, inventory: PhonemeInventory) -> None:
    lines = []
    for utt in sorted(alignments):
        for seg in alignments[utt]:
            sym = inventory.symbol(seg.phoneme_id)
            lines.append(f"{utt}\t{sym}\t{seg.start_frame}\t{seg.end_frame}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_reports(path, reports, inventory: PhonemeInventory | None = None) -> None:
    """Write score reports as JSON lines sorted by utterance id."""
    ordered = sorted(reports, key=lambda r: r.utterance_id)
    lines = [r.to_json_line(inventory) for r in ordered]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_reports(path, inventory: PhonemeInventory) -> list[GopReport]:
    reports = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        reports.append(report_from_document(doc, inventory))
    return reports
