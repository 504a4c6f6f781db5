"""Extraction manifests.

A manifest is a tab-separated text file, one utterance per line:

    utterance_id <TAB> audio_path <TAB> transcript

Blank lines and lines starting with '#' are skipped. Utterance ids must
be unique; relative audio paths are resolved against the manifest's own
directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field


class ManifestError(ValueError):
    pass


@dataclass
class ManifestEntry:
    utterance_id: str
    audio_path: str
    transcript: str


@dataclass
class ExtractionManifest:
    model: str
    output_dir: str
    entries: list = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            if entry.utterance_id in seen:
                raise ManifestError(f"duplicate utterance id {entry.utterance_id!r}")
            seen.add(entry.utterance_id)


def read_manifest(path: str, model: str, output_dir: str) -> ExtractionManifest:
    entries = []
    base = os.path.dirname(os.path.abspath(path))
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ManifestError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}"
                )
            utt, audio, text = (p.strip() for p in parts)
            if not utt:
                raise ManifestError(f"{path}:{lineno}: empty utterance id")
            if not os.path.isabs(audio):
                audio = os.path.join(base, audio)
            entries.append(ManifestEntry(utt, audio, text))
    return ExtractionManifest(model=model, output_dir=output_dir, entries=entries)
