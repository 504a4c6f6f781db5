"""Extraction pipeline: manifest in, posterior files and canonical sequences out.

``extract_posteriors`` runs the recognition backend over every clip in a
manifest and writes one ``.gopp`` file per utterance plus a ``vocab.json``
sidecar describing the kept columns. ``phonemize_transcripts`` converts the
manifest's transcripts into a ``canon.tsv`` resolved against that sidecar.

Sentence-boundary and unknown tokens are stripped from the model output and
the rows renormalized; the pad token survives as the single blank column.
The sidecar is the source of truth for column order within a run, so the
two steps can only disagree if the output directory was edited by hand.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .audio import TARGET_RATE, load_waveform, resample
from .backends import BLANK_TOKEN, resolve_backend
from .emit import LOG_FLOOR, write_canonical, write_gopp, write_vocab
from .lexicon import LexiconError, phonemize, supported_language
from .manifest import ExtractionManifest


class ExtractorError(RuntimeError):
    pass


# removed from model output before renormalization; the pad token stays as blank
STRIP_TOKENS = ("<s>", "</s>", "<unk>", "|")

VOCAB_FILENAME = "vocab.json"
CANON_FILENAME = "canon.tsv"


@dataclass
class UtteranceExtraction:
    utterance_id: str
    path: str
    frames: int
    width: int
    blank_fraction: float
    source_rate: int
    resampled: bool


@dataclass
class ExtractionResult:
    vocab_path: str
    symbols: tuple
    utterances: list = field(default_factory=list)
    notes: list = field(default_factory=list)


@dataclass
class PhonemizeResult:
    canon_path: str
    sequences: dict = field(default_factory=dict)
    unresolved: dict = field(default_factory=dict)


def _kept_columns(vocabulary):
    """Indices to keep (blank first) and their symbols."""
    try:
        blank = vocabulary.index(BLANK_TOKEN)
    except ValueError:
        raise ExtractorError(
            f"backend vocabulary has no {BLANK_TOKEN!r} token to use as the blank"
        ) from None
    drop = set(STRIP_TOKENS)
    keep = [blank] + [
        i for i, sym in enumerate(vocabulary) if i != blank and sym not in drop
    ]
    return keep, tuple(vocabulary[i] for i in keep)


def extract_posteriors(manifest: ExtractionManifest, backend=None) -> ExtractionResult:
    """Run the backend over every manifest entry and write the output files.

    Returns a result whose ``utterances`` carry per-clip sanity numbers
    (frame count, blank fraction) and whose ``notes`` record resampling.
    """
    if backend is None:
        backend = resolve_backend(manifest.model)
    keep, symbols = _kept_columns(tuple(backend.vocabulary))

    os.makedirs(manifest.output_dir, exist_ok=True)
    vocab_path = os.path.join(manifest.output_dir, VOCAB_FILENAME)
    write_vocab(vocab_path, symbols, blank_index=0)
    result = ExtractionResult(vocab_path=vocab_path, symbols=symbols)

    for entry in manifest.entries:
        wave, rate = load_waveform(entry.audio_path)
        resampled = rate != backend.sample_rate
        if resampled:
            wave = resample(wave, rate, backend.sample_rate)
            result.notes.append(
                f"{entry.utterance_id}: resampled {rate} -> {backend.sample_rate} Hz"
            )
        probs = np.asarray(backend.infer(wave), dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] != len(backend.vocabulary):
            raise ExtractorError(
                f"{entry.utterance_id}: backend returned shape {probs.shape}, "
                f"expected (T, {len(backend.vocabulary)})"
            )
        kept = probs[:, keep]
        mass = kept.sum(axis=1)
        if (mass < 1e-12).any():
            frame = int(np.argmin(mass))
            raise ExtractorError(
                f"{entry.utterance_id}: frame {frame} holds no probability mass "
                "outside the stripped tokens; model/vocab mismatch"
            )
        kept = kept / mass[:, None]
        with np.errstate(divide="ignore"):
            log_probs = np.maximum(np.log(kept), LOG_FLOOR)

        path = os.path.join(manifest.output_dir, f"{entry.utterance_id}.gopp")
        write_gopp(path, log_probs)
        blank_fraction = float(np.mean(np.argmax(kept, axis=1) == 0))
        result.utterances.append(
            UtteranceExtraction(
                utterance_id=entry.utterance_id,
                path=path,
                frames=kept.shape[0],
                width=kept.shape[1],
                blank_fraction=blank_fraction,
                source_rate=rate,
                resampled=resampled,
            )
        )
    return result


def phonemize_transcripts(manifest: ExtractionManifest, language: str = "en") -> PhonemizeResult:
    """Phonemize every transcript against the run's vocab sidecar.

    Utterances whose phonemization uses symbols absent from the sidecar are
    reported in ``unresolved`` and left out of ``canon.tsv`` rather than
    written with holes.
    """
    if not supported_language(language):
        raise ExtractorError(f"unsupported language tag {language!r}")
    vocab_path = os.path.join(manifest.output_dir, VOCAB_FILENAME)
    if not os.path.exists(vocab_path):
        raise ExtractorError(
            f"no {VOCAB_FILENAME} in {manifest.output_dir}; run extract_posteriors first"
        )
    with open(vocab_path, encoding="utf-8") as handle:
        known = set(json.load(handle)["symbols"])

    result = PhonemizeResult(
        canon_path=os.path.join(manifest.output_dir, CANON_FILENAME)
    )
    rows = []
    for entry in manifest.entries:
        try:
            symbols = phonemize(entry.transcript, language)
        except LexiconError as exc:
            raise ExtractorError(f"{entry.utterance_id}: {exc}") from exc
        missing = tuple(dict.fromkeys(s for s in symbols if s not in known))
        if missing:
            result.unresolved[entry.utterance_id] = missing
            continue
        result.sequences[entry.utterance_id] = symbols
        rows.append((entry.utterance_id, symbols))
    write_canonical(result.canon_path, rows)
    return result
