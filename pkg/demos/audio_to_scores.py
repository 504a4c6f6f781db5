"""End-to-end run: WAV files in, per-phoneme pronunciation scores out.

Builds three tiny clips, extracts posterior tensors and canonical
sequences with ctcextract, then scores them with gopkit. The two packages
only meet through the files on disk: .gopp tensors, vocab.json, canon.tsv.
"""

import tempfile
import wave
from pathlib import Path

import numpy as np

from ctcextract import extract_posteriors, phonemize_transcripts, read_manifest
from gopkit import (
    PhonemeInventory,
    gop_pp_af,
    load_posteriors,
    read_canonical_sequences,
)


def write_wav(path, rate, samples):
    pcm = (np.clip(samples, -1.0, 1.0) * 32767).astype("<i2")
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(rate)
        handle.writeframes(pcm.tobytes())


def main():
    root = Path(tempfile.mkdtemp(prefix="audio2scores-"))
    t = np.arange(16000) / 16000.0
    # chirps rather than steady tones so the frames traverse different
    # feature buckets and the synthetic backend emits a varied phone stream
    write_wav(root / "rising.wav", 16000, 0.5 * np.sin(2 * np.pi * (200 + 1800 * t) * t))
    rng = np.random.default_rng(11)
    write_wav(root / "noise.wav", 8000, 0.3 * rng.standard_normal(8000))
    write_wav(root / "falling.wav", 16000, 0.4 * np.sin(2 * np.pi * (2500 - 2000 * t) * t))

    manifest_path = root / "manifest.tsv"
    manifest_path.write_text(
        "rising\trising.wav\tthat bat\n"
        "noise\tnoise.wav\tthink big\n"
        "falling\tfalling.wav\tsheep\n",
        encoding="utf-8",
    )

    manifest = read_manifest(str(manifest_path), model="synthetic",
                             output_dir=str(root / "out"))
    extraction = extract_posteriors(manifest)
    print(f"extracted {len(extraction.utterances)} utterances "
          f"into {manifest.output_dir}")
    for utt in extraction.utterances:
        tag = " (resampled)" if utt.resampled else ""
        print(f"  {utt.utterance_id}: {utt.frames} frames x {utt.width} columns, "
              f"blank fraction {utt.blank_fraction:.2f}{tag}")

    phones = phonemize_transcripts(manifest)
    print(f"phonemized {len(phones.sequences)} transcripts, "
          f"{len(phones.unresolved)} unresolved")

    # from here on, only gopkit and the emitted files
    vocab = PhonemeInventory.load(extraction.vocab_path)
    sequences = read_canonical_sequences(phones.canon_path, vocab)
    print("\nper-phoneme scores (substitution-search method, full inventory):")
    for utt in extraction.utterances:
        matrix = load_posteriors(utt.path, vocab=vocab)
        report = gop_pp_af(matrix, sequences[utt.utterance_id], vocab)
        rendered = " ".join(
            f"{vocab.symbol(s.phoneme_id)}:{s.score:+.1f}" for s in report.scores
        )
        print(f"  {utt.utterance_id}: {rendered}")
    print("\nscores near zero mean the spoken audio supports the canonical "
          "phoneme; strongly negative means some substitute fits far better.")


if __name__ == "__main__":
    main()
