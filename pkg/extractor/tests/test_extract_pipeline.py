import dataclasses
import hashlib
import json
import os

import numpy as np
import pytest

from gopkit import PhonemeInventory, load_posteriors, read_canonical_sequences

from ctcextract import (
    PHONEME_SET,
    AudioError,
    ExtractionManifest,
    ExtractorError,
    ManifestEntry,
    extract_posteriors,
    phonemize_transcripts,
)


@pytest.fixture
def announce(capfd):
    def emit(line):
        with capfd.disabled():
            print(line)

    return emit


def hash_file(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def test_writes_one_gopp_per_utterance(sample_manifest):
    result = extract_posteriors(sample_manifest)
    assert [u.utterance_id for u in result.utterances] == ["tone", "noise", "silence"]
    for utt in result.utterances:
        assert os.path.basename(utt.path) == f"{utt.utterance_id}.gopp"
        assert os.path.exists(utt.path)


def test_outputs_load_through_scorer_validation(sample_manifest):
    # the scorer's loader enforces header integrity and row normalization,
    # so a clean load is the real contract check
    result = extract_posteriors(sample_manifest)
    vocab = PhonemeInventory.load(result.vocab_path)
    for utt in result.utterances:
        matrix = load_posteriors(utt.path, vocab=vocab)
        assert matrix.frame_count == utt.frames
        assert matrix.width == vocab.width
        assert matrix.utterance_id == utt.utterance_id


def test_vocab_sidecar_strips_specials_keeps_blank(sample_manifest):
    result = extract_posteriors(sample_manifest)
    vocab = PhonemeInventory.load(result.vocab_path)
    assert vocab.blank_index == 0
    assert vocab.symbols[0] == "<pad>"
    assert vocab.symbols[1:] == PHONEME_SET
    for special in ("<s>", "</s>", "<unk>"):
        assert special not in vocab.symbols


def test_one_second_clip_49_frames(sample_manifest):
    result = extract_posteriors(sample_manifest)
    by_id = {u.utterance_id: u for u in result.utterances}
    assert by_id["tone"].frames == 49
    assert by_id["silence"].frames == 49


def test_silent_clip_blank_dominates(sample_manifest):
    result = extract_posteriors(sample_manifest)
    by_id = {u.utterance_id: u for u in result.utterances}
    assert by_id["silence"].blank_fraction == 1.0
    matrix = load_posteriors(by_id["silence"].path)
    assert (np.argmax(matrix.log_probs, axis=1) == 0).all()


def test_resampling_noted(sample_manifest):
    result = extract_posteriors(sample_manifest)
    by_id = {u.utterance_id: u for u in result.utterances}
    assert by_id["noise"].resampled and by_id["noise"].source_rate == 8000
    assert not by_id["tone"].resampled
    assert any("noise" in note and "8000" in note for note in result.notes)
    # resampling must not change the frame count for a 1-second clip
    assert by_id["noise"].frames == 49


def test_deterministic_at_file_hash_level(sample_manifest, clip_dir):
    first = extract_posteriors(sample_manifest)
    hashes = {u.utterance_id: hash_file(u.path) for u in first.utterances}
    vocab_hash = hash_file(first.vocab_path)

    again = extract_posteriors(sample_manifest)
    assert {u.utterance_id: hash_file(u.path) for u in again.utterances} == hashes

    elsewhere = dataclasses.replace(sample_manifest, output_dir=str(clip_dir / "out_b"))
    moved = extract_posteriors(elsewhere)
    assert {u.utterance_id: hash_file(u.path) for u in moved.utterances} == hashes
    assert hash_file(moved.vocab_path) == vocab_hash


def test_no_stray_temp_files(sample_manifest):
    result = extract_posteriors(sample_manifest)
    leftovers = [
        name
        for name in os.listdir(sample_manifest.output_dir)
        if name.startswith(".tmp-")
    ]
    assert leftovers == []
    assert len(result.utterances) == 3


def test_missing_audio_raises(clip_dir):
    manifest = ExtractionManifest(
        model="synthetic",
        output_dir=str(clip_dir / "out"),
        entries=[ManifestEntry("u9", str(clip_dir / "ghost.wav"), "bat")],
    )
    with pytest.raises(AudioError, match="not found"):
        extract_posteriors(manifest)


def test_phonemize_resolves_fully(sample_manifest):
    result = extract_posteriors(sample_manifest)
    phones = phonemize_transcripts(sample_manifest)
    assert phones.unresolved == {}
    assert sorted(phones.sequences) == ["noise", "silence", "tone"]
    assert phones.sequences["tone"] == ("ð", "æ", "t", "b", "æ", "t")

    vocab = PhonemeInventory.load(result.vocab_path)
    sequences = read_canonical_sequences(phones.canon_path, vocab)
    assert sorted(sequences) == ["noise", "silence", "tone"]
    assert sequences["tone"].symbols(vocab) == phones.sequences["tone"]


def test_phonemize_requires_sidecar(sample_manifest):
    with pytest.raises(ExtractorError, match="run extract_posteriors first"):
        phonemize_transcripts(sample_manifest)


def test_phonemize_unsupported_language(sample_manifest):
    extract_posteriors(sample_manifest)
    with pytest.raises(ExtractorError, match="unsupported language"):
        phonemize_transcripts(sample_manifest, language="fr")


def test_phonemize_empty_transcript_names_utterance(clip_dir, sample_manifest):
    extract_posteriors(sample_manifest)
    entries = list(sample_manifest.entries)
    entries[1] = dataclasses.replace(entries[1], transcript="  ")
    manifest = dataclasses.replace(sample_manifest, entries=entries)
    with pytest.raises(ExtractorError, match="noise.*no words"):
        phonemize_transcripts(manifest)


def test_unresolvable_symbols_flagged_not_dropped(clip_dir, sample_manifest):
    # a vocab missing one dental fricative: 'think' cannot resolve, the
    # utterance is reported, the remaining rows still reach canon.tsv
    out = clip_dir / "out_reduced"
    out.mkdir()
    reduced = ["<pad>"] + [s for s in PHONEME_SET if s != "θ"]
    (out / "vocab.json").write_text(
        json.dumps({"symbols": reduced, "blank_index": 0}), encoding="utf-8"
    )
    manifest = dataclasses.replace(sample_manifest, output_dir=str(out))
    phones = phonemize_transcripts(manifest)
    assert phones.unresolved == {"noise": ("θ",)}
    assert sorted(phones.sequences) == ["silence", "tone"]
    vocab = PhonemeInventory(symbols=tuple(reduced), blank_index=0)
    assert sorted(read_canonical_sequences(phones.canon_path, vocab)) == ["silence", "tone"]


def test_acceptance_extractor_outputs(sample_manifest, announce):
    """Posterior files pass the scorer's validation and the phonemized
    sequences resolve fully against the emitted vocab, on a 3-clip manifest."""
    result = extract_posteriors(sample_manifest)
    assert len(result.utterances) == 3

    vocab = PhonemeInventory.load(result.vocab_path)
    worst = 0.0
    for utt in result.utterances:
        matrix = load_posteriors(utt.path, vocab=vocab)
        worst = max(worst, float(np.abs(np.expm1(matrix.row_log_sums())).max()))
    assert worst <= 1e-3

    phones = phonemize_transcripts(sample_manifest)
    assert phones.unresolved == {}
    sequences = read_canonical_sequences(phones.canon_path, vocab)
    assert sorted(sequences) == sorted(u.utterance_id for u in result.utterances)

    announce(
        "[PASS] extractor outputs: 3/3 posterior files validated "
        f"(max row-sum deviation {worst:.2e} <= 1e-3), "
        f"{len(sequences)}/3 transcripts resolved against the emitted vocab"
    )
