import pytest

from ctcextract import (
    ExtractionManifest,
    ManifestEntry,
    ManifestError,
    read_manifest,
)


def write(tmp_path, text):
    path = tmp_path / "manifest.tsv"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_read_basic(tmp_path):
    path = write(tmp_path, "u1\ta.wav\thello there\nu2\tb.wav\tbat\n")
    man = read_manifest(path, model="synthetic", output_dir=str(tmp_path / "out"))
    assert man.model == "synthetic"
    assert [e.utterance_id for e in man.entries] == ["u1", "u2"]
    assert man.entries[0].transcript == "hello there"


def test_relative_paths_resolve_against_manifest_dir(tmp_path):
    sub = tmp_path / "clips"
    sub.mkdir()
    path = write(sub, "u1\ttone.wav\tbat\n")
    man = read_manifest(path, model="synthetic", output_dir=str(tmp_path))
    assert man.entries[0].audio_path == str(sub / "tone.wav")


def test_absolute_paths_kept(tmp_path):
    path = write(tmp_path, f"u1\t{tmp_path}/x.wav\tbat\n")
    man = read_manifest(path, model="synthetic", output_dir=str(tmp_path))
    assert man.entries[0].audio_path == f"{tmp_path}/x.wav"


def test_comments_and_blank_lines_skipped(tmp_path):
    path = write(tmp_path, "# header\n\nu1\ta.wav\tbat\n   \n# tail\n")
    man = read_manifest(path, model="synthetic", output_dir=str(tmp_path))
    assert len(man.entries) == 1


def test_wrong_field_count_reports_line(tmp_path):
    path = write(tmp_path, "u1\ta.wav\tbat\nu2\tb.wav\n")
    with pytest.raises(ManifestError, match=r":2:.*3 tab-separated"):
        read_manifest(path, model="synthetic", output_dir=str(tmp_path))


def test_empty_utterance_id_rejected(tmp_path):
    path = write(tmp_path, "\ta.wav\tbat\n")
    with pytest.raises(ManifestError, match="empty utterance id"):
        read_manifest(path, model="synthetic", output_dir=str(tmp_path))


def test_duplicate_ids_rejected(tmp_path):
    path = write(tmp_path, "u1\ta.wav\tbat\nu1\tb.wav\tcat\n")
    with pytest.raises(ManifestError, match="duplicate utterance id 'u1'"):
        read_manifest(path, model="synthetic", output_dir=str(tmp_path))


def test_duplicate_ids_rejected_on_direct_construction():
    entries = [
        ManifestEntry("u1", "a.wav", "bat"),
        ManifestEntry("u1", "b.wav", "cat"),
    ]
    with pytest.raises(ManifestError, match="duplicate"):
        ExtractionManifest(model="synthetic", output_dir="out", entries=entries)
