import wave

import numpy as np
import pytest

from ctcextract import read_manifest


def write_wav(path, rate, samples, channels=1):
    pcm = (np.clip(samples, -1.0, 1.0) * 32767).astype("<i2")
    if channels == 2:
        pcm = np.stack([pcm, pcm], axis=1)
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(channels)
        handle.setsampwidth(2)
        handle.setframerate(rate)
        handle.writeframes(pcm.tobytes())


@pytest.fixture
def wav_writer():
    return write_wav


@pytest.fixture
def clip_dir(tmp_path):
    """Three 1-second clips: a 440 Hz tone, 8 kHz noise, and silence."""
    t = np.arange(16000) / 16000.0
    write_wav(tmp_path / "tone.wav", 16000, 0.5 * np.sin(2 * np.pi * 440 * t))
    rng = np.random.default_rng(7)
    write_wav(tmp_path / "noise8k.wav", 8000, 0.3 * rng.standard_normal(8000))
    write_wav(tmp_path / "silence.wav", 16000, np.zeros(16000))
    return tmp_path


@pytest.fixture
def sample_manifest(clip_dir):
    path = clip_dir / "manifest.tsv"
    path.write_text(
        "tone\ttone.wav\tthat bat\n"
        "noise\tnoise8k.wav\tthink big\n"
        "silence\tsilence.wav\tsheep\n",
        encoding="utf-8",
    )
    return read_manifest(str(path), model="synthetic", output_dir=str(clip_dir / "out"))
