"""WAV decoding and the frame-rate front end shared by the backends."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly


class AudioError(ValueError):
    pass


TARGET_RATE = 16_000
WINDOW = 400   # 25 ms at 16 kHz
STRIDE = 320   # 20 ms at 16 kHz


def load_waveform(path) -> tuple[np.ndarray, int]:
    """Decode a WAV file to mono float64 in [-1, 1] plus its sample rate."""
    path = Path(path)
    if not path.exists():
        raise AudioError(f"audio file not found: {path}")
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise AudioError(f"{path}: undecodable audio: {exc}") from exc
    if data.size == 0:
        raise AudioError(f"{path}: empty audio stream")
    # scale before the stereo downmix: mean() would silently promote the
    # integer dtype and skip the division
    if np.issubdtype(data.dtype, np.integer):
        wave = data.astype(np.float64) / float(np.iinfo(data.dtype).max)
    else:
        wave = data.astype(np.float64)
    if wave.ndim == 2:
        wave = wave.mean(axis=1)
    return wave, int(rate)


def resample(wave: np.ndarray, rate: int, target: int = TARGET_RATE) -> np.ndarray:
    if rate == target:
        return wave
    if rate <= 0:
        raise AudioError(f"invalid sample rate {rate}")
    g = math.gcd(rate, target)
    return resample_poly(wave, target // g, rate // g)


def frame_count(samples: int, window: int = WINDOW, stride: int = STRIDE) -> int:
    """Frames produced by a strided front end; short clips yield one frame."""
    if samples <= window:
        return 1
    return 1 + (samples - window) // stride


def frame_signal(wave: np.ndarray, window: int = WINDOW, stride: int = STRIDE) -> np.ndarray:
    """(T, window) view-copy of the waveform, zero-padded at the tail."""
    n = wave.shape[0]
    frames = frame_count(n, window, stride)
    needed = (frames - 1) * stride + window
    if needed > n:
        wave = np.concatenate([wave, np.zeros(needed - n)])
    out = np.empty((frames, window))
    for t in range(frames):
        out[t] = wave[t * stride : t * stride + window]
    return out
