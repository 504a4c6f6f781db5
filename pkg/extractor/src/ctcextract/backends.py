"""Phoneme-recognition backends.

A backend turns a 16 kHz waveform into per-frame label probabilities over
its full vocabulary (specials included). Two implementations:

* SyntheticBackend - a self-contained stand-in that derives posteriors
  deterministically from short-time signal statistics. No model weights,
  no randomness; the same clip always produces the same tensor. It exists
  so the whole extraction pipeline can run and be tested offline.
* TransformersBackend - adapter for a locally checked-out wav2vec2-style
  phoneme model. Only local directories are accepted; nothing is ever
  downloaded.
"""

from __future__ import annotations

import os

import numpy as np

from .audio import STRIDE, TARGET_RATE, WINDOW, frame_signal
from .lexicon import PHONEME_SET


class BackendError(RuntimeError):
    pass


BLANK_TOKEN = "<pad>"
SPECIAL_TOKENS = (BLANK_TOKEN, "<s>", "</s>", "<unk>")


class SyntheticBackend:
    """Deterministic posterior synthesis from frame-level features.

    Each frame is summarized by log energy, zero-crossing rate, and a
    coarse spectral-centroid bucket; quiet frames put their mass on the
    blank token and the rest pick a phoneme by hashing the quantized
    features. The mapping is arbitrary on purpose: downstream code only
    needs valid, reproducible, content-dependent distributions.
    """

    name = "synthetic"
    sample_rate = TARGET_RATE
    window = WINDOW
    stride = STRIDE

    def __init__(self, sharpness: float = 6.0):
        self.sharpness = float(sharpness)
        self.vocabulary = SPECIAL_TOKENS + PHONEME_SET

    def infer(self, wave: np.ndarray) -> np.ndarray:
        frames = frame_signal(wave, self.window, self.stride)
        count = frames.shape[0]
        width = len(self.vocabulary)
        n_special = len(SPECIAL_TOKENS)
        n_phones = width - n_special

        energy = np.sqrt(np.mean(frames**2, axis=1))
        crossings = np.mean(np.abs(np.diff(np.signbit(frames).astype(np.int8), axis=1)), axis=1)
        spectrum = np.abs(np.fft.rfft(frames, axis=1))
        bins = np.arange(spectrum.shape[1])
        centroid = (spectrum * bins).sum(axis=1) / np.maximum(spectrum.sum(axis=1), 1e-12)

        logits = np.zeros((count, width))
        quiet = energy < 1e-3
        # blank wins on quiet frames, phonemes on voiced ones
        logits[:, 0] = np.where(quiet, self.sharpness, 0.0)
        zcr_bucket = np.minimum((crossings * 40).astype(int), 7)
        cen_bucket = np.minimum((centroid / 8).astype(int), 12)
        choice = (zcr_bucket * 13 + cen_bucket * 5 + (energy * 997).astype(int)) % n_phones
        rows = np.arange(count)
        voiced = ~quiet
        logits[rows[voiced], n_special + choice[voiced]] = self.sharpness
        # faint deterministic mass on the non-blank specials so that the
        # stripping step downstream has something real to remove
        logits[:, 1:n_special] = -2.0

        shifted = logits - logits.max(axis=1, keepdims=True)
        probs = np.exp(shifted)
        probs /= probs.sum(axis=1, keepdims=True)
        return probs


class TransformersBackend:
    """Local wav2vec2-style CTC model adapter.

    The identifier must be a directory containing a saved processor and
    model; remote identifiers are rejected before any import happens.
    """

    sample_rate = TARGET_RATE
    window = WINDOW
    stride = STRIDE

    def __init__(self, model_dir: str):
        self.name = model_dir
        if not os.path.isdir(model_dir):
            raise BackendError(
                f"model directory not found: {model_dir!r}; this backend only "
                f"loads local checkouts, use 'synthetic' for offline runs"
            )
        try:
            import torch
            from transformers import AutoModelForCTC, AutoProcessor
        except ImportError as exc:
            raise BackendError(f"torch/transformers unavailable: {exc}") from exc
        self._torch = torch
        self.processor = AutoProcessor.from_pretrained(model_dir)
        self.model = AutoModelForCTC.from_pretrained(model_dir)
        self.model.eval()
        vocab = self.processor.tokenizer.get_vocab()
        self.vocabulary = tuple(sym for sym, _ in sorted(vocab.items(), key=lambda kv: kv[1]))

    def infer(self, wave: np.ndarray) -> np.ndarray:
        torch = self._torch
        inputs = self.processor(
            wave, sampling_rate=self.sample_rate, return_tensors="pt"
        )
        with torch.no_grad():
            logits = self.model(**inputs).logits[0]
        return torch.softmax(logits, dim=-1).cpu().numpy().astype(np.float64)


def resolve_backend(identifier: str):
    """Map a manifest's model identifier to a backend instance."""
    if identifier == "synthetic" or identifier.startswith("synthetic:"):
        return SyntheticBackend()
    return TransformersBackend(identifier)
