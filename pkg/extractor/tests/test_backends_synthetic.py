import numpy as np
import pytest

from ctcextract import (
    BLANK_TOKEN,
    PHONEME_SET,
    SPECIAL_TOKENS,
    BackendError,
    SyntheticBackend,
    TransformersBackend,
    resolve_backend,
)


@pytest.fixture
def backend():
    return SyntheticBackend()


def test_vocabulary_layout(backend):
    assert backend.vocabulary[: len(SPECIAL_TOKENS)] == SPECIAL_TOKENS
    assert backend.vocabulary[0] == BLANK_TOKEN
    assert backend.vocabulary[len(SPECIAL_TOKENS) :] == PHONEME_SET


def test_one_second_gives_49_frames(backend):
    wave = 0.4 * np.sin(2 * np.pi * 220 * np.arange(16000) / 16000)
    probs = backend.infer(wave)
    assert probs.shape == (49, len(backend.vocabulary))


def test_rows_are_distributions(backend):
    rng = np.random.default_rng(3)
    probs = backend.infer(0.2 * rng.standard_normal(8000))
    assert (probs >= 0).all()
    assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-12


def test_inference_is_deterministic(backend):
    wave = 0.3 * np.sin(2 * np.pi * 330 * np.arange(12000) / 16000)
    a = backend.infer(wave)
    b = SyntheticBackend().infer(wave.copy())
    assert np.array_equal(a, b)


def test_silence_puts_mass_on_blank(backend):
    probs = backend.infer(np.zeros(16000))
    assert (np.argmax(probs, axis=1) == 0).all()
    assert probs[:, 0].min() > 0.5


def test_voiced_frames_prefer_phonemes(backend):
    wave = 0.5 * np.sin(2 * np.pi * 440 * np.arange(16000) / 16000)
    probs = backend.infer(wave)
    n_special = len(SPECIAL_TOKENS)
    assert (np.argmax(probs, axis=1) >= n_special).all()


def test_different_content_different_posteriors(backend):
    t = np.arange(16000) / 16000
    low = backend.infer(0.5 * np.sin(2 * np.pi * 110 * t))
    high = backend.infer(0.5 * np.sin(2 * np.pi * 3000 * t))
    assert not np.array_equal(low, high)


def test_resolve_synthetic():
    assert isinstance(resolve_backend("synthetic"), SyntheticBackend)
    assert isinstance(resolve_backend("synthetic:any-suffix"), SyntheticBackend)


def test_resolve_missing_model_dir(tmp_path):
    with pytest.raises(BackendError, match="model directory not found"):
        resolve_backend(str(tmp_path / "no-such-checkout"))


def test_transformers_backend_rejects_remote_ids():
    # hub-style identifiers are not directories, so they fail fast offline
    with pytest.raises(BackendError, match="local"):
        TransformersBackend("someone/wav2vec2-xlsr-phoneme")
