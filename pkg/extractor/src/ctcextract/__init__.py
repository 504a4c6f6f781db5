"""Audio-to-posterior extraction for the phoneme scoring toolkit.

Turns a manifest of (utterance id, audio path, transcript) rows into the
scorer's input files: one binary posterior matrix per clip, a vocab
sidecar, and a canonical-sequence table phonemized from the transcripts.
"""

from .audio import (
    STRIDE,
    TARGET_RATE,
    WINDOW,
    AudioError,
    frame_count,
    frame_signal,
    load_waveform,
    resample,
)
from .backends import (
    BLANK_TOKEN,
    SPECIAL_TOKENS,
    BackendError,
    SyntheticBackend,
    TransformersBackend,
    resolve_backend,
)
from .extract import (
    CANON_FILENAME,
    STRIP_TOKENS,
    VOCAB_FILENAME,
    ExtractionResult,
    ExtractorError,
    PhonemizeResult,
    UtteranceExtraction,
    extract_posteriors,
    phonemize_transcripts,
)
from .lexicon import PHONEME_SET, LexiconError, phonemize, phonemize_word, supported_language
from .manifest import ExtractionManifest, ManifestEntry, ManifestError, read_manifest

__version__ = "0.1.0"

__all__ = [
    "AudioError",
    "BackendError",
    "BLANK_TOKEN",
    "CANON_FILENAME",
    "ExtractionManifest",
    "ExtractionResult",
    "ExtractorError",
    "LexiconError",
    "ManifestEntry",
    "ManifestError",
    "PHONEME_SET",
    "PhonemizeResult",
    "SPECIAL_TOKENS",
    "STRIDE",
    "STRIP_TOKENS",
    "SyntheticBackend",
    "TARGET_RATE",
    "TransformersBackend",
    "UtteranceExtraction",
    "VOCAB_FILENAME",
    "WINDOW",
    "extract_posteriors",
    "frame_count",
    "frame_signal",
    "load_waveform",
    "phonemize",
    "phonemize_word",
    "phonemize_transcripts",
    "read_manifest",
    "resample",
    "resolve_backend",
    "supported_language",
]
