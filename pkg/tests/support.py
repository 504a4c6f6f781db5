"""Shared fixtures and independent oracles for the test suite.

The oracles here are deliberately written against the definition of the
quantity, not against the library internals: path enumeration for CTC,
naive pairwise counting for ranking, direct formulas for statistics.
"""

import itertools
import math

import numpy as np

from gopkit import CanonicalSequence, PhonemeInventory, PosteriorMatrix

LETTERS = "abcdefghijklmnopqrstuvwxyz"


def small_inventory(vocab_size: int) -> PhonemeInventory:
    if vocab_size > len(LETTERS):
        raise ValueError("letter pool exhausted")
    return PhonemeInventory.from_phonemes(list(LETTERS[:vocab_size]))


def random_matrix(rng, frames: int, width: int, utterance_id: str = "") -> PosteriorMatrix:
    linear = rng.random((frames, width)) + 1e-3
    linear /= linear.sum(axis=1, keepdims=True)
    return PosteriorMatrix(np.log(linear), utterance_id=utterance_id)


def random_instance(rng, max_frames=5, max_vocab=3, max_len=3):
    """One random (inventory, matrix, sequence) triple; may be infeasible."""
    vocab = int(rng.integers(1, max_vocab + 1))
    frames = int(rng.integers(1, max_frames + 1))
    length = int(rng.integers(1, max_len + 1))
    inventory = small_inventory(vocab)
    matrix = random_matrix(rng, frames, inventory.width)
    ids = tuple(int(q) for q in rng.integers(1, vocab + 1, size=length))
    return inventory, matrix, ids


def collapse(path, blank):
    out = []
    prev = None
    for tok in path:
        if tok != prev:
            out.append(tok)
        prev = tok
    return tuple(t for t in out if t != blank)


def enumerate_paths(matrix: PosteriorMatrix, target, blank):
    """Yield (path, log_prob) for every token path collapsing to target."""
    frames, width = matrix.log_probs.shape
    target = tuple(target)
    for path in itertools.product(range(width), repeat=frames):
        if collapse(path, blank) != target:
            continue
        yield path, sum(matrix.log_probs[t, tok] for t, tok in enumerate(path))


def brute_force_total(matrix: PosteriorMatrix, target, blank) -> float:
    masses = [math.exp(lp) for _, lp in enumerate_paths(matrix, target, blank)]
    if not masses:
        return float("-inf")
    return math.log(math.fsum(masses))


def brute_force_best_path(matrix: PosteriorMatrix, target, blank):
    """(best log-prob, one best path) over collapsing paths; (-inf, None) if none."""
    best = float("-inf")
    best_path = None
    for path, lp in enumerate_paths(matrix, target, blank):
        if lp > best:
            best = lp
            best_path = path
    return best, best_path


def synth_posteriors(rng, spoken_ids, inventory, frames_per_phoneme=(2, 4),
                     dominant=0.88, blank_frames=(1, 2), utterance_id=""):
    """Posteriors that strongly support one spoken sequence.

    Each phoneme emits a run of frames dominated by its own column, with
    blank-dominated runs in between and at the edges; leftover mass is spread
    uniformly so no cell is exactly zero.
    """
    width = inventory.width
    lo, hi = frames_per_phoneme
    blo, bhi = blank_frames
    rows = []

    def block(token, count):
        for _ in range(count):
            row = np.full(width, (1.0 - dominant) / (width - 1))
            row[token] = dominant
            rows.append(row)

    block(inventory.blank_index, int(rng.integers(blo, bhi + 1)))
    for pid in spoken_ids:
        block(pid, int(rng.integers(lo, hi + 1)))
        block(inventory.blank_index, int(rng.integers(blo, bhi + 1)))
    linear = np.asarray(rows)
    return PosteriorMatrix(np.log(linear), utterance_id=utterance_id)


def sequence_of(inventory, symbols, utterance_id=""):
    return CanonicalSequence.from_symbols(symbols, inventory, utterance_id)
