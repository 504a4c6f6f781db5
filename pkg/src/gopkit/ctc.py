"""Log-space CTC dynamic programming.

Everything here runs on the blank-interleaved extended label sequence
(blank, y1, blank, ..., yn, blank) of length 2n+1. The module provides:

* ``ctc_forward``        - total log-likelihood of a label sequence,
* ``ctc_brute_force``    - definitional path-enumeration oracle,
* ``ctc_viterbi_align``  - best single path plus per-phoneme frame segments,
* ``masked_ctc_forward`` - one-pass union likelihood over a substitution set
                           at one position,
* ``deletion_forward``   - likelihood with one position removed,
* ``batched_perturbation_forward`` - many single-position variants at once,
                           reusing the shared-prefix part of the DP table.

All arithmetic is natural-log with log-sum-exp; there is no probability
domain fallback. A structurally impossible sequence (T below the minimal
frame count) yields a -inf sentinel instead of an exception so that
perturbed sequences can be compared inside min/argmin logic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .inventory import CanonicalSequence, PhonemeInventory
from .posterior import PosteriorMatrix

NEG_INF = float("-inf")

BRUTE_FORCE_LIMIT = 10_000_000


class InfeasibleSequenceError(ValueError):
    """The sequence cannot be aligned to the available frames."""


class BruteForceTooLarge(ValueError):
    """Path enumeration would exceed the configured safety limit."""


@dataclass(frozen=True)
class ExtendedLabelSequence:
    """Blank-interleaved token sequence of length 2n+1.

    ``source_positions[s]`` gives the canonical index of a non-blank state s,
    and -1 for blank states.
    """

    tokens: tuple[int, ...]
    source_positions: tuple[int, ...]
    blank: int

    @classmethod
    def build(cls, ids, blank: int) -> "ExtendedLabelSequence":
        tokens = [blank]
        positions = [-1]
        for i, y in enumerate(ids):
            tokens.extend((int(y), blank))
            positions.extend((i, -1))
        return cls(tuple(tokens), tuple(positions), blank)

    def __len__(self) -> int:
        return len(self.tokens)

    def strip_blanks(self) -> tuple[int, ...]:
        return tuple(t for t in self.tokens if t != self.blank)


@dataclass(frozen=True)
class ForwardResult:
    """Total forward log-probability, with the optional full DP table."""

    log_likelihood: float
    alpha_table: np.ndarray | None = None

    @property
    def feasible(self) -> bool:
        return self.log_likelihood > NEG_INF

    @property
    def loss(self) -> float:
        """CTC loss, the negated log-likelihood."""
        return -self.log_likelihood


@dataclass(frozen=True)
class AlignmentSegment:
    """Half-open frame interval [start_frame, end_frame) for one phoneme."""

    phoneme_id: int
    start_frame: int
    end_frame: int

    def __post_init__(self):
        if not self.start_frame < self.end_frame:
            raise ValueError("segment must span at least one frame")


@dataclass(frozen=True)
class ViterbiAlignment:
    """Best-path decode: ordered per-phoneme segments and the path score.

    Iterates as the segment list so callers that only care about segments
    can treat the result as one.
    """

    segments: tuple[AlignmentSegment, ...]
    path_log_prob: float
    state_path: tuple[int, ...]

    def __iter__(self):
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def __getitem__(self, i):
        return self.segments[i]


@dataclass(frozen=True)
class BatchedForwardResult:
    """Per-variant log-likelihoods plus DP-cell accounting."""

    log_likelihoods: np.ndarray
    cells_per_perturbation: np.ndarray
    original_log_likelihood: float
    original_cells: int
    cached: bool


def minimal_frames(ids) -> int:
    """Fewest frames that can carry the sequence: n plus one extra frame for
    each adjacent equal pair (a blank must separate repeats)."""
    ids = list(ids)
    return len(ids) + sum(a == b for a, b in zip(ids, ids[1:]))


def _sequence_ids(seq):
    return seq.phoneme_ids if isinstance(seq, CanonicalSequence) else tuple(seq)


def _chain_arrays(ids, blank):
    """Emission columns and skip legality for the standard extended chain."""
    ext = ExtendedLabelSequence.build(ids, blank)
    cols = np.asarray(ext.tokens, dtype=np.intp)
    S = len(cols)
    skip_ok = np.zeros(S, dtype=bool)
    if S >= 3:
        # skip transitions enter non-blank states whose token differs from
        # the one two states back
        skip_ok[2:] = (cols[2:] != blank) & (cols[2:] != cols[:-2])
    return cols, skip_ok


def _chain_alpha(log_probs, cols, skip_ok):
    """Full (T, S) forward table for one extended chain."""
    T = log_probs.shape[0]
    S = len(cols)
    em = log_probs[:, cols]
    alpha = np.full((T, S), NEG_INF)
    alpha[0, 0] = em[0, 0]
    if S > 1:
        alpha[0, 1] = em[0, 1]
    for t in range(1, T):
        prev = alpha[t - 1]
        m = prev.copy()
        m[1:] = np.logaddexp(m[1:], prev[:-1])
        if S >= 3:
            m[2:] = np.where(skip_ok[2:], np.logaddexp(m[2:], prev[:-2]), m[2:])
        alpha[t] = m + em[t]
    return alpha


def _terminal_lse(last_row):
    if len(last_row) == 1:
        return float(last_row[-1])
    return float(np.logaddexp(last_row[-1], last_row[-2]))


def ctc_forward(matrix: PosteriorMatrix, seq, blank: int | None = None,
                inventory: PhonemeInventory | None = None,
                keep_alpha: bool = False) -> ForwardResult:
    """Log-probability of ``seq`` summed over all collapsing frame paths.

    ``blank`` defaults to the inventory's blank index when an inventory is
    given, else to column 0. An infeasible sequence (too few frames) returns
    a -inf result rather than raising.
    """
    ids = _sequence_ids(seq)
    blank = _resolve_blank(blank, inventory)
    cols, skip_ok = _chain_arrays(ids, blank)
    alpha = _chain_alpha(matrix.log_probs, cols, skip_ok)
    ll = _terminal_lse(alpha[-1])
    return ForwardResult(ll, alpha if keep_alpha else None)


def _resolve_blank(blank, inventory):
    if blank is not None:
        return int(blank)
    if inventory is not None:
        return inventory.blank_index
    return 0


def _collapse(path, blank):
    out = []
    prev = None
    for tok in path:
        if tok != prev:
            out.append(tok)
        prev = tok
    return tuple(t for t in out if t != blank)


def ctc_brute_force(matrix: PosteriorMatrix, seq, blank: int | None = None,
                    inventory: PhonemeInventory | None = None) -> float:
    """Definitional oracle: sum P(path) over every token path whose CTC
    collapse (merge repeats, drop blanks) equals ``seq``. Exponential in T;
    guarded by ``BRUTE_FORCE_LIMIT``."""
    ids = _sequence_ids(seq)
    blank = _resolve_blank(blank, inventory)
    T, width = matrix.log_probs.shape
    if width ** T > BRUTE_FORCE_LIMIT:
        raise BruteForceTooLarge(f"{width}^{T} paths exceed the enumeration limit")
    target = tuple(ids)
    log_probs = matrix.log_probs
    masses = []
    for path in itertools.product(range(width), repeat=T):
        if _collapse(path, blank) != target:
            continue
        masses.append(math.exp(sum(log_probs[t, tok] for t, tok in enumerate(path))))
    if not masses:
        return NEG_INF
    return math.log(math.fsum(masses))


def ctc_viterbi_align(matrix: PosteriorMatrix, seq, blank: int | None = None,
                      inventory: PhonemeInventory | None = None) -> ViterbiAlignment:
    """Best single path through the extended graph, as per-phoneme segments.

    Ties prefer staying in the current state over advancing (and over
    skipping), which keeps non-blank emission onsets as early as possible;
    at the final frame the last phoneme state wins a tie against the final
    blank. Raises ``InfeasibleSequenceError`` when no path exists.
    """
    ids = _sequence_ids(seq)
    blank = _resolve_blank(blank, inventory)
    cols, skip_ok = _chain_arrays(ids, blank)
    log_probs = matrix.log_probs
    T = log_probs.shape[0]
    S = len(cols)
    em = log_probs[:, cols]

    delta = np.full((T, S), NEG_INF)
    choice = np.zeros((T, S), dtype=np.int8)  # 0 stay, 1 advance, 2 skip
    delta[0, 0] = em[0, 0]
    if S > 1:
        delta[0, 1] = em[0, 1]
    for t in range(1, T):
        prev = delta[t - 1]
        stay = prev
        advance = np.concatenate(([NEG_INF], prev[:-1]))
        skip = np.full(S, NEG_INF)
        if S >= 3:
            skip[2:] = np.where(skip_ok[2:], prev[:-2], NEG_INF)
        cand = np.stack((stay, advance, skip))
        # argmax returns the first maximum: stay beats advance beats skip
        choice[t] = np.argmax(cand, axis=0)
        delta[t] = cand[choice[t], np.arange(S)] + em[t]

    if S > 1 and delta[-1, S - 2] >= delta[-1, S - 1]:
        end_state = S - 2
    else:
        end_state = S - 1
    score = float(delta[-1, end_state])
    if score == NEG_INF:
        raise InfeasibleSequenceError(
            f"{T} frames cannot carry a sequence needing {minimal_frames(ids)}"
        )

    states = np.empty(T, dtype=np.intp)
    s = end_state
    for t in range(T - 1, -1, -1):
        states[t] = s
        if t > 0:
            s -= int(choice[t, s])

    ext = ExtendedLabelSequence.build(ids, blank)
    segments = []
    for t in range(T):
        pos = ext.source_positions[states[t]]
        if pos < 0:
            continue
        if segments and segments[-1][0] == pos:
            segments[-1][2] = t + 1
        else:
            segments.append([pos, t, t + 1])
    ordered = tuple(
        AlignmentSegment(ids[pos], start, end) for pos, start, end in segments
    )
    return ViterbiAlignment(ordered, score, tuple(int(x) for x in states))


def _graph_forward(log_probs, cols, preds, init_states, final_states):
    """Forward pass over an arbitrary left-to-right state graph.

    ``preds[s]`` lists the states that can transition into s between frames.
    Used for the substitution-union pass, whose graph is not a plain chain.
    """
    T = log_probs.shape[0]
    S = len(cols)
    max_preds = max(len(p) for p in preds)
    predm = np.full((S, max_preds), S, dtype=np.intp)  # S = virtual -inf slot
    for s, plist in enumerate(preds):
        predm[s, : len(plist)] = plist
    em = log_probs[:, cols]

    alpha = np.full(S + 1, NEG_INF)
    init = np.asarray(init_states, dtype=np.intp)
    alpha[init] = em[0, init]
    for t in range(1, T):
        gathered = alpha[predm]
        nxt = np.logaddexp.reduce(gathered, axis=1) + em[t]
        alpha[:S] = nxt
    finals = alpha[np.asarray(final_states, dtype=np.intp)]
    return float(np.logaddexp.reduce(finals))


def masked_ctc_forward(matrix: PosteriorMatrix, seq, pos: int, allowed,
                       blank: int | None = None,
                       inventory: PhonemeInventory | None = None) -> ForwardResult:
    """Union likelihood over every substitution of position ``pos``.

    Computes log sum_q P(seq with q at pos) for q in ``allowed`` in a single
    forward pass: the extended-graph state at ``pos`` fans out into one
    sub-state per allowed phoneme, so the per-frame mass at that position is
    the log-sum-exp over the allowed columns while each path stays committed
    to a single substitute. Repeat-rule legality is applied per substitute
    against the original neighbours, so a substitute equal to a neighbour is
    handled exactly (a blank is then required between the equal tokens).
    """
    ids = _sequence_ids(seq)
    blank = _resolve_blank(blank, inventory)
    n = len(ids)
    if not 0 <= pos < n:
        raise IndexError(f"position {pos} out of range for sequence of length {n}")
    allowed = tuple(dict.fromkeys(int(q) for q in allowed))
    if not allowed:
        raise ValueError("allowed substitution set is empty")
    if blank in allowed:
        raise ValueError("the blank token cannot be a substitute")
    if ids[pos] in allowed:
        raise ValueError("the original phoneme cannot be its own substitute")

    k = len(allowed)
    # state layout: original chain states 0..2pos, then k substitution
    # sub-states, then the original chain states 2pos+2..2n shifted by k-1
    shift = k - 1
    S = 2 * n + 1 + shift
    cols = np.empty(S, dtype=np.intp)
    base_cols, _ = _chain_arrays(ids, blank)
    cols[: 2 * pos + 1] = base_cols[: 2 * pos + 1]
    cols[2 * pos + 1 : 2 * pos + 1 + k] = allowed
    cols[2 * pos + 1 + k :] = base_cols[2 * pos + 2 :]

    sub_states = list(range(2 * pos + 1, 2 * pos + 1 + k))
    preds: list[tuple[int, ...]] = []
    for s in range(S):
        if s < 2 * pos + 1:  # untouched prefix
            plist = [s]
            if s >= 1:
                plist.append(s - 1)
            if s >= 2 and cols[s] != blank and cols[s] != cols[s - 2]:
                plist.append(s - 2)
        elif s in sub_states:
            q = cols[s]
            plist = [s, 2 * pos]  # self-loop and the preceding blank
            if pos >= 1 and q != ids[pos - 1]:
                plist.append(2 * pos - 1)
        elif s == 2 * pos + 1 + k:  # blank right after the substitution fan
            plist = [s, *sub_states]
        elif s == 2 * pos + 2 + k and pos + 1 < n:  # next canonical phoneme
            plist = [s, s - 1]
            plist.extend(m for m in sub_states if cols[m] != ids[pos + 1])
        else:  # untouched suffix
            base_s = s - shift
            plist = [s, s - 1]
            if base_cols[base_s] != blank and base_cols[base_s] != base_cols[base_s - 2]:
                plist.append(s - 2)
        preds.append(tuple(plist))

    if pos == 0:
        init_states = [0, *sub_states]
    else:
        init_states = [0, 1]
    if pos == n - 1:
        final_states = [S - 1, *sub_states]
    else:
        final_states = [S - 1, S - 2]

    ll = _graph_forward(matrix.log_probs, cols, preds, init_states, final_states)
    return ForwardResult(ll)


def deletion_forward(matrix: PosteriorMatrix, seq, pos: int,
                     blank: int | None = None,
                     inventory: PhonemeInventory | None = None) -> ForwardResult:
    """Likelihood of ``seq`` with position ``pos`` removed.

    Deleting the only phoneme leaves the empty sequence, whose likelihood is
    the all-blank product over the frames.
    """
    ids = _sequence_ids(seq)
    if not 0 <= pos < len(ids):
        raise IndexError(f"position {pos} out of range for sequence of length {len(ids)}")
    shortened = ids[:pos] + ids[pos + 1 :]
    return ctc_forward(matrix, shortened, blank=blank, inventory=inventory)


def _batch_chain_forward(log_probs, cols, skip_ok, start, cached):
    """Advance a batch of chain DPs over the states ``start:`` only.

    Every variant in the batch shares its first ``start`` extended states
    (tokens and transitions) with the chain behind ``cached``, so those
    columns of the DP table are reused instead of recomputed. ``cols`` and
    ``skip_ok`` are (B, W) arrays covering just the recomputed states. With
    ``start == 0`` and ``cached is None`` this is a plain batched full DP.

    Returns (B,) log-likelihoods; the cell count per variant is T * W.
    """
    T = log_probs.shape[0]
    B, W = cols.shape
    em = log_probs[:, cols]  # (T, B, W)
    alpha = np.full((B, W), NEG_INF)
    if start == 0:
        alpha[:, 0] = em[0, :, 0]
        if W > 1:
            alpha[:, 1] = em[0, :, 1]
    elif start == 1:
        alpha[:, 0] = em[0, :, 0]
    boundary = np.full((B, 2), NEG_INF)
    for t in range(1, T):
        if cached is not None:
            if start >= 2:
                boundary[:, 0] = cached[t - 1, start - 2]
            boundary[:, 1] = cached[t - 1, start - 1]
        ext = np.concatenate((boundary, alpha), axis=1)
        m = np.logaddexp(ext[:, 2:], ext[:, 1:-1])
        m = np.where(skip_ok, np.logaddexp(m, ext[:, :-2]), m)
        alpha = m + em[t]
    if W == 1:
        return alpha[:, 0].copy()
    return np.logaddexp(alpha[:, -1], alpha[:, -2])


def _classify_perturbation(ids, pos, variant):
    n = len(ids)
    variant = tuple(variant)
    if len(variant) == n:
        if variant[:pos] != ids[:pos] or variant[pos + 1 :] != ids[pos + 1 :]:
            raise ValueError(f"substitution variant at {pos} alters other positions")
        if variant[pos] == ids[pos]:
            raise ValueError(f"substitution variant at {pos} does not change the phoneme")
        return "substitution", variant[pos]
    if len(variant) == n - 1:
        if variant != ids[:pos] + ids[pos + 1 :]:
            raise ValueError(f"deletion variant at {pos} is not a single removal")
        return "deletion", None
    raise ValueError("perturbation must be a single substitution or deletion")


def batched_perturbation_forward(matrix: PosteriorMatrix, seq, perturbations,
                                 blank: int | None = None,
                                 inventory: PhonemeInventory | None = None,
                                 use_cache: bool = True) -> BatchedForwardResult:
    """Score many single-position variants of one sequence.

    ``perturbations`` is a list of (pos, variant_ids) pairs where each variant
    is ``seq`` with one substitution or one deletion at ``pos``. Results are
    elementwise identical to independent ``ctc_forward`` calls; with
    ``use_cache`` the DP columns for extended states before the perturbed
    position are taken from the original sequence's table, since a
    perturbation at ``pos`` cannot change them.
    """
    ids = _sequence_ids(seq)
    blank = _resolve_blank(blank, inventory)
    log_probs = matrix.log_probs
    T = log_probs.shape[0]
    base_cols, base_skip = _chain_arrays(ids, blank)
    S = len(base_cols)

    alpha = _chain_alpha(log_probs, base_cols, base_skip)
    orig_ll = _terminal_lse(alpha[-1])
    cached = alpha if use_cache else None

    B = len(perturbations)
    lls = np.empty(B)
    cells = np.zeros(B, dtype=np.int64)
    if B == 0:
        return BatchedForwardResult(lls, cells, orig_ll, T * S, use_cache)

    subs_by_pos: dict[int, list[tuple[int, int]]] = {}
    dels: list[tuple[int, int]] = []
    for idx, (pos, variant) in enumerate(perturbations):
        if not 0 <= pos < len(ids):
            raise IndexError(f"perturbation position {pos} out of range")
        kind, q = _classify_perturbation(ids, pos, variant)
        if kind == "substitution":
            subs_by_pos.setdefault(pos, []).append((idx, q))
        else:
            dels.append((idx, pos))

    for pos, group in subs_by_pos.items():
        qs = np.asarray([q for _, q in group], dtype=np.intp)
        k = len(group)
        start = 2 * pos + 1 if use_cache else 0
        W = S - start
        cols = np.tile(base_cols[start:], (k, 1))
        cols[:, 2 * pos + 1 - start] = qs
        skip = np.tile(base_skip[start:], (k, 1))
        if pos >= 1:
            left = ids[pos - 1]
            _set_col(skip, 2 * pos + 1 - start, qs != left)
        if pos + 1 < len(ids):
            right = ids[pos + 1]
            _set_col(skip, 2 * pos + 3 - start, qs != right)
        batch_ll = _batch_chain_forward(log_probs, cols, skip, start, cached)
        for row, (idx, _) in enumerate(group):
            lls[idx] = batch_ll[row]
            cells[idx] = T * W

    for idx, pos in dels:
        short = ids[:pos] + ids[pos + 1 :]
        s_cols, s_skip = _chain_arrays(short, blank)
        S_v = len(s_cols)
        start = 2 * pos + 1 if use_cache else 0
        if start >= S_v:
            # deleting the final phoneme: the whole variant chain is a prefix
            # of the original chain, so its terminals are already in the table
            if S_v == 1:
                lls[idx] = float(alpha[-1, 0])
            else:
                lls[idx] = float(np.logaddexp(alpha[-1, S_v - 1], alpha[-1, S_v - 2]))
            cells[idx] = 0
            continue
        W = S_v - start
        cols = s_cols[start:][None, :]
        skip = s_skip[start:][None, :]
        batch_ll = _batch_chain_forward(log_probs, cols, skip, start, cached)
        lls[idx] = batch_ll[0]
        cells[idx] = T * W

    return BatchedForwardResult(lls, cells, orig_ll, T * S, use_cache)


def _set_col(arr, col, values):
    if 0 <= col < arr.shape[1]:
        arr[:, col] = values
