"""Goodness-of-pronunciation scorers.

Three methods share one score convention: a GOP score is a log-probability
difference, and a low score is evidence of mispronunciation.

* FA     - forced-alignment baseline: mean framewise log posterior of the
           canonical phoneme over its aligned segment.
* PP-AF  - alignment-free, perturbation by explicit sequence rewriting:
           score(pos) = min perturbed CTC loss - original CTC loss.
* PA-AF  - alignment-free, substitutions at a position folded into one
           masked forward pass (union event); the deletion event is scored
           separately and the denominator takes the smaller loss.

Substitution candidates come from either the full inventory (UPS regime)
or a confusion map (RPS regime). Scorers are pure; wall time is measured
but callers may overwrite it when byte-stable output matters more.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .ctc import (
    batched_perturbation_forward,
    ctc_forward,
    deletion_forward,
    masked_ctc_forward,
)
from .inventory import (
    CanonicalSequence,
    ConfusionMap,
    PhonemeInventory,
    substitution_pass_count,
)
from .posterior import PosteriorMatrix

METHOD_FA = "fa"
METHOD_PA_AF = "pa-af"
METHOD_PP_AF = "pp-af"

REGIME_RPS = "rps"
REGIME_UPS = "ups"
REGIME_NONE = "none"

DECISION_CORRECT = "correct"
DECISION_MISPRONOUNCED = "mispronounced"
DECISION_UNDECIDED = "undecided"

KIND_SUBSTITUTION = "substitution"
KIND_DELETION = "deletion"
KIND_SUBSTITUTION_SET = "substitution_set"


class GopError(ValueError):
    pass


@dataclass(frozen=True)
class PerturbationSpec:
    """One edit of the canonical sequence at one position."""

    pos: int
    kind: str
    substitute: int | None = None
    substitutes: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind == KIND_SUBSTITUTION:
            if self.substitute is None:
                raise GopError("substitution needs a substitute phoneme")
        elif self.kind == KIND_DELETION:
            if self.substitute is not None or self.substitutes:
                raise GopError("deletion carries no substitute")
        elif self.kind == KIND_SUBSTITUTION_SET:
            if not self.substitutes:
                raise GopError("substitution set must be non-empty")
        else:
            raise GopError(f"unknown perturbation kind {self.kind!r}")

    def apply(self, ids: tuple[int, ...]) -> tuple[int, ...]:
        """Variant phoneme ids after the edit (single-sequence kinds only)."""
        if self.kind == KIND_SUBSTITUTION:
            return ids[: self.pos] + (self.substitute,) + ids[self.pos + 1 :]
        if self.kind == KIND_DELETION:
            return ids[: self.pos] + ids[self.pos + 1 :]
        raise GopError("a substitution set does not describe a single sequence")

    def to_document(self, inventory: PhonemeInventory | None = None) -> dict:
        doc: dict = {"kind": self.kind, "pos": self.pos}
        sym = (lambda q: inventory.symbol(q)) if inventory is not None else (lambda q: q)
        if self.kind == KIND_SUBSTITUTION:
            doc["substitute"] = sym(self.substitute)
        elif self.kind == KIND_SUBSTITUTION_SET:
            doc["substitutes"] = [sym(q) for q in self.substitutes]
        return doc


@dataclass(frozen=True)
class GopScore:
    pos: int
    phoneme_id: int
    phoneme: str
    score: float
    method: str
    regime: str
    decision: str
    loss_original: float
    loss_best: float
    best_perturbation: PerturbationSpec | None = None


@dataclass(frozen=True)
class GopReport:
    """Per-utterance scoring result, one GopScore per canonical position."""

    utterance_id: str
    method: str
    regime: str
    scores: tuple[GopScore, ...]
    forward_passes: int
    wall_ms: float

    def to_document(self, inventory: PhonemeInventory | None = None) -> dict:
        return {
            "utterance_id": self.utterance_id,
            "method": self.method,
            "regime": self.regime,
            "scores": [
                {
                    "pos": s.pos,
                    "phoneme": s.phoneme,
                    "score": s.score,
                    "best_perturbation": (
                        None
                        if s.best_perturbation is None
                        else s.best_perturbation.to_document(inventory)
                    ),
                    "loss_original": s.loss_original,
                    # NaN marks "not applicable" (the FA method); null in JSON
                    "loss_best": None if math.isnan(s.loss_best) else s.loss_best,
                }
                for s in self.scores
            ],
            "forward_passes": self.forward_passes,
            "wall_ms": self.wall_ms,
        }

    def to_json_line(self, inventory: PhonemeInventory | None = None) -> str:
        return json.dumps(self.to_document(inventory), ensure_ascii=False)

    def with_wall_ms(self, wall_ms: float) -> "GopReport":
        return replace(self, wall_ms=wall_ms)


def _decision(score: float) -> str:
    """Sign test on a finite score; sentinel scores carry no decision."""
    if not math.isfinite(score):
        return DECISION_UNDECIDED
    return DECISION_CORRECT if score >= 0 else DECISION_MISPRONOUNCED


def gop_fa(matrix: PosteriorMatrix, segments, inventory: PhonemeInventory,
           utterance_id: str = "") -> GopReport:
    """Forced-alignment GOP: per phoneme, the mean log posterior of that
    phoneme's column over its frame segment [start, end)."""
    started = time.perf_counter()
    scores = []
    for pos, seg in enumerate(segments):
        sym = inventory.symbol(seg.phoneme_id)
        if seg.end_frame <= seg.start_frame:
            raise GopError(f"empty alignment segment for phoneme {sym!r} at {pos}")
        if seg.end_frame > matrix.frame_count:
            raise GopError(
                f"segment for phoneme {sym!r} ends at frame {seg.end_frame}, "
                f"matrix has {matrix.frame_count}"
            )
        col = matrix.log_probs[seg.start_frame : seg.end_frame, seg.phoneme_id]
        value = float(col.mean())
        scores.append(
            GopScore(
                pos=pos,
                phoneme_id=seg.phoneme_id,
                phoneme=sym,
                score=value,
                method=METHOD_FA,
                regime=REGIME_NONE,
                # a mean log posterior has no zero reference, so no sign-based
                # call is possible; decisions for this method come from
                # threshold optimization downstream
                decision=DECISION_UNDECIDED,
                loss_original=-value,
                loss_best=math.nan,
            )
        )
    wall_ms = (time.perf_counter() - started) * 1000.0
    return GopReport(
        utterance_id=utterance_id or matrix.utterance_id,
        method=METHOD_FA,
        regime=REGIME_NONE,
        scores=tuple(scores),
        forward_passes=1,
        wall_ms=wall_ms,
    )


def _substitutes_at(seq_ids, pos, inventory, cmap, regime):
    original = seq_ids[pos]
    if regime == REGIME_UPS:
        return tuple(q for q in inventory.non_blank_ids() if q != original)
    if regime == REGIME_RPS:
        if cmap is None:
            raise GopError("the restricted regime needs a confusion map")
        return cmap.substitutes_for(original)
    raise GopError(f"unknown regime {regime!r}")


def _deletion_enabled(cmap, regime) -> bool:
    if regime == REGIME_UPS or cmap is None:
        return True
    return cmap.allow_deletion


def _resolve_regime(regime, cmap):
    # a passed map means restricted search unless the caller says otherwise;
    # silently running unrestricted with a map in hand reads like a bug
    if regime is None:
        return REGIME_RPS if cmap is not None else REGIME_UPS
    return regime


def generate_perturbations(seq, pos: int, inventory: PhonemeInventory,
                           cmap: ConfusionMap | None = None,
                           regime: str | None = None) -> list[PerturbationSpec]:
    """Single-position perturbations in their canonical deterministic order:
    substitutions first (inventory order for UPS, map order for RPS), then
    the deletion when enabled. ``regime`` defaults to restricted when a map
    is given and unrestricted otherwise."""
    regime = _resolve_regime(regime, cmap)
    ids = _seq_ids(seq)
    if not 0 <= pos < len(ids):
        raise IndexError(f"position {pos} out of range for sequence of length {len(ids)}")
    specs = [
        PerturbationSpec(pos, KIND_SUBSTITUTION, substitute=q)
        for q in _substitutes_at(ids, pos, inventory, cmap, regime)
    ]
    if _deletion_enabled(cmap, regime):
        specs.append(PerturbationSpec(pos, KIND_DELETION))
    return specs


def _seq_ids(seq):
    return seq.phoneme_ids if isinstance(seq, CanonicalSequence) else tuple(seq)


def _utt_id(seq, matrix):
    if isinstance(seq, CanonicalSequence) and seq.utterance_id:
        return seq.utterance_id
    return matrix.utterance_id


def _pass_budget(seq, inventory, cmap, regime) -> int:
    if regime == REGIME_UPS:
        return substitution_pass_count(seq, vocab_size=inventory.size) + 1
    return substitution_pass_count(seq, cmap=cmap) + 1


def gop_pp_af(matrix: PosteriorMatrix, seq, inventory: PhonemeInventory,
              cmap: ConfusionMap | None = None, regime: str | None = None,
              use_cache: bool = True) -> GopReport:
    """Perturbed-sequence GOP: every candidate edit becomes an explicit
    variant sequence, all variants are scored in one prefix-cached batch,
    and score(pos) = min variant loss - original loss."""
    started = time.perf_counter()
    regime = _resolve_regime(regime, cmap)
    ids = _seq_ids(seq)
    n = len(ids)
    specs_by_pos = [
        generate_perturbations(ids, pos, inventory, cmap, regime) for pos in range(n)
    ]
    flat: list[PerturbationSpec] = [s for specs in specs_by_pos for s in specs]
    batch = batched_perturbation_forward(
        matrix,
        ids,
        [(s.pos, s.apply(ids)) for s in flat],
        inventory=inventory,
        use_cache=use_cache,
    )
    loss_original = -batch.original_log_likelihood
    feasible = math.isfinite(loss_original)

    scores = []
    cursor = 0
    for pos in range(n):
        specs = specs_by_pos[pos]
        losses = [-float(batch.log_likelihoods[cursor + i]) for i in range(len(specs))]
        cursor += len(specs)
        best_loss = math.inf
        best_spec = None
        for spec, loss in zip(specs, losses):
            if loss < best_loss:
                best_loss = loss
                best_spec = spec
        if not specs:
            score = math.inf  # nothing to compare against
        elif not feasible:
            score = -math.inf
        else:
            score = best_loss - loss_original
        scores.append(
            GopScore(
                pos=pos,
                phoneme_id=ids[pos],
                phoneme=inventory.symbol(ids[pos]),
                score=score,
                method=METHOD_PP_AF,
                regime=regime,
                decision=_decision(score),
                loss_original=loss_original,
                loss_best=best_loss,
                best_perturbation=best_spec,
            )
        )
    wall_ms = (time.perf_counter() - started) * 1000.0
    return GopReport(
        utterance_id=_utt_id(seq, matrix),
        method=METHOD_PP_AF,
        regime=regime,
        scores=tuple(scores),
        forward_passes=_pass_budget(ids, inventory, cmap, regime),
        wall_ms=wall_ms,
    )


def gop_pa_af(matrix: PosteriorMatrix, seq, inventory: PhonemeInventory,
              cmap: ConfusionMap | None = None,
              regime: str | None = None) -> GopReport:
    """Position-adaptive GOP: the substitution candidates at a position are
    pooled into a single masked forward pass computing the union likelihood,
    the deletion is a second pass, and the denominator is whichever event
    has the smaller loss. The reported pass count stays in per-candidate
    units so the two alignment-free methods are directly comparable."""
    started = time.perf_counter()
    regime = _resolve_regime(regime, cmap)
    ids = _seq_ids(seq)
    n = len(ids)
    loss_original = -ctc_forward(matrix, ids, inventory=inventory).log_likelihood
    feasible = math.isfinite(loss_original)
    allow_del = _deletion_enabled(cmap, regime)

    scores = []
    for pos in range(n):
        allowed = _substitutes_at(ids, pos, inventory, cmap, regime)
        events: list[tuple[float, PerturbationSpec]] = []
        if allowed:
            union = masked_ctc_forward(matrix, ids, pos, allowed, inventory=inventory)
            if len(allowed) == 1:
                spec = PerturbationSpec(pos, KIND_SUBSTITUTION, substitute=allowed[0])
            else:
                spec = PerturbationSpec(pos, KIND_SUBSTITUTION_SET, substitutes=allowed)
            events.append((union.loss, spec))
        if allow_del:
            dele = deletion_forward(matrix, ids, pos, inventory=inventory)
            events.append((dele.loss, PerturbationSpec(pos, KIND_DELETION)))

        best_loss = math.inf
        best_spec = None
        for loss, spec in events:
            if loss < best_loss:
                best_loss = loss
                best_spec = spec
        if not events:
            score = math.inf
        elif not feasible:
            score = -math.inf
        else:
            score = best_loss - loss_original
        scores.append(
            GopScore(
                pos=pos,
                phoneme_id=ids[pos],
                phoneme=inventory.symbol(ids[pos]),
                score=score,
                method=METHOD_PA_AF,
                regime=regime,
                decision=_decision(score),
                loss_original=loss_original,
                loss_best=best_loss,
                best_perturbation=best_spec,
            )
        )
    wall_ms = (time.perf_counter() - started) * 1000.0
    return GopReport(
        utterance_id=_utt_id(seq, matrix),
        method=METHOD_PA_AF,
        regime=regime,
        scores=tuple(scores),
        forward_passes=_pass_budget(ids, inventory, cmap, regime),
        wall_ms=wall_ms,
    )


def inject_artificial_errors(seq, rules: ConfusionMap, seed: int, rate: float,
                             inventory: PhonemeInventory | None = None):
    """Rewrite a canonical sequence with simulated pronunciation errors.

    Positions whose phoneme has a rewrite rule flip with probability
    ``rate``; a flip draws one substitute uniformly from the rule's list.
    Exactly one uniform variate is consumed per rewritable position plus one
    per flip, left to right, so outputs are reproducible from the seed.
    Deletion flags on the rule table are ignored: labels are per-position,
    which only substitution preserves.

    Returns (modified sequence, labels) with label 1 marking a rewrite.
    """
    if not 0.0 <= rate <= 1.0:
        raise GopError(f"error rate must lie in [0, 1], got {rate}")
    ids = list(_seq_ids(seq))
    labels = [0] * len(ids)
    rng = np.random.default_rng(seed)
    for pos, pid in enumerate(ids):
        subs = rules.substitutes_for(pid)
        if not subs:
            continue
        if rng.random() < rate:
            ids[pos] = subs[int(rng.integers(len(subs)))]
            labels[pos] = 1
    utt = seq.utterance_id if isinstance(seq, CanonicalSequence) else ""
    return CanonicalSequence(tuple(ids), utt), labels


def report_from_document(doc: dict, inventory: PhonemeInventory) -> GopReport:
    """Rebuild a GopReport from its JSON document form."""
    method = doc["method"]
    regime = doc["regime"]
    scores = []
    for entry in doc["scores"]:
        pid = inventory.index(entry["phoneme"])
        raw = entry.get("best_perturbation")
        spec = None
        if raw is not None:
            kind = raw["kind"]
            if kind == KIND_SUBSTITUTION:
                spec = PerturbationSpec(raw["pos"], kind,
                                        substitute=inventory.index(raw["substitute"]))
            elif kind == KIND_SUBSTITUTION_SET:
                spec = PerturbationSpec(
                    raw["pos"], kind,
                    substitutes=tuple(inventory.index(s) for s in raw["substitutes"]),
                )
            else:
                spec = PerturbationSpec(raw["pos"], kind)
        score = float(entry["score"])
        loss_best = entry["loss_best"]
        scores.append(
            GopScore(
                pos=int(entry["pos"]),
                phoneme_id=pid,
                phoneme=entry["phoneme"],
                score=score,
                method=method,
                regime=regime,
                decision=_decision(score),
                loss_original=float(entry["loss_original"]),
                loss_best=math.nan if loss_best is None else float(loss_best),
                best_perturbation=spec,
            )
        )
    return GopReport(
        utterance_id=doc["utterance_id"],
        method=method,
        regime=regime,
        scores=tuple(scores),
        forward_passes=int(doc["forward_passes"]),
        wall_ms=float(doc["wall_ms"]),
    )
