# Build a small synthetic corpus with known mispronunciations, score it,
# and walk the percentile sweep that picks the decision threshold.
#
# The corruption step rewrites phonemes according to a confusion table, so
# the positive class is exactly the set of rewritten positions.

import numpy as np

from gopkit import (
    CanonicalSequence,
    LabeledScore,
    PhonemeInventory,
    PosteriorMatrix,
    REGIME_UPS,
    classification_metrics,
    default_error_rules,
    evaluate_scores,
    gop_pp_af,
    inject_artificial_errors,
    optimize_threshold,
)

inventory = PhonemeInventory.from_phonemes(
    ["ð", "d", "θ", "s", "æ", "e", "ʌ", "ɑ", "eɪ", "eː", "əʊ", "o",
     "k", "t", "m", "n", "i", "u"]
)
rules = default_error_rules(inventory)
rng = np.random.default_rng(42)


def synth(ids):
    rows = []
    for pid in ids:
        for _ in range(int(rng.integers(2, 5))):
            row = np.full(inventory.width, 0.1 / (inventory.width - 1))
            row[pid] = 0.9
            rows.append(row)
        blank = np.full(inventory.width, 0.1 / (inventory.width - 1))
        blank[0] = 0.9
        rows.append(blank)
    return PosteriorMatrix(np.log(np.array(rows)))


labeled = []
for idx in range(40):
    n = int(rng.integers(4, 12))
    ids = tuple(int(q) for q in rng.integers(1, inventory.size + 1, size=n))
    canon = CanonicalSequence(ids, f"u{idx:02d}")
    corrupted, labels = inject_artificial_errors(canon, rules, seed=idx, rate=0.3)
    report = gop_pp_af(synth(corrupted.phoneme_ids), canon, inventory, regime=REGIME_UPS)
    for s, label in zip(report.scores, labels):
        labeled.append(LabeledScore(canon.utterance_id, s.pos, s.score, label))

flips = sum(s.label for s in labeled)
print(f"{len(labeled)} scored positions, {flips} corrupted\n")

best = optimize_threshold(labeled)
print("percentile sweep around the optimum:")
finite = np.array([s.gop for s in labeled if np.isfinite(s.gop)])
for pct in range(max(1, best.percentile - 3), min(99, best.percentile + 4)):
    thr = float(np.percentile(finite, pct))
    mcc = classification_metrics(labeled, thr).mcc
    marker = "  <-- chosen" if pct == best.percentile else ""
    print(f"  p{pct:02d}  threshold {thr:+8.3f}  MCC {mcc:.4f}{marker}")

summary = evaluate_scores(labeled)
print("\nsummary at the chosen threshold:")
for key, value in summary.to_document().items():
    if isinstance(value, float):
        print(f"  {key:<14} {value:.4f}")
