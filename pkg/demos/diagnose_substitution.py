# A learner says /d æ t/ where the text says /ð æ t/. The alignment-free
# scorers should flag position 0 and name the substitution that explains
# the audio better than the canonical phoneme does.

import numpy as np

from gopkit import (
    CanonicalSequence,
    ConfusionMap,
    PhonemeInventory,
    PosteriorMatrix,
    REGIME_RPS,
    gop_pp_af,
)

inventory = PhonemeInventory.from_phonemes(["ð", "æ", "t", "d", "s", "e"])
canon = CanonicalSequence.from_symbols(["ð", "æ", "t"], inventory, utterance_id="that")

# what was actually spoken
spoken = [inventory.index(p) for p in ("d", "æ", "t")]

rng = np.random.default_rng(7)
rows = []
for pid in spoken:
    for _ in range(rng.integers(3, 5)):
        row = np.full(inventory.width, 0.12 / (inventory.width - 1))
        row[pid] = 0.88
        rows.append(row)
    blank = np.full(inventory.width, 0.12 / (inventory.width - 1))
    blank[0] = 0.88
    rows.append(blank)
matrix = PosteriorMatrix(np.log(np.array(rows)), "that")

# plausible L1-driven confusions only; keeps the candidate set small
cmap = ConfusionMap(
    {
        inventory.index("ð"): (inventory.index("d"),),
        inventory.index("æ"): (inventory.index("e"),),
        inventory.index("t"): (inventory.index("s"),),
    },
    allow_deletion=True,
)

report = gop_pp_af(matrix, canon, inventory, cmap=cmap, regime=REGIME_RPS)
print(f"utterance {report.utterance_id!r}, {report.forward_passes} forward passes\n")
for s in report.scores:
    line = f"pos {s.pos}  {s.phoneme:>2}  gop {s.score:+7.3f}  {s.decision}"
    if s.decision == "mispronounced" and s.best_perturbation is not None:
        doc = s.best_perturbation.to_document(inventory)
        if doc["kind"] == "substitution":
            line += f"   (sounds like {doc['substitute']!r})"
        else:
            line += f"   (best explained by {doc['kind']})"
    print(line)
