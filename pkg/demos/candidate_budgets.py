# How much work does each regime cost? For a 10-phoneme utterance over a
# 39-phoneme vocabulary the unrestricted regime evaluates every possible
# substitution plus a deletion at each position; a confusion map with
# three substitutes per phoneme cuts that by roughly a factor of ten.

import time

import numpy as np

from gopkit import (
    ConfusionMap,
    PhonemeInventory,
    PosteriorMatrix,
    REGIME_RPS,
    REGIME_UPS,
    gop_pp_af,
    substitution_pass_count,
)

inventory = PhonemeInventory.from_phonemes([f"p{i:02d}" for i in range(39)])
seq = tuple(range(1, 11))

ups_evals = substitution_pass_count(seq, vocab_size=inventory.size)

cmap = ConfusionMap(
    {pid: tuple(q for q in range(1, 40) if q != pid)[:3] for pid in seq},
    allow_deletion=True,
)
rps_evals = substitution_pass_count(seq, cmap=cmap)

print(f"unrestricted: {ups_evals} candidate evaluations")
print(f"restricted:   {rps_evals} candidate evaluations")
print(f"ratio:        {rps_evals / ups_evals:.4f}  "
      f"({100 * (1 - rps_evals / ups_evals):.1f}% fewer)")

# and the wall-clock difference on an actual scoring run
rng = np.random.default_rng(0)
frames = 64
probs = rng.dirichlet(np.full(inventory.width, 0.3), size=frames)
matrix = PosteriorMatrix(np.log(probs), "budget-demo")

for regime, kwargs in ((REGIME_UPS, {}), (REGIME_RPS, {"cmap": cmap})):
    t0 = time.perf_counter()
    report = gop_pp_af(matrix, seq, inventory, regime=regime, **kwargs)
    ms = (time.perf_counter() - t0) * 1000
    print(f"{regime}: {report.forward_passes} passes in {ms:.1f} ms")
