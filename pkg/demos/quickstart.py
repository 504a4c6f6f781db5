# Minimal tour: build an inventory, fake some posteriors, score one
# utterance with all three methods, and print what each one saw.

import numpy as np

from gopkit import (
    CanonicalSequence,
    PhonemeInventory,
    PosteriorMatrix,
    REGIME_UPS,
    ctc_viterbi_align,
    gop_fa,
    gop_pa_af,
    gop_pp_af,
)


def fake_posteriors(ids, inventory, rng, frames_each=3, dominant=0.9):
    """Phoneme-dominated frame runs with a blank frame between them."""
    width = inventory.width
    rows = []
    for pid in ids:
        for _ in range(frames_each):
            row = np.full(width, (1.0 - dominant) / (width - 1))
            row[pid] = dominant
            rows.append(row)
        blank = np.full(width, (1.0 - dominant) / (width - 1))
        blank[0] = dominant
        rows.append(blank)
    return PosteriorMatrix(np.log(np.array(rows)), "demo")


def main():
    inventory = PhonemeInventory.from_phonemes(["k", "æ", "t", "s", "e"])
    canon = CanonicalSequence.from_symbols(["k", "æ", "t"], inventory, utterance_id="demo")

    rng = np.random.default_rng(1)
    matrix = fake_posteriors(canon.phoneme_ids, inventory, rng)
    print(f"posteriors: {matrix.frame_count} frames x {matrix.width} columns")

    alignment = ctc_viterbi_align(matrix, canon, inventory=inventory)
    print("\nforced alignment:")
    for seg in alignment:
        print(f"  {inventory.symbol(seg.phoneme_id)}  frames [{seg.start_frame}, {seg.end_frame})")

    # forced-alignment scores are mean log posteriors: always <= 0, ranked
    # against a tuned threshold rather than against zero
    fa = gop_fa(matrix, alignment, inventory, utterance_id="demo")
    print(f"\nforced-alignment GOP ({fa.forward_passes} forward pass)")
    for s in fa.scores:
        print(f"  pos {s.pos}  {s.phoneme:>2}  score {s.score:+.3f}")

    # the alignment-free scores compare the canonical phoneme against its
    # best competitor, so their sign already carries a verdict
    for name, report in [
        ("perturbed-sequence GOP", gop_pp_af(matrix, canon, inventory, regime=REGIME_UPS)),
        ("position-adaptive GOP", gop_pa_af(matrix, canon, inventory, regime=REGIME_UPS)),
    ]:
        print(f"\n{name} ({report.forward_passes} forward passes)")
        for s in report.scores:
            print(f"  pos {s.pos}  {s.phoneme:>2}  score {s.score:+.3f}  -> {s.decision}")


if __name__ == "__main__":
    main()
