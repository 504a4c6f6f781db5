"""Phoneme-level goodness-of-pronunciation scoring on CTC posteriors."""

from .ctc import (
    AlignmentSegment,
    BatchedForwardResult,
    BruteForceTooLarge,
    ExtendedLabelSequence,
    ForwardResult,
    InfeasibleSequenceError,
    ViterbiAlignment,
    batched_perturbation_forward,
    ctc_brute_force,
    ctc_forward,
    ctc_viterbi_align,
    deletion_forward,
    masked_ctc_forward,
    minimal_frames,
)
from .formats import (
    FormatError,
    read_alignments,
    read_canonical_sequences,
    read_labels,
    read_reports,
    write_alignments,
    write_canonical_sequences,
    write_labels,
    write_reports,
)
from .gop import (
    DECISION_CORRECT,
    DECISION_MISPRONOUNCED,
    DECISION_UNDECIDED,
    KIND_DELETION,
    KIND_SUBSTITUTION,
    KIND_SUBSTITUTION_SET,
    METHOD_FA,
    METHOD_PA_AF,
    METHOD_PP_AF,
    REGIME_NONE,
    REGIME_RPS,
    REGIME_UPS,
    GopError,
    GopReport,
    GopScore,
    PerturbationSpec,
    generate_perturbations,
    gop_fa,
    gop_pa_af,
    gop_pp_af,
    inject_artificial_errors,
    report_from_document,
)
from .inventory import (
    CanonicalSequence,
    ConfusionMap,
    ConfusionMapError,
    InventoryError,
    PhonemeInventory,
    default_english_map,
    default_error_rules,
    load_confusion_map,
    substitution_pass_count,
)
from .metrics import (
    EvalError,
    EvalSummary,
    LabeledScore,
    ThresholdResult,
    classification_metrics,
    evaluate_scores,
    fit_poly2,
    mse,
    optimize_threshold,
    pcc_with_ci,
    predict_poly2,
    rank_auc,
)
from .posterior import (
    LOG_FLOOR,
    DegenerateFrameError,
    PosteriorFormatError,
    PosteriorMatrix,
    load_posteriors,
    renormalize,
    save_posteriors,
    save_posteriors_text,
)

__version__ = "0.1.0"
