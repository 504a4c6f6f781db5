"""Mispronunciation-detection metrics.

Classification treats mispronounced as the positive class and applies the
decision rule ``gop < threshold``: low scores flag errors. The threshold is
chosen by sweeping integer percentiles of the pooled score distribution and
keeping the one that maximizes the Matthews correlation coefficient.

Regression against 0-2 human ratings follows the usual protocol for such
corpora: a second-order polynomial maps GOP to the human scale, predictions
are clamped to [0, 2], and agreement is reported as Pearson correlation
(with a Fisher-transform confidence interval) plus mean squared error.

Degenerate denominators never raise inside metric computation; the affected
value is reported as 0 and a flag names the condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.stats import norm, rankdata


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledScore:
    """One scored phoneme joined with its ground truth.

    ``label`` is 1 for mispronounced (the positive class), 0 for correct.
    ``human_score`` is an optional 0-2 rating.
    """

    utterance_id: str
    pos: int
    gop: float
    label: int
    human_score: float | None = None

    def __post_init__(self):
        if self.label not in (0, 1):
            raise EvalError(f"binary label must be 0 or 1, got {self.label!r}")


class ThresholdResult(NamedTuple):
    threshold: float
    percentile: int
    mcc: float


@dataclass(frozen=True)
class EvalSummary:
    auc: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    mcc: float
    threshold: float
    auc_at_mcc_max: float
    tp: int
    fp: int
    tn: int
    fn: int
    flags: tuple[str, ...] = ()
    threshold_percentile: int | None = None
    pcc_point: float | None = None
    pcc_low: float | None = None
    pcc_high: float | None = None
    mse: float | None = None
    poly2: tuple[float, float, float] | None = None

    def to_document(self) -> dict:
        doc = {
            "AUC": self.auc,
            "Accuracy": self.accuracy,
            "Precision": self.precision,
            "Recall": self.recall,
            "F1": self.f1,
            "MCC": self.mcc,
            "AUC MCC_max": self.auc_at_mcc_max,
        }
        if self.pcc_point is not None or self.mse is not None:
            doc["PCC"] = self.pcc_point
            doc["PCC (low conf)"] = self.pcc_low
            doc["PCC (high conf)"] = self.pcc_high
            doc["MSE"] = self.mse
        doc["threshold"] = self.threshold
        doc["threshold_percentile"] = self.threshold_percentile
        doc["counts"] = {"TP": self.tp, "FP": self.fp, "TN": self.tn, "FN": self.fn}
        if self.poly2 is not None:
            doc["poly2_coefficients"] = list(self.poly2)
        doc["flags"] = list(self.flags)
        return doc


def _arrays(scores):
    gop = np.asarray([s.gop for s in scores], dtype=float)
    label = np.asarray([s.label for s in scores], dtype=int)
    return gop, label


def _confusion(gop, label, threshold):
    pred = gop < threshold  # low score means flagged as mispronounced
    actual = label == 1
    tp = int(np.sum(pred & actual))
    fp = int(np.sum(pred & ~actual))
    tn = int(np.sum(~pred & ~actual))
    fn = int(np.sum(~pred & actual))
    return tp, fp, tn, fn


def _mcc(tp, fp, tn, fn) -> float:
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def rank_auc(gop, label) -> float:
    """Threshold-free ROC AUC of the rule "lower GOP means mispronounced",
    computed from rank sums; tied scores contribute one half."""
    gop = np.asarray(gop, dtype=float)
    label = np.asarray(label, dtype=int)
    n_pos = int(np.sum(label == 1))
    n_neg = int(np.sum(label == 0))
    if n_pos == 0 or n_neg == 0:
        raise EvalError("AUC needs both classes present")
    ranks = rankdata(gop)
    u_high = float(np.sum(ranks[label == 1])) - n_pos * (n_pos + 1) / 2.0
    return 1.0 - u_high / (n_pos * n_neg)


def optimize_threshold(scores) -> ThresholdResult:
    """Best integer GOP percentile (1..99) by MCC; ties resolve to the
    lowest percentile. Requires both classes."""
    gop, label = _arrays(scores)
    if len(np.unique(label)) < 2:
        raise EvalError("threshold search needs both classes present")
    finite = gop[np.isfinite(gop)]
    if finite.size == 0:
        raise EvalError("threshold search needs at least one finite score")
    best = None
    for pct in range(1, 100):
        threshold = float(np.percentile(finite, pct))
        mcc = _mcc(*_confusion(gop, label, threshold))
        if best is None or mcc > best.mcc:
            best = ThresholdResult(threshold, pct, mcc)
    return best


def classification_metrics(scores, threshold: float) -> EvalSummary:
    """Confusion-matrix metrics at one threshold plus the threshold-free
    ranking AUC. ``auc_at_mcc_max`` is the single-point ROC area at this
    operating point, the mean of sensitivity and specificity."""
    if not math.isfinite(threshold):
        raise EvalError("threshold must be finite")
    gop, label = _arrays(scores)
    tp, fp, tn, fn = _confusion(gop, label, threshold)
    flags = []

    def ratio(num, denom, flag):
        if denom == 0:
            flags.append(flag)
            return 0.0
        return num / denom

    total = tp + fp + tn + fn
    accuracy = ratio(tp + tn, total, "empty_input")
    precision = ratio(tp, tp + fp, "no_positive_predictions")
    recall = ratio(tp, tp + fn, "no_positive_labels")
    specificity = ratio(tn, tn + fp, "no_negative_labels")
    f1 = ratio(2 * precision * recall, precision + recall, "f1_undefined")
    mcc = _mcc(tp, fp, tn, fn)
    if mcc == 0.0 and (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn) == 0:
        flags.append("mcc_zero_denominator")
    try:
        auc = rank_auc(gop, label)
    except EvalError:
        auc = 0.0
        flags.append("auc_single_class")
    return EvalSummary(
        auc=auc,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        mcc=mcc,
        threshold=float(threshold),
        auc_at_mcc_max=(recall + specificity) / 2.0,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        flags=tuple(flags),
    )


def fit_poly2(gop, human):
    """Least-squares quadratic human ~ a*gop^2 + b*gop + c."""
    gop = np.asarray(gop, dtype=float)
    human = np.asarray(human, dtype=float)
    if gop.shape != human.shape:
        raise EvalError("score and rating lists differ in length")
    if gop.size < 3:
        raise EvalError("quadratic fit needs at least three points")
    if np.unique(gop).size < 3:
        raise EvalError("quadratic fit needs three distinct score values")
    a, b, c = np.polyfit(gop, human, 2)
    return float(a), float(b), float(c)


def predict_poly2(coefficients, gop, clamp: bool = True):
    """Evaluate the quadratic; by default clamp predictions to the 0-2
    human-rating range."""
    pred = np.polyval(np.asarray(coefficients, dtype=float), np.asarray(gop, dtype=float))
    if clamp:
        pred = np.clip(pred, 0.0, 2.0)
    return pred


def pcc_with_ci(pred, human, confidence: float = 0.95):
    """Pearson r with a Fisher z confidence interval.

    Returns (point, low, high). A perfect |r| = 1 has a degenerate interval
    and is returned as (r, r, r).
    """
    pred = np.asarray(pred, dtype=float)
    human = np.asarray(human, dtype=float)
    if pred.shape != human.shape:
        raise EvalError("prediction and rating lists differ in length")
    n = pred.size
    if n < 4:
        raise EvalError("correlation interval needs at least four points")
    if np.ptp(pred) == 0 or np.ptp(human) == 0:
        raise EvalError("correlation undefined for a constant input")
    r = float(np.corrcoef(pred, human)[0, 1])
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, r, r
    z = math.atanh(r)
    half = float(norm.ppf((1.0 + confidence) / 2.0)) / math.sqrt(n - 3)
    return r, math.tanh(z - half), math.tanh(z + half)


def mse(pred, human) -> float:
    pred = np.asarray(pred, dtype=float)
    human = np.asarray(human, dtype=float)
    if pred.shape != human.shape:
        raise EvalError("prediction and rating lists differ in length")
    if pred.size == 0:
        raise EvalError("mean squared error needs at least one point")
    return float(np.mean((pred - human) ** 2))


def evaluate_scores(scores, confidence: float = 0.95,
                    clamp_predictions: bool = True) -> EvalSummary:
    """Full evaluation: MCC-optimal threshold, classification metrics at it,
    and the regression block when human ratings are available."""
    chosen = optimize_threshold(scores)
    summary = classification_metrics(scores, chosen.threshold)
    summary = replace(summary, threshold_percentile=chosen.percentile)

    rated = [
        s for s in scores if s.human_score is not None and math.isfinite(s.gop)
    ]
    if not rated:
        return summary
    gop = np.asarray([s.gop for s in rated], dtype=float)
    human = np.asarray([s.human_score for s in rated], dtype=float)
    flags = list(summary.flags)
    try:
        coeffs = fit_poly2(gop, human)
    except EvalError:
        flags.append("poly2_degenerate")
        return replace(summary, flags=tuple(flags))
    pred = predict_poly2(coeffs, gop, clamp=clamp_predictions)
    error = mse(pred, human)
    try:
        point, low, high = pcc_with_ci(pred, human, confidence)
    except EvalError:
        flags.append("pcc_undefined")
        return replace(summary, flags=tuple(flags), mse=error, poly2=coeffs)
    return replace(
        summary,
        flags=tuple(flags),
        pcc_point=point,
        pcc_low=low,
        pcc_high=high,
        mse=error,
        poly2=coeffs,
    )
