"""Decision rules over parsed verdicts.

Thresholding turns 0-100 scores into binary calls (True iff score >=
threshold), the optimizer scans every threshold exhaustively, k-way
binning maps scores onto coarser scales, and gating removes
near-midpoint or explicitly uncertain predictions before scoring.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .corpus import BinaryLabel
from .errors import ConfigError, DataError
from .parsing import PredictionRecord, VerdictKind

__all__ = [
    "ThresholdRule",
    "GateMode",
    "ExclusionReason",
    "GatedSet",
    "apply_threshold",
    "optimize_threshold",
    "score_to_kway",
    "gate_uncertain",
    "OTHER_CLASS_INDEX",
]

# In the four-way protocol the fourth class ("Other") exists in gold but
# is never reachable as a prediction.
OTHER_CLASS_INDEX = 3


@dataclass(frozen=True)
class ThresholdRule:
    """Predict True iff score >= threshold.

    101 is a valid threshold: it expresses the all-False rule, which the
    exhaustive optimizer must be able to return.
    """

    threshold: int

    def __post_init__(self) -> None:
        if not 0 <= self.threshold <= 101:
            raise ConfigError(f"threshold out of range 0-101: {self.threshold}")


def apply_threshold(score: int, rule: ThresholdRule) -> BinaryLabel:
    return BinaryLabel.TRUE if score >= rule.threshold else BinaryLabel.FALSE


def _weighted_f1_curve(scores: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Weighted F1 of (score >= t) against labels for every t in 0..101."""
    thresholds = np.arange(102)
    # predictions[t, i] = score_i >= t
    predicted_true = scores[None, :] >= thresholds[:, None]
    gold_true = labels.astype(bool)[None, :]
    tp = (predicted_true & gold_true).sum(axis=1).astype(float)
    fp = (predicted_true & ~gold_true).sum(axis=1).astype(float)
    fn = (~predicted_true & gold_true).sum(axis=1).astype(float)
    tn = (~predicted_true & ~gold_true).sum(axis=1).astype(float)
    n_true = float(gold_true.sum())
    n_false = float(len(labels)) - n_true

    with np.errstate(divide="ignore", invalid="ignore"):
        f1_true = np.where(2 * tp + fp + fn > 0, 2 * tp / (2 * tp + fp + fn), 0.0)
        f1_false = np.where(2 * tn + fn + fp > 0, 2 * tn / (2 * tn + fn + fp), 0.0)
    return (n_true * f1_true + n_false * f1_false) / (n_true + n_false)


def optimize_threshold(
    scores: Sequence[int], labels: Sequence[BinaryLabel]
) -> ThresholdRule:
    """Exhaustive scan over t in {0..101}; smallest t with maximal weighted F1."""
    if len(scores) == 0:
        raise DataError("cannot optimize a threshold on empty data")
    if len(scores) != len(labels):
        raise DataError(f"length mismatch: {len(scores)} scores "
                        f"vs {len(labels)} labels")
    score_arr = np.asarray(scores, dtype=np.int64)
    label_arr = np.asarray([int(label) for label in labels], dtype=np.int64)
    curve = _weighted_f1_curve(score_arr, label_arr)
    best = int(np.argmax(curve))  # argmax returns the first (smallest) maximizer
    return ThresholdRule(threshold=best)


def score_to_kway(score: int, k: int) -> int:
    """Map a 0-100 score to a class index on a k-point scale.

    Bin i covers [ceil(100*i/k), ceil(100*(i+1)/k)), the top bin closed
    at 100. k=4 is the four-label protocol whose fourth class is
    unreachable: scores fall into the three veracity classes only.
    """
    if k not in (3, 4, 6):
        raise ConfigError(f"unsupported k for k-way binning: {k}")
    if not 0 <= score <= 100:
        raise DataError(f"score outside 0-100: {score}")
    bins = 3 if k == 4 else k
    for i in range(bins):
        upper = -(-100 * (i + 1) // bins)  # ceil division
        if score < upper or i == bins - 1:
            return i
    raise AssertionError("unreachable")  # pragma: no cover


class GateMode(str, Enum):
    SCORE_BAND = "score_band"
    SOFTMAX_BAND = "softmax_band"
    UNCERTAIN_VERDICT = "uncertain_verdict"


class ExclusionReason(str, Enum):
    NEAR_MIDPOINT = "near_midpoint"
    UNCERTAIN_VERDICT = "uncertain_verdict"


@dataclass(frozen=True)
class GatedSet:
    """Partition of records into kept and excluded; metrics use kept only."""

    kept: list[PredictionRecord]
    excluded: list[PredictionRecord]
    exclusion_reason: ExclusionReason


def gate_uncertain(records: Sequence[PredictionRecord], mode: GateMode) -> GatedSet:
    """Remove predictions too close to the decision midpoint.

    ScoreBand drops integer scores in [49,51], SoftmaxBand drops
    probabilities in [0.49,0.51], UncertainVerdict drops records whose
    verdict is the explicit uncertainty signal.
    """
    kept: list[PredictionRecord] = []
    excluded: list[PredictionRecord] = []
    if mode is GateMode.UNCERTAIN_VERDICT:
        reason = ExclusionReason.UNCERTAIN_VERDICT
        for record in records:
            if record.verdict.kind is VerdictKind.UNCERTAIN:
                excluded.append(record)
            else:
                kept.append(record)
    elif mode is GateMode.SCORE_BAND:
        reason = ExclusionReason.NEAR_MIDPOINT
        for record in records:
            if record.verdict.kind is not VerdictKind.SCORE:
                raise DataError(
                    f"record {record.statement_id} has verdict "
                    f"{record.verdict.kind.value!r}; score-band gating "
                    "needs score verdicts")
            if 49 <= record.verdict.value <= 51:
                excluded.append(record)
            else:
                kept.append(record)
    elif mode is GateMode.SOFTMAX_BAND:
        reason = ExclusionReason.NEAR_MIDPOINT
        for record in records:
            if record.probability is None:
                raise DataError(
                    f"record {record.statement_id} has no probability; "
                    "softmax-band gating needs calibrated records")
            if 0.49 <= record.probability <= 0.51:
                excluded.append(record)
            else:
                kept.append(record)
    else:  # pragma: no cover
        raise ConfigError(f"unknown gate mode: {mode}")
    return GatedSet(kept=kept, excluded=excluded, exclusion_reason=reason)
