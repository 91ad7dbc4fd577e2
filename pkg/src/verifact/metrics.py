"""Hard-classification metrics and stratified reports.

Conventions that matter downstream: per-class F1 is 0 whenever its
denominator vanishes, weighted averaging weights by gold support, and
macro averaging ranges over classes present in gold only, so a class
that is never predicted (or never occurs) cannot distort the mean.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import PossibilityLabel
from .errors import DataError
from .parsing import PredictionRecord

__all__ = [
    "Averaging",
    "ConfusionMatrix",
    "MetricsReport",
    "confusion",
    "metrics",
    "per_class_f1",
    "stratified_report",
    "write_summary_csv",
]


class Averaging(str, Enum):
    WEIGHTED = "weighted"
    MACRO = "macro"


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = gold classes, columns = predicted classes."""

    classes: tuple
    matrix: np.ndarray

    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def total(self) -> int:
        return int(self.matrix.sum())


def _class_order(gold: Sequence, predictions: Sequence) -> tuple:
    seen = set(gold) | set(predictions)
    try:
        return tuple(sorted(seen))
    except TypeError:
        ordered: dict = {}
        for value in list(gold) + list(predictions):
            ordered.setdefault(value, None)
        return tuple(ordered)


def confusion(predictions: Sequence, gold: Sequence) -> ConfusionMatrix:
    """Tally a gold-by-predicted count matrix over the shared alphabet."""
    if len(predictions) != len(gold):
        raise DataError(f"length mismatch: {len(predictions)} predictions "
                        f"vs {len(gold)} gold labels")
    if not gold:
        raise DataError("cannot build a confusion matrix from empty inputs")
    if set(predictions).isdisjoint(set(gold)):
        raise DataError("prediction and gold alphabets share no classes; "
                        "inputs are probably misaligned")
    classes = _class_order(gold, predictions)
    index = {cls: i for i, cls in enumerate(classes)}
    matrix = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for predicted, actual in zip(predictions, gold):
        matrix[index[actual], index[predicted]] += 1
    return ConfusionMatrix(classes=classes, matrix=matrix)


def per_class_f1(cm: ConfusionMatrix) -> dict:
    """F1 per class, 0 whenever precision + recall is 0."""
    scores: dict = {}
    diag = np.diag(cm.matrix)
    col_sums = cm.matrix.sum(axis=0)
    row_sums = cm.matrix.sum(axis=1)
    for i, cls in enumerate(cm.classes):
        precision = diag[i] / col_sums[i] if col_sums[i] else 0.0
        recall = diag[i] / row_sums[i] if row_sums[i] else 0.0
        if precision + recall == 0.0:
            scores[cls] = 0.0
        else:
            scores[cls] = 2.0 * precision * recall / (precision + recall)
    return scores


def metrics(cm: ConfusionMatrix, averaging: Averaging) -> tuple[float, float]:
    """(accuracy, averaged F1) for a confusion matrix."""
    total = cm.total()
    if total == 0:
        raise DataError("confusion matrix has no observations")
    accuracy = float(np.trace(cm.matrix)) / total
    f1_by_class = per_class_f1(cm)
    supports = cm.row_sums()
    present = [i for i in range(len(cm.classes)) if supports[i] > 0]
    if averaging is Averaging.WEIGHTED:
        weight_total = float(supports[present].sum())
        f1 = sum(supports[i] * f1_by_class[cm.classes[i]] for i in present) / weight_total
    elif averaging is Averaging.MACRO:
        f1 = sum(f1_by_class[cm.classes[i]] for i in present) / len(present)
    else:  # pragma: no cover
        raise DataError(f"unknown averaging: {averaging}")
    return accuracy, float(f1)


@dataclass
class MetricsReport:
    """Overall metrics plus optional per-possibility-stratum sub-reports."""

    n_total: int
    n_scored: int
    n_excluded: int
    n_filled_random: int
    accuracy: float
    weighted_f1: float
    macro_f1: float
    per_class_f1: dict
    strata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        payload = {
            "n_total": self.n_total,
            "n_scored": self.n_scored,
            "n_excluded": self.n_excluded,
            "n_filled_random": self.n_filled_random,
            "accuracy": self.accuracy,
            "weighted_f1": self.weighted_f1,
            "macro_f1": self.macro_f1,
            "per_class_f1": {str(_plain(cls)): value
                             for cls, value in self.per_class_f1.items()},
        }
        payload["strata"] = {key: report.to_dict()
                             for key, report in self.strata.items()}
        return payload

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n",
                              encoding="utf-8")


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    return value


def _report_for(
    records: Sequence[PredictionRecord],
    excluded: Sequence[PredictionRecord],
    gold: Mapping[str, object],
) -> MetricsReport:
    predictions = []
    actuals = []
    for record in records:
        if record.prediction is None:
            raise DataError(f"record {record.statement_id} has no prediction; "
                            "run decision rules before scoring")
        predictions.append(record.prediction)
        actuals.append(_plain(gold[record.statement_id]))
    if records:
        cm = confusion(predictions, actuals)
        accuracy, weighted = metrics(cm, Averaging.WEIGHTED)
        _, macro = metrics(cm, Averaging.MACRO)
        f1_map = per_class_f1(cm)
    else:
        accuracy = weighted = macro = 0.0
        f1_map = {}
    return MetricsReport(
        n_total=len(records) + len(excluded),
        n_scored=len(records),
        n_excluded=len(excluded),
        n_filled_random=sum(1 for r in records if r.filled_random),
        accuracy=accuracy,
        weighted_f1=weighted,
        macro_f1=macro,
        per_class_f1=f1_map,
    )


def stratified_report(
    records: Sequence[PredictionRecord],
    gold: Mapping[str, object],
    possibility_labels: Mapping[str, PossibilityLabel] | None = None,
    excluded: Sequence[PredictionRecord] = (),
) -> MetricsReport:
    """Score kept records against gold, overall and per possibility stratum.

    ``excluded`` records (gated or uncertain) count toward totals and
    per-stratum exclusion counts but contribute nothing to the metrics.
    """
    missing = [r.statement_id for r in records if r.statement_id not in gold]
    if missing:
        raise DataError("statement ids missing from gold: "
                        + ", ".join(sorted(missing)[:10]))
    report = _report_for(records, excluded, gold)
    if possibility_labels is not None:
        all_records = list(records) + list(excluded)
        missing = [r.statement_id for r in all_records
                   if r.statement_id not in possibility_labels]
        if missing:
            raise DataError("statement ids missing possibility labels: "
                            + ", ".join(sorted(missing)[:10]))
        for stratum in PossibilityLabel:
            kept_s = [r for r in records
                      if possibility_labels[r.statement_id] is stratum]
            excluded_s = [r for r in excluded
                          if possibility_labels[r.statement_id] is stratum]
            if kept_s or excluded_s:
                report.strata[stratum.value] = _report_for(kept_s, excluded_s, gold)
    return report


def write_summary_csv(report: MetricsReport, path: str | Path) -> None:
    """One row per stratum plus the All row, mirroring the report tables."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["stratum", "n_total", "n_scored", "n_excluded",
                         "accuracy", "weighted_f1", "macro_f1"])
        for name, sub in report.strata.items():
            writer.writerow([name, sub.n_total, sub.n_scored, sub.n_excluded,
                             f"{sub.accuracy:.6f}", f"{sub.weighted_f1:.6f}",
                             f"{sub.macro_f1:.6f}"])
        writer.writerow(["all", report.n_total, report.n_scored,
                         report.n_excluded, f"{report.accuracy:.6f}",
                         f"{report.weighted_f1:.6f}", f"{report.macro_f1:.6f}"])
