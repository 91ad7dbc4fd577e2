"""Run-to-run variation analysis and embedding-space error analysis.

The variation study quantifies how much repeated sampling moves scores
and accuracy. The error analysis compares two systems' correctness
item by item and asks whether the items only one system gets right sit
farther from the training distribution, via nearest-train cosine
distances and a two-sample test.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .decisions import ThresholdRule, apply_threshold
from .errors import DataError
from .gateway import EmbeddingVector
from .parsing import PredictionRecord, Verdict, VerdictKind, fill_refusals

__all__ = [
    "VariationReport",
    "ErrorPartition",
    "TestMethod",
    "variation_study",
    "nearest_train_distance",
    "group_distance_test",
    "error_partition",
    "export_error_analysis",
]


@dataclass(frozen=True)
class VariationReport:
    """Dispersion summary for one temperature setting across repetitions."""

    mean_accuracy: float
    accuracy_sd: float
    n_nonnumeric: int
    mean_example_sd: float
    max_example_sd: float
    max_ptp: int
    n_large_ptp: int

    def to_dict(self) -> dict:
        return {
            "mean_accuracy": self.mean_accuracy,
            "accuracy_sd": self.accuracy_sd,
            "n_nonnumeric": self.n_nonnumeric,
            "mean_example_sd": self.mean_example_sd,
            "max_example_sd": self.max_example_sd,
            "max_ptp": self.max_ptp,
            "n_large_ptp": self.n_large_ptp,
        }


def _sample_sd(values: Sequence[float]) -> float:
    # Sample standard deviation, n-1 denominator.
    return float(np.std(np.asarray(values, dtype=float), ddof=1))


def variation_study(
    runs: Sequence[Sequence[PredictionRecord]],
    gold: Mapping[str, object],
    rule: ThresholdRule = ThresholdRule(50),
    seed: int = 0,
) -> VariationReport:
    """Summarize score dispersion over repeated runs of one setting.

    Per-example SD (n-1) and peak-to-peak use numeric (Score) replies
    only; examples with fewer than two numeric replies contribute
    nothing to the dispersion aggregates. ``n_nonnumeric`` counts
    examples with at least one non-numeric reply across runs. Accuracy
    per run follows the reporting rule for refusals: every non-numeric
    reply is replaced by a seeded uniform random score (one derived
    seed per run) before thresholding against binary gold.
    """
    if len(runs) < 2:
        raise DataError("variation study needs at least 2 repetitions")
    id_sequence = [r.statement_id for r in runs[0]]
    for index, run in enumerate(runs[1:], start=1):
        if [r.statement_id for r in run] != id_sequence:
            raise DataError(f"run {index} statement ids are not aligned "
                            "with run 0")
    missing = [sid for sid in id_sequence if sid not in gold]
    if missing:
        raise DataError("statement ids missing from gold: "
                        + ", ".join(sorted(missing)[:10]))

    accuracies = []
    for run_idx, run in enumerate(runs):
        as_refusals = [
            record if record.verdict.kind is VerdictKind.SCORE
            else replace(record, verdict=Verdict.refusal(record.raw_text))
            for record in run
        ]
        filled = fill_refusals(as_refusals, seed=seed + run_idx)
        correct = sum(
            1 for record in filled
            if apply_threshold(record.verdict.value, rule) == int(gold[record.statement_id])
        )
        accuracies.append(correct / len(filled))

    n_nonnumeric = 0
    example_sds: list[float] = []
    ptps: list[int] = []
    for position in range(len(id_sequence)):
        scores = [run[position].verdict.value for run in runs
                  if run[position].verdict.kind is VerdictKind.SCORE]
        if len(scores) < len(runs):
            n_nonnumeric += 1
        if len(scores) >= 2:
            example_sds.append(_sample_sd(scores))
            ptps.append(int(max(scores) - min(scores)))

    return VariationReport(
        mean_accuracy=float(np.mean(accuracies)),
        accuracy_sd=_sample_sd(accuracies),
        n_nonnumeric=n_nonnumeric,
        mean_example_sd=float(np.mean(example_sds)) if example_sds else 0.0,
        max_example_sd=float(np.max(example_sds)) if example_sds else 0.0,
        max_ptp=max(ptps) if ptps else 0,
        n_large_ptp=sum(1 for p in ptps if p > 50),
    )


def _cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DataError("cosine distance undefined for zero-norm vectors")
    return 1.0 - float(np.dot(a, b)) / (norm_a * norm_b)


def nearest_train_distance(
    test: EmbeddingVector,
    train: Sequence[tuple[object, EmbeddingVector]],
) -> tuple[float, object]:
    """Cosine distance to the closest train item; ties pick the smallest id."""
    if not train:
        raise DataError("empty train set")
    test_arr = test.as_array()
    best_distance = math.inf
    best_id: object = None
    for train_id, vector in train:
        distance = _cosine_distance(test_arr, vector.as_array())
        if distance < best_distance or (distance == best_distance
                                        and train_id < best_id):
            best_distance = distance
            best_id = train_id
    return best_distance, best_id


class TestMethod(str, Enum):
    WELCH = "welch"
    PERMUTATION = "permutation"


def _permutation_p(a: np.ndarray, b: np.ndarray, permutations: int,
                   seed: int) -> float:
    observed = abs(a.mean() - b.mean())
    combined = np.concatenate([a, b])
    n_a = len(a)
    rng = np.random.default_rng(seed)
    exceed = 0
    chunk = 5000
    remaining = permutations
    while remaining > 0:
        rows = min(chunk, remaining)
        remaining -= rows
        tiled = np.tile(combined, (rows, 1))
        shuffled = rng.permuted(tiled, axis=1)
        diffs = shuffled[:, :n_a].mean(axis=1) - shuffled[:, n_a:].mean(axis=1)
        exceed += int(np.count_nonzero(np.abs(diffs) >= observed))
    return (1 + exceed) / (permutations + 1)


def group_distance_test(
    group_a: Sequence[float],
    group_b: Sequence[float],
    method: TestMethod,
    permutations: int = 100_000,
    seed: int = 0,
) -> tuple[float, float, float]:
    """Two-sided test of mean difference between two distance samples.

    Welch's t-test assumes nothing about equal variances; on degenerate
    (zero-variance) input it falls back to the permutation test with a
    warning. The permutation test shuffles group membership at least
    100,000 times with a seeded generator.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise DataError("each group needs at least 2 observations")
    mean_a = float(a.mean())
    mean_b = float(b.mean())
    if method is TestMethod.WELCH:
        if a.var(ddof=1) == 0.0 and b.var(ddof=1) == 0.0:
            warnings.warn("zero variance in both groups; Welch's t is "
                          "undefined, falling back to the permutation test")
            return mean_a, mean_b, _permutation_p(a, b, permutations, seed)
        result = stats.ttest_ind(a, b, equal_var=False)
        return mean_a, mean_b, float(result.pvalue)
    if permutations < 100_000:
        raise DataError("permutation test needs at least 100,000 permutations")
    return mean_a, mean_b, _permutation_p(a, b, permutations, seed)


@dataclass(frozen=True)
class ErrorPartition:
    """Ids partitioned by which of two systems classified them correctly."""

    a_right_b_wrong: frozenset
    b_right_a_wrong: frozenset
    both_right: frozenset
    both_wrong: frozenset


def error_partition(
    preds_a: Mapping[str, object],
    preds_b: Mapping[str, object],
    gold: Mapping[str, object],
) -> ErrorPartition:
    """Partition shared ids by per-system correctness against gold."""
    if set(preds_a) != set(preds_b):
        only_a = sorted(set(preds_a) - set(preds_b))[:5]
        only_b = sorted(set(preds_b) - set(preds_a))[:5]
        raise DataError(f"prediction id sets differ (a-only {only_a}, "
                        f"b-only {only_b})")
    missing = sorted(set(preds_a) - set(gold))
    if missing:
        raise DataError("ids missing from gold: " + ", ".join(map(str, missing[:10])))
    cells: dict[str, set] = {"a": set(), "b": set(), "both": set(), "neither": set()}
    for statement_id in preds_a:
        a_right = preds_a[statement_id] == gold[statement_id]
        b_right = preds_b[statement_id] == gold[statement_id]
        if a_right and not b_right:
            cells["a"].add(statement_id)
        elif b_right and not a_right:
            cells["b"].add(statement_id)
        elif a_right:
            cells["both"].add(statement_id)
        else:
            cells["neither"].add(statement_id)
    return ErrorPartition(
        a_right_b_wrong=frozenset(cells["a"]),
        b_right_a_wrong=frozenset(cells["b"]),
        both_right=frozenset(cells["both"]),
        both_wrong=frozenset(cells["neither"]),
    )


def export_error_analysis(
    partition: ErrorPartition,
    distances: Mapping[str, tuple[float, object]],
    path: str | Path,
) -> None:
    """CSV of (id, distance_to_nearest_train, nearest_train_id, partition_cell)."""
    cell_of: dict[str, str] = {}
    for name, ids in (("a_right_b_wrong", partition.a_right_b_wrong),
                      ("b_right_a_wrong", partition.b_right_a_wrong),
                      ("both_right", partition.both_right),
                      ("both_wrong", partition.both_wrong)):
        for statement_id in ids:
            cell_of[statement_id] = name
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "distance_to_nearest_train",
                         "nearest_train_id", "partition_cell"])
        for statement_id in sorted(cell_of):
            distance, train_id = distances.get(statement_id, ("", ""))
            distance_text = f"{distance:.6f}" if distance != "" else ""
            writer.writerow([statement_id, distance_text, train_id,
                             cell_of[statement_id]])
