"""Platt scaling and calibration diagnostics.

The fit is a plain maximum-likelihood logistic regression of binary
labels on raw scores, solved by damped Newton iterations whose
log-likelihood never decreases. Separated data drives the slope to the
configured cap instead of infinity; single-class data short-circuits to
a constant-prior model. Quantile-binned ECE and reliability tables use
stable ranks so heavily tied probabilities bin deterministically.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

from .corpus import BinaryLabel
from .errors import DataError

__all__ = [
    "CalibrationModel",
    "PlattScaler",
    "ReliabilityBin",
    "ReliabilityTable",
    "platt_fit",
    "apply_calibration",
    "ece",
    "reliability_table",
    "write_reliability_csv",
]

_PROB_EPS = 1e-15
_PRIOR_EPS = 1e-9


@dataclass(frozen=True)
class CalibrationModel:
    """p(s) = logistic(slope * s + intercept)."""

    slope: float
    intercept: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise DataError("calibration parameters must be finite")

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept}

    @staticmethod
    def from_dict(payload: dict) -> "CalibrationModel":
        return CalibrationModel(slope=float(payload["slope"]),
                                intercept=float(payload["intercept"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n",
                              encoding="utf-8")

    @staticmethod
    def load(path: str | Path) -> "CalibrationModel":
        return CalibrationModel.from_dict(
            json.loads(Path(path).read_text(encoding="utf-8")))


class PlattScaler:
    """Maximum-likelihood logistic fit of labels on scores.

    sklearn-style surface (fit / predict_proba / get_params) so the
    scaler drops into that ecosystem, without depending on it.

    Parameters: ``max_iter`` and ``tol`` bound the damped Newton loop
    (converged when the largest applied parameter step is below tol);
    ``slope_cap`` bounds |slope| under separation; ``smoothing`` switches
    the regression targets to Platt's (n+1)/(n+2) smoothed values.
    """

    def __init__(self, max_iter: int = 100, tol: float = 1e-8,
                 slope_cap: float = 1e3, smoothing: bool = False):
        self.max_iter = max_iter
        self.tol = tol
        self.slope_cap = slope_cap
        self.smoothing = smoothing

    def get_params(self, deep: bool = True) -> dict:
        return {"max_iter": self.max_iter, "tol": self.tol,
                "slope_cap": self.slope_cap, "smoothing": self.smoothing}

    def set_params(self, **params) -> "PlattScaler":
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def _loglik(self, scores: np.ndarray, targets: np.ndarray,
                slope: float, intercept: float) -> float:
        probs = np.clip(expit(slope * scores + intercept), _PROB_EPS, 1 - _PROB_EPS)
        return float(np.sum(targets * np.log(probs)
                            + (1 - targets) * np.log(1 - probs)))

    def fit(self, scores: Sequence[float], labels: Sequence[BinaryLabel]) -> "PlattScaler":
        score_arr = np.asarray(scores, dtype=float)
        label_arr = np.asarray([int(label) for label in labels], dtype=float)
        if score_arr.ndim != 1 or len(score_arr) != len(label_arr):
            raise DataError("scores and labels must be 1-d and equal length")
        if len(score_arr) < 2:
            raise DataError("need at least 2 observations to fit")
        if not (np.all(np.isfinite(score_arr)) and np.all(np.isfinite(label_arr))):
            raise DataError("non-finite inputs")

        prior = float(label_arr.mean())
        if prior in (0.0, 1.0):
            # Single class: the MLE diverges; fall back to the clamped prior.
            clamped = min(max(prior, _PRIOR_EPS), 1 - _PRIOR_EPS)
            self.slope_ = 0.0
            self.intercept_ = float(np.log(clamped / (1 - clamped)))
            self.n_iter_ = 0
            self.converged_ = True
            self.loglik_path_ = [self._loglik(score_arr, label_arr,
                                              self.slope_, self.intercept_)]
            return self

        if self.smoothing:
            n_pos = float(label_arr.sum())
            n_neg = float(len(label_arr)) - n_pos
            hi = (n_pos + 1.0) / (n_pos + 2.0)
            lo = 1.0 / (n_neg + 2.0)
            targets = np.where(label_arr == 1.0, hi, lo)
        else:
            targets = label_arr

        slope = 0.0
        intercept = float(np.log(prior / (1 - prior)))
        loglik = self._loglik(score_arr, targets, slope, intercept)
        path = [loglik]
        design = np.column_stack([score_arr, np.ones_like(score_arr)])

        converged = False
        iteration = 0
        for iteration in range(1, self.max_iter + 1):
            probs = expit(slope * score_arr + intercept)
            gradient = design.T @ (targets - probs)
            weights = np.clip(probs * (1 - probs), 1e-12, None)
            hessian = design.T @ (design * weights[:, None])
            try:
                direction = np.linalg.solve(hessian, gradient)
            except np.linalg.LinAlgError:
                direction, *_ = np.linalg.lstsq(hessian, gradient, rcond=None)

            # Backtrack until the (cap-projected) step does not lower LL.
            alpha = 1.0
            new_slope, new_intercept, new_loglik = slope, intercept, loglik
            while alpha > 1e-12:
                cand_slope = float(np.clip(slope + alpha * direction[0],
                                           -self.slope_cap, self.slope_cap))
                cand_intercept = float(intercept + alpha * direction[1])
                cand_loglik = self._loglik(score_arr, targets,
                                           cand_slope, cand_intercept)
                if cand_loglik >= loglik - 1e-12:
                    new_slope, new_intercept, new_loglik = (
                        cand_slope, cand_intercept, cand_loglik)
                    break
                alpha /= 2.0
            step = max(abs(new_slope - slope), abs(new_intercept - intercept))
            slope, intercept, loglik = new_slope, new_intercept, new_loglik
            path.append(loglik)
            if step < self.tol:
                converged = True
                break

        self.slope_ = slope
        self.intercept_ = intercept
        self.n_iter_ = iteration
        self.converged_ = converged
        self.loglik_path_ = path
        return self

    def model(self) -> CalibrationModel:
        return CalibrationModel(slope=self.slope_, intercept=self.intercept_)

    def predict_proba(self, scores: Sequence[float]) -> np.ndarray:
        """(n, 2) array of [P(False), P(True)], sklearn column order."""
        p_true = np.array([apply_calibration(self.model(), s) for s in scores])
        return np.column_stack([1 - p_true, p_true])

    def transform(self, scores: Sequence[float]) -> np.ndarray:
        return self.predict_proba(scores)[:, 1]


def platt_fit(scores: Sequence[float], labels: Sequence[BinaryLabel],
              smoothing: bool = False) -> CalibrationModel:
    """Fit and return just the (slope, intercept) model."""
    return PlattScaler(smoothing=smoothing).fit(scores, labels).model()


def apply_calibration(model: CalibrationModel, score: float) -> float:
    """logistic(slope*score + intercept), held inside the open (0,1)."""
    if not math.isfinite(score):
        raise DataError(f"non-finite score: {score}")
    return float(np.clip(expit(model.slope * score + model.intercept),
                         _PROB_EPS, 1 - _PROB_EPS))


@dataclass(frozen=True)
class ReliabilityBin:
    lower: float
    upper: float
    count: int
    mean_confidence: float
    empirical_accuracy: float


@dataclass(frozen=True)
class ReliabilityTable:
    """Per-bin calibration data; ece is its count-weighted aggregation."""

    bins: tuple[ReliabilityBin, ...]
    ties_cross_edges: bool

    def ece(self) -> float:
        total = sum(b.count for b in self.bins)
        return sum(b.count / total
                   * abs(b.mean_confidence - b.empirical_accuracy)
                   for b in self.bins)


def _validate_probs(probabilities: Sequence[float],
                    labels: Sequence[BinaryLabel]) -> tuple[np.ndarray, np.ndarray]:
    probs = np.asarray(probabilities, dtype=float)
    label_arr = np.asarray([int(label) for label in labels], dtype=float)
    if len(probs) != len(label_arr):
        raise DataError(f"length mismatch: {len(probs)} probabilities "
                        f"vs {len(label_arr)} labels")
    if len(probs) == 0:
        raise DataError("cannot compute calibration on empty inputs")
    if not np.all(np.isfinite(probs)) or probs.min() < 0 or probs.max() > 1:
        raise DataError("probabilities must lie in [0,1]")
    return probs, label_arr


def reliability_table(probabilities: Sequence[float],
                      labels: Sequence[BinaryLabel],
                      bins: int = 10) -> ReliabilityTable:
    """Quantile bins of near-equal count over predicted probability.

    Items are ranked by a stable sort (ties keep input order); the
    lowest-rank bins absorb the remainder, so counts differ by at most
    one. Tied probability values can straddle an edge; the table flags
    that so reports can surface it.
    """
    probs, label_arr = _validate_probs(probabilities, labels)
    n = len(probs)
    order = np.argsort(probs, kind="stable")
    base, remainder = divmod(n, bins)
    rows: list[ReliabilityBin] = []
    start = 0
    for b in range(bins):
        size = base + (1 if b < remainder else 0)
        if size == 0:
            continue
        members = order[start:start + size]
        start += size
        member_probs = probs[members]
        rows.append(ReliabilityBin(
            lower=float(member_probs.min()),
            upper=float(member_probs.max()),
            count=size,
            mean_confidence=float(member_probs.mean()),
            empirical_accuracy=float(label_arr[members].mean()),
        ))
    ties = any(rows[i].upper == rows[i + 1].lower for i in range(len(rows) - 1))
    return ReliabilityTable(bins=tuple(rows), ties_cross_edges=ties)


def ece(probabilities: Sequence[float], labels: Sequence[BinaryLabel],
        bins: int = 10) -> float:
    """Expected calibration error over quantile bins."""
    return reliability_table(probabilities, labels, bins=bins).ece()


def write_reliability_csv(table: ReliabilityTable, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bin_lower", "bin_upper", "count", "mean_conf", "accuracy"])
        for row in table.bins:
            writer.writerow([f"{row.lower:.6f}", f"{row.upper:.6f}", row.count,
                             f"{row.mean_confidence:.6f}",
                             f"{row.empirical_accuracy:.6f}"])
