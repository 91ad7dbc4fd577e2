"""Turn raw model text into typed verdicts.

The parsers are deliberately conservative: a reply is a Score or Binary
verdict only when it is a lone numeric token (modulo whitespace, one
terminal period, and an optional "Score:" prefix). Replies with two or
more distinct integers are ambiguous and classified as refusals rather
than guessed at. The literal token "0.5" is an uncertainty signal, not
a score.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ParseError, SchemaError, ScoreRangeError
from .prompts import PromptKind

__all__ = [
    "VerdictKind",
    "Verdict",
    "SplitOrder",
    "PredictionRecord",
    "parse_score",
    "parse_binary",
    "split_explained",
    "fill_refusals",
    "write_records",
    "read_records",
]


class VerdictKind(str, Enum):
    SCORE = "score"
    BINARY = "binary"
    UNCERTAIN = "uncertain"
    REFUSAL = "refusal"


@dataclass(frozen=True)
class Verdict:
    """A parsed model judgment; Refusals keep the raw text as explanation."""

    kind: VerdictKind
    value: int | None = None
    explanation: str | None = None

    def __post_init__(self) -> None:
        if self.kind is VerdictKind.SCORE:
            if self.value is None or not 0 <= self.value <= 100:
                raise SchemaError(f"score verdict out of range: {self.value}")
        elif self.kind is VerdictKind.BINARY:
            if self.value not in (0, 1):
                raise SchemaError(f"binary verdict must be 0 or 1: {self.value}")
        elif self.value is not None:
            raise SchemaError(f"{self.kind.value} verdict carries no value")

    @staticmethod
    def score(value: int, explanation: str | None = None) -> "Verdict":
        return Verdict(VerdictKind.SCORE, value, explanation)

    @staticmethod
    def binary(value: int, explanation: str | None = None) -> "Verdict":
        return Verdict(VerdictKind.BINARY, value, explanation)

    @staticmethod
    def uncertain(explanation: str | None = None) -> "Verdict":
        return Verdict(VerdictKind.UNCERTAIN, None, explanation)

    @staticmethod
    def refusal(raw: str) -> "Verdict":
        return Verdict(VerdictKind.REFUSAL, None, raw)


class SplitOrder(str, Enum):
    SCORE_FIRST = "score_first"
    EXPLAIN_FIRST = "explain_first"


@dataclass(frozen=True)
class PredictionRecord:
    """One model reply for one statement, with everything derived from it.

    ``filled_random`` marks refusals replaced by a seeded random draw.
    ``range_error`` marks numeric-but-out-of-range replies, reported
    separately from refusals. ``probability`` and ``prediction`` are set
    by later pipeline stages (calibration, decision rules).
    """

    statement_id: str
    prompt_kind: PromptKind
    model_id: str
    run_index: int
    raw_text: str
    verdict: Verdict
    filled_random: bool = False
    range_error: bool = False
    probability: float | None = None
    prediction: int | None = None


# A lone numeric token: optional sign, digits, at most one terminal period.
_INTEGER_RE = re.compile(r"^[+-]?\d+\.?$")
_HALF_RE = re.compile(r"^0\.5\.?$")
_PREFIX_RE = re.compile(r"^score\s*:\s*", re.IGNORECASE)


def _normalize(raw: str) -> str:
    token = raw.strip()
    token = _PREFIX_RE.sub("", token)
    return token.strip()


def parse_score(raw: str) -> Verdict:
    """Parse a reply to a 0-100 score prompt.

    Raises ScoreRangeError when the reply is a lone integer outside
    0-100: numeric-but-invalid is a different failure than a refusal.
    """
    token = _normalize(raw)
    if _HALF_RE.match(token):
        return Verdict.uncertain()
    if _INTEGER_RE.match(token):
        value = int(token.rstrip("."))
        if not 0 <= value <= 100:
            raise ScoreRangeError(f"score outside 0-100: {value}")
        return Verdict.score(value)
    return Verdict.refusal(raw)


def parse_binary(raw: str, uncertainty_enabled: bool = False) -> Verdict:
    """Parse a reply to a 0-or-1 prompt.

    With ``uncertainty_enabled`` the literal "0.5" becomes an Uncertain
    verdict (the prompt invites it); otherwise it is a refusal like any
    other off-script reply.
    """
    token = _normalize(raw)
    if _HALF_RE.match(token):
        if uncertainty_enabled:
            return Verdict.uncertain()
        return Verdict.refusal(raw)
    if _INTEGER_RE.match(token):
        value = int(token.rstrip("."))
        if value in (0, 1):
            return Verdict.binary(value)
    return Verdict.refusal(raw)


def split_explained(raw: str, order: SplitOrder) -> Verdict:
    """Split a score+explanation reply on its vertical bar.

    Score-first replies split on the first bar, explain-first replies on
    the last, so bars inside the free-text side never confuse the split.
    Without any bar the whole text is tried as a bare score.
    """
    if "|" in raw:
        if order is SplitOrder.SCORE_FIRST:
            numeric, text = raw.split("|", 1)
        else:
            text, _, numeric = raw.rpartition("|")
        verdict = parse_score(numeric)
        if verdict.kind is VerdictKind.REFUSAL:
            return Verdict.refusal(raw)
        return replace(verdict, explanation=text.strip())
    verdict = parse_score(raw)
    if verdict.kind is VerdictKind.REFUSAL:
        return Verdict.refusal(raw)
    return verdict


_BINARY_KINDS = {PromptKind.BINARY, PromptKind.BINARY_UNCERTAINTY_ENABLED}


def fill_refusals(records: Sequence[PredictionRecord], seed: int) -> list[PredictionRecord]:
    """Replace refusal verdicts with seeded uniform random predictions.

    Score-family prompts draw an integer from 0-100 inclusive, binary
    prompts a class from {0,1}. Non-refusal records pass through
    untouched; replacements are flagged ``filled_random`` so analyses
    can exclude them.
    """
    rng = random.Random(seed)
    filled: list[PredictionRecord] = []
    for record in records:
        if record.verdict.kind is not VerdictKind.REFUSAL:
            filled.append(record)
            continue
        if record.prompt_kind in _BINARY_KINDS:
            verdict = Verdict.binary(rng.randint(0, 1))
        else:
            verdict = Verdict.score(rng.randint(0, 100))
        filled.append(replace(record, verdict=verdict, filled_random=True))
    return filled


def _record_to_dict(record: PredictionRecord) -> dict:
    verdict: dict[str, object] = {"kind": record.verdict.kind.value}
    if record.verdict.value is not None:
        verdict["value"] = record.verdict.value
    payload: dict[str, object] = {
        "statement_id": record.statement_id,
        "prompt_kind": record.prompt_kind.value,
        "model_id": record.model_id,
        "run_index": record.run_index,
        "raw_text": record.raw_text,
        "verdict": verdict,
        "filled_random": record.filled_random,
    }
    if record.verdict.explanation is not None:
        payload["explanation"] = record.verdict.explanation
    if record.range_error:
        payload["range_error"] = True
    if record.probability is not None:
        payload["probability"] = record.probability
    if record.prediction is not None:
        payload["prediction"] = record.prediction
    return payload


def _record_from_dict(payload: dict) -> PredictionRecord:
    verdict_payload = payload["verdict"]
    verdict = Verdict(
        kind=VerdictKind(verdict_payload["kind"]),
        value=verdict_payload.get("value"),
        explanation=payload.get("explanation"),
    )
    return PredictionRecord(
        statement_id=payload["statement_id"],
        prompt_kind=PromptKind(payload["prompt_kind"]),
        model_id=payload["model_id"],
        run_index=int(payload["run_index"]),
        raw_text=payload["raw_text"],
        verdict=verdict,
        filled_random=bool(payload.get("filled_random", False)),
        range_error=bool(payload.get("range_error", False)),
        probability=payload.get("probability"),
        prediction=payload.get("prediction"),
    )


def write_records(records: Iterable[PredictionRecord], path: str | Path) -> None:
    """Write records as JSONL; stable key order keeps output byte-reproducible."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(_record_to_dict(record), ensure_ascii=False,
                                    separators=(",", ":")))
            handle.write("\n")


def read_records(path: str | Path) -> list[PredictionRecord]:
    path = Path(path)
    records: list[PredictionRecord] = []
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{line_no}: invalid JSON: {exc}") from None
            try:
                records.append(_record_from_dict(payload))
            except (KeyError, ValueError) as exc:
                raise SchemaError(f"{path}:{line_no}: bad record: {exc}") from None
    return records
