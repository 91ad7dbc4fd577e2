"""Dataset loading and label algebra for truthfulness corpora.

Two corpus formats are supported: the classic six-label political
fact-checking TSV (one claim per row, 14 columns) and a newer bilingual
JSONL release where every record carries an English and a French
rendering of the claim plus a three-way feasibility annotation
(Possible / Hard / Impossible) produced by three annotators.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum, IntEnum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError, ParseError, SchemaError

__all__ = [
    "SixWayLabel",
    "ThreeWayLabel",
    "BinaryLabel",
    "PossibilityLabel",
    "Language",
    "Split",
    "Statement",
    "AnnotationTriple",
    "EscalationFlag",
    "ESCALATION",
    "load_liar_tsv",
    "load_liar_new",
    "load_annotation_triples",
    "load_resolution_sidecar",
    "binarize",
    "coarsen_6_to_3",
    "resolve_possibility",
    "apply_resolutions",
    "agreement_kappa",
]


class SixWayLabel(IntEnum):
    """Six-point veracity scale, ordered least to most truthful."""

    PANTS_FIRE = 0
    FALSE = 1
    BARELY_OR_MOSTLY_FALSE = 2
    HALF_TRUE = 3
    MOSTLY_TRUE = 4
    TRUE = 5


class ThreeWayLabel(IntEnum):
    """Coarse veracity scale obtained by pairing adjacent six-way labels."""

    FALSE = 0
    PARTIALLY_FALSE = 1
    TRUE = 2


class BinaryLabel(IntEnum):
    FALSE = 0
    TRUE = 1


class PossibilityLabel(str, Enum):
    """Whether a claim is feasible to verify from its text alone."""

    POSSIBLE = "possible"
    HARD = "hard"
    IMPOSSIBLE = "impossible"


class Language(str, Enum):
    EN = "en"
    FR = "fr"


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True)
class Statement:
    """One claim to be rated, with whatever gold annotations exist."""

    id: str
    text: str
    language: Language = Language.EN
    label: SixWayLabel | None = None
    possibility: PossibilityLabel | None = None
    split: Split = Split.TEST


@dataclass(frozen=True)
class AnnotationTriple:
    """Raw feasibility votes from the three annotators for one claim."""

    statement_id: str
    votes: tuple[PossibilityLabel, PossibilityLabel, PossibilityLabel]


class EscalationFlag:
    """Sentinel returned when a vote triple needs manual resolution."""

    def __repr__(self) -> str:  # pragma: no cover
        return "ESCALATION"


ESCALATION = EscalationFlag()

# TSV column layout: 0=id, 1=label, 2=statement; columns 3+ are speaker
# metadata and are ignored.
_LIAR_MIN_COLUMNS = 3

_SIX_WAY_ALIASES: Mapping[str, SixWayLabel] = {
    "pants fire": SixWayLabel.PANTS_FIRE,
    "pants on fire": SixWayLabel.PANTS_FIRE,
    "pantsfire": SixWayLabel.PANTS_FIRE,
    "false": SixWayLabel.FALSE,
    "barely true": SixWayLabel.BARELY_OR_MOSTLY_FALSE,
    "mostly false": SixWayLabel.BARELY_OR_MOSTLY_FALSE,
    "half true": SixWayLabel.HALF_TRUE,
    "mostly true": SixWayLabel.MOSTLY_TRUE,
    "true": SixWayLabel.TRUE,
}

_POSSIBILITY_ALIASES: Mapping[str, PossibilityLabel] = {
    "possible": PossibilityLabel.POSSIBLE,
    "p": PossibilityLabel.POSSIBLE,
    "hard": PossibilityLabel.HARD,
    "h": PossibilityLabel.HARD,
    "impossible": PossibilityLabel.IMPOSSIBLE,
    "i": PossibilityLabel.IMPOSSIBLE,
}


def _normalize_label_text(raw: str) -> str:
    return " ".join(raw.strip().lower().replace("-", " ").replace("_", " ").split())


def parse_six_way_label(raw: str) -> SixWayLabel:
    """Map a label string (any casing, hyphens or spaces) to its class."""
    key = _normalize_label_text(raw)
    try:
        return _SIX_WAY_ALIASES[key]
    except KeyError:
        raise SchemaError(f"unknown veracity label: {raw!r}") from None


def parse_possibility_label(raw: str) -> PossibilityLabel:
    key = _normalize_label_text(raw)
    try:
        return _POSSIBILITY_ALIASES[key]
    except KeyError:
        raise SchemaError(f"unknown possibility label: {raw!r}") from None


def load_liar_tsv(path: str | Path, split: Split = Split.TEST) -> list[Statement]:
    """Load the 14-column fact-checking TSV.

    Only the id, label, and statement columns are consumed; all speaker
    metadata columns are ignored. Rows are returned in file order.
    """
    path = Path(path)
    statements: list[Statement] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle, delimiter="\t", quoting=csv.QUOTE_NONE)
        for line_no, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < _LIAR_MIN_COLUMNS:
                raise ParseError(f"{path}:{line_no}: expected at least "
                                 f"{_LIAR_MIN_COLUMNS} tab-separated columns, got {len(row)}")
            statement_id, label_raw, text = row[0], row[1], row[2]
            if not text.strip():
                raise ParseError(f"{path}:{line_no}: empty statement text")
            try:
                label = parse_six_way_label(label_raw)
            except SchemaError as exc:
                raise SchemaError(f"{path}:{line_no}: {exc}") from None
            statements.append(Statement(
                id=statement_id,
                text=text,
                language=Language.EN,
                label=label,
                split=split,
            ))
    return statements


def _record_error(path: Path, line_no: int, message: str) -> SchemaError:
    return SchemaError(f"{path}:{line_no}: {message}")


def load_liar_new(path: str | Path) -> list[Statement]:
    """Load the bilingual JSONL corpus; evaluation-only, so split is Test.

    Every record yields two Statements sharing a base id with a language
    suffix. Records dated September 2021 are excluded: the month the
    source feed started, kept out of all experiments. The optional
    ``date`` field (ISO yyyy-mm-dd) carries that information; records
    without it are retained.
    """
    path = Path(path)
    statements: list[Statement] = []
    for line_no, record in _iter_jsonl(path):
        for field in ("id", "text_en", "text_fr", "label", "possibility"):
            if field not in record:
                raise _record_error(path, line_no, f"missing field {field!r}")
        if not str(record["text_fr"]).strip():
            raise _record_error(path, line_no, "missing French text")
        if not str(record["text_en"]).strip():
            raise _record_error(path, line_no, "missing English text")
        date = record.get("date")
        if date is not None and str(date)[:7] == "2021-09":
            continue
        base_id = str(record["id"])
        try:
            label = parse_six_way_label(str(record["label"]))
            possibility = parse_possibility_label(str(record["possibility"]))
        except SchemaError as exc:
            raise _record_error(path, line_no, str(exc)) from None
        for language, text in ((Language.EN, record["text_en"]),
                               (Language.FR, record["text_fr"])):
            statements.append(Statement(
                id=f"{base_id}_{language.value}",
                text=str(text),
                language=language,
                label=label,
                possibility=possibility,
                split=Split.TEST,
            ))
    return statements


def load_annotation_triples(path: str | Path) -> list[AnnotationTriple]:
    """Read raw three-annotator feasibility votes from the JSONL corpus."""
    path = Path(path)
    triples: list[AnnotationTriple] = []
    for line_no, record in _iter_jsonl(path):
        votes_raw = record.get("raw_votes")
        if votes_raw is None:
            continue
        if len(votes_raw) != 3:
            raise _record_error(path, line_no,
                                f"expected 3 votes, got {len(votes_raw)}")
        try:
            votes = tuple(parse_possibility_label(str(v)) for v in votes_raw)
        except SchemaError as exc:
            raise _record_error(path, line_no, str(exc)) from None
        triples.append(AnnotationTriple(statement_id=str(record["id"]), votes=votes))
    return triples


def load_resolution_sidecar(path: str | Path) -> dict[str, PossibilityLabel]:
    """Read the manual-resolution CSV (statement_id, resolved_label)."""
    path = Path(path)
    resolved: dict[str, PossibilityLabel] = {}
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        for line_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if line_no == 1 and row[0].strip().lower() == "statement_id":
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{line_no}: expected 2 columns, got {len(row)}")
            resolved[row[0]] = parse_possibility_label(row[1])
    return resolved


def _iter_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{line_no}: invalid JSON: {exc}") from None
            if not isinstance(record, dict):
                raise ParseError(f"{path}:{line_no}: expected a JSON object")
            yield line_no, record


def binarize(label: SixWayLabel) -> BinaryLabel:
    """Collapse the six-point scale at its middle: bottom three are False."""
    if label <= SixWayLabel.BARELY_OR_MOSTLY_FALSE:
        return BinaryLabel.FALSE
    return BinaryLabel.TRUE


def coarsen_6_to_3(label: SixWayLabel) -> ThreeWayLabel:
    """Pair adjacent six-way labels into False / Partially False / True."""
    return ThreeWayLabel(label // 2)


def resolve_possibility(triple: AnnotationTriple) -> PossibilityLabel | EscalationFlag:
    """Combine three feasibility votes into a final label.

    Unanimous votes stand. A triple containing both extremes (Possible
    and Impossible) is a fundamental conflict and escalates to manual
    resolution regardless of any majority. Otherwise the disagreement is
    between adjacent classes and the majority wins.
    """
    votes = triple.votes
    if PossibilityLabel.POSSIBLE in votes and PossibilityLabel.IMPOSSIBLE in votes:
        return ESCALATION
    counts: dict[PossibilityLabel, int] = {}
    for vote in votes:
        counts[vote] = counts.get(vote, 0) + 1
    return max(counts, key=lambda label: counts[label])


def apply_resolutions(
    triples: Sequence[AnnotationTriple],
    sidecar: Mapping[str, PossibilityLabel] | None = None,
) -> dict[str, PossibilityLabel]:
    """Resolve every triple, consulting the sidecar for escalations."""
    sidecar = sidecar or {}
    final: dict[str, PossibilityLabel] = {}
    unresolved: list[str] = []
    for triple in triples:
        outcome = resolve_possibility(triple)
        if isinstance(outcome, EscalationFlag):
            if triple.statement_id in sidecar:
                final[triple.statement_id] = sidecar[triple.statement_id]
            else:
                unresolved.append(triple.statement_id)
        else:
            final[triple.statement_id] = outcome
    if unresolved:
        raise DataError("escalated triples without sidecar resolution: "
                        + ", ".join(sorted(unresolved)[:10]))
    return final


def agreement_kappa(labels_a: Sequence[object], labels_b: Sequence[object]) -> float:
    """Cohen's kappa between two aligned label sequences."""
    if len(labels_a) != len(labels_b):
        raise DataError(f"label sequences differ in length: "
                        f"{len(labels_a)} vs {len(labels_b)}")
    if not labels_a:
        raise DataError("cannot compute agreement on empty sequences")
    n = len(labels_a)
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    classes = set(labels_a) | set(labels_b)
    expected = 0.0
    for cls in classes:
        freq_a = sum(1 for a in labels_a if a == cls) / n
        freq_b = sum(1 for b in labels_b if b == cls) / n
        expected += freq_a * freq_b
    if expected == 1.0:
        # Both raters constant and identical; agreement is perfect.
        return 1.0
    return (observed - expected) / (1.0 - expected)
