"""Evidence-augmented prompts and the answerless truncation oracle.

Fact-check articles end by announcing their verdict, so feeding them to
a model verbatim leaks the answer. strip_verdict removes the verdict:
it splits the article into sentences, finds the last sentence containing
a verdict keyword ("true", "false", "pants"), and drops that sentence
and everything after it.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import Statement
from .errors import DataError, ParseError, SchemaError
from .prompts import PromptKind, RenderedPrompt, render

__all__ = [
    "Article",
    "TruncationAudit",
    "load_articles",
    "write_articles",
    "strip_verdict",
    "audit_truncation",
    "build_evidence_prompt",
    "split_sentences",
]


@dataclass(frozen=True)
class Article:
    """Full text of a fact-check article, joined to a statement by id."""

    statement_id: str
    text: str
    source_url: str | None = None


@dataclass(frozen=True)
class TruncationAudit:
    """What strip_verdict removed from one article.

    ``divergent`` marks articles where word-bounded and substring
    keyword matching disagree about the truncation point.
    """

    statement_id: str
    n_sentences: int
    n_removed: int
    divergent: bool


# A sentence ends at '.', '?' or '!' followed by whitespace or end of
# text; the whitespace belongs to the next sentence, so joining the
# pieces reproduces the input byte for byte.
_BOUNDARY_RE = re.compile(r"(?<=[.?!])(?=\s|$)")
_WORD_KEYWORD_RE = re.compile(r"\b(?:true|false|pants)\b", re.IGNORECASE)
_SUBSTRING_KEYWORD_RE = re.compile(r"(?:true|false|pants)", re.IGNORECASE)


def split_sentences(text: str) -> list[str]:
    """Split so that ``''.join(result) == text``."""
    return [piece for piece in _BOUNDARY_RE.split(text) if piece != ""]


def _truncation_point(sentences: list[str], substring: bool) -> int | None:
    """Index of the last keyword sentence, or None when there is none."""
    pattern = _SUBSTRING_KEYWORD_RE if substring else _WORD_KEYWORD_RE
    for index in range(len(sentences) - 1, -1, -1):
        if pattern.search(sentences[index]):
            return index
    return None


def strip_verdict(article: Article, substring: bool = False) -> Article:
    """Remove the last verdict-keyword sentence and everything after it.

    ``substring`` switches the keyword match from word-bounded to plain
    substring (so "pantsuit" would match "pants"); the default is the
    stricter word-bounded rule. Articles without any keyword sentence
    pass through unchanged. The result can be empty when the verdict
    appears in the very first sentence.
    """
    sentences = split_sentences(article.text)
    cut = _truncation_point(sentences, substring)
    if cut is None:
        return article
    return Article(statement_id=article.statement_id,
                   text="".join(sentences[:cut]),
                   source_url=article.source_url)


def audit_truncation(article: Article, substring: bool = False) -> TruncationAudit:
    """Per-article record of how many sentences truncation removed."""
    sentences = split_sentences(article.text)
    cut = _truncation_point(sentences, substring)
    n_removed = 0 if cut is None else len(sentences) - cut
    return TruncationAudit(
        statement_id=article.statement_id,
        n_sentences=len(sentences),
        n_removed=n_removed,
        divergent=(_truncation_point(sentences, False)
                   != _truncation_point(sentences, True)),
    )


def build_evidence_prompt(statement: Statement, article: Article,
                          answerless: bool) -> RenderedPrompt:
    """Render the evidence prompt, truncating the article when answerless."""
    if article.statement_id != statement.id:
        raise DataError(f"article {article.statement_id!r} does not join "
                        f"statement {statement.id!r}")
    if answerless:
        article = strip_verdict(article)
        if not article.text.strip():
            warnings.warn(f"article for {statement.id} is empty after "
                          "truncation; rendering an empty evidence block")
    return render(PromptKind.WEB_EVIDENCE, statement, evidence=article.text,
                  evidence_id=article.statement_id)


def load_articles(path: str | Path) -> dict[str, Article]:
    """Read article JSONL {statement_id, text, url?} keyed by statement id."""
    path = Path(path)
    articles: dict[str, Article] = {}
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{line_no}: invalid JSON: {exc}") from None
            for field in ("statement_id", "text"):
                if field not in payload:
                    raise SchemaError(f"{path}:{line_no}: missing {field!r}")
            statement_id = str(payload["statement_id"])
            if statement_id in articles:
                raise SchemaError(f"{path}:{line_no}: duplicate article for "
                                  f"{statement_id!r}")
            if not str(payload["text"]).strip():
                raise SchemaError(f"{path}:{line_no}: empty article text")
            articles[statement_id] = Article(
                statement_id=statement_id,
                text=str(payload["text"]),
                source_url=payload.get("url"),
            )
    return articles


def write_articles(articles: Iterable[Article], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for article in articles:
            payload: dict[str, object] = {
                "statement_id": article.statement_id,
                "text": article.text,
            }
            if article.source_url is not None:
                payload["url"] = article.source_url
            handle.write(json.dumps(payload, ensure_ascii=False,
                                    separators=(",", ":")) + "\n")
