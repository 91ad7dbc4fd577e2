"""Prompt catalog: every prompt variant rendered byte-exactly from text assets.

Templates live under ``verifact/templates`` as versioned text files so an
experiment manifest can pin their hashes. Placeholders (STATEMENT, ARTICLE,
CLOSEST_TRAIN_TEXT, CLOSEST_TRAIN_LABEL) are substituted in a single pass;
no other byte of the template is altered. The prompt language is always
English, whatever language the statement is in.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

import numpy as np

from .corpus import SixWayLabel, Statement
from .errors import ConfigError

__all__ = [
    "PromptKind",
    "RenderedPrompt",
    "render",
    "select_icl_variant",
    "demo_label_to_score",
    "template_text",
    "template_sha256",
    "catalog_hashes",
    "prompt_sha256",
]


class PromptKind(str, Enum):
    """Closed set of prompt variants; each renderable kind has one template."""

    SCORE = "score"
    BINARY = "binary"
    BINARY_UNCERTAINTY_ENABLED = "binary_uncertainty_enabled"
    SCORE_THEN_EXPLAIN = "score_then_explain"
    EXPLAIN_THEN_SCORE = "explain_then_score"
    WEB_EVIDENCE = "web_evidence"
    ICL_V1 = "icl_v1"
    ICL_V2 = "icl_v2"
    ICL_V3 = "icl_v3"


@dataclass(frozen=True)
class RenderedPrompt:
    """A fully substituted prompt, ready to send to a model."""

    kind: PromptKind
    text: str
    statement_id: str
    evidence_id: str | None = None
    demo_id: str | None = None


_PLACEHOLDER_RE = re.compile(
    r"CLOSEST_TRAIN_TEXT|CLOSEST_TRAIN_LABEL|STATEMENT|ARTICLE")

_NEEDS_EVIDENCE = {PromptKind.WEB_EVIDENCE}
_NEEDS_DEMO = {PromptKind.ICL_V1, PromptKind.ICL_V2}

_template_cache: dict[PromptKind, str] = {}


def template_text(kind: PromptKind) -> str:
    """Return the raw template for a renderable kind, bytes untouched."""
    if kind is PromptKind.ICL_V3:
        raise ConfigError(
            "icl_v3 is a selection policy, not a template; "
            "resolve it with select_icl_variant first")
    if kind not in _template_cache:
        asset = resources.files("verifact.templates").joinpath(f"{kind.value}.txt")
        _template_cache[kind] = asset.read_bytes().decode("utf-8")
    return _template_cache[kind]


def template_sha256(kind: PromptKind) -> str:
    return hashlib.sha256(template_text(kind).encode("utf-8")).hexdigest()


def catalog_hashes() -> dict[str, str]:
    """Template hash per renderable kind, for pinning in manifests."""
    return {kind.value: template_sha256(kind)
            for kind in PromptKind if kind is not PromptKind.ICL_V3}


def prompt_sha256(prompt: "str | RenderedPrompt") -> str:
    """Content hash of a rendered prompt; keys caches and fixtures."""
    text = prompt.text if isinstance(prompt, RenderedPrompt) else prompt
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def render(
    kind: PromptKind,
    statement: Statement,
    evidence: str | None = None,
    demo: tuple[str, int] | None = None,
    *,
    evidence_id: str | None = None,
    demo_id: str | None = None,
) -> RenderedPrompt:
    """Substitute placeholders into the template for ``kind``.

    ``evidence`` is the article text for the web-evidence prompt; ``demo``
    is a (text, score 0-100) pair for the demonstration prompts. Statements
    are inserted unescaped, surrounding straight double quotes coming from
    the template itself.
    """
    template = template_text(kind)
    if kind in _NEEDS_EVIDENCE and evidence is None:
        raise ConfigError(f"{kind.value} requires evidence text")
    if kind in _NEEDS_DEMO and demo is None:
        raise ConfigError(f"{kind.value} requires a (text, score) demo")
    if evidence is not None and kind not in _NEEDS_EVIDENCE:
        raise ConfigError(f"{kind.value} does not take evidence")
    if demo is not None and kind not in _NEEDS_DEMO:
        raise ConfigError(f"{kind.value} does not take a demo")

    substitutions = {"STATEMENT": statement.text}
    if evidence is not None:
        substitutions["ARTICLE"] = evidence
    if demo is not None:
        demo_text, demo_score = demo
        if not 0 <= int(demo_score) <= 100:
            raise ConfigError(f"demo score out of range: {demo_score}")
        substitutions["CLOSEST_TRAIN_TEXT"] = demo_text
        substitutions["CLOSEST_TRAIN_LABEL"] = str(int(demo_score))

    text = _PLACEHOLDER_RE.sub(lambda m: substitutions[m.group(0)], template)
    return RenderedPrompt(
        kind=kind,
        text=text,
        statement_id=statement.id,
        evidence_id=evidence_id,
        demo_id=demo_id,
    )


def select_icl_variant(test_distance: float, distances: list[float]) -> PromptKind:
    """Demonstration-or-not policy over nearest-train distances.

    ``distances`` holds every test item's nearest-train distance. Items
    whose distance falls at or below the 10th percentile (the top decile
    by similarity) get the demonstration prompt; the rest fall back to
    the plain score prompt. The boundary is inclusive.
    """
    if len(distances) == 0:
        raise ConfigError("cannot select a variant from empty distances")
    cut = float(np.percentile(np.asarray(distances, dtype=float), 10))
    if test_distance <= cut:
        return PromptKind.ICL_V2
    return PromptKind.SCORE


def demo_label_to_score(label: SixWayLabel) -> int:
    """Uniform mapping of the six-point scale onto 0-100."""
    return int(label) * 20
