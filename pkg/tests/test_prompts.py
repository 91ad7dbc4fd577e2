import hashlib
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from verifact.corpus import Language, SixWayLabel, Split, Statement
from verifact.errors import ConfigError
from verifact.prompts import (PromptKind, RenderedPrompt, catalog_hashes,
                              demo_label_to_score, prompt_sha256, render,
                              select_icl_variant, template_sha256,
                              template_text)

GOLDEN = Path(__file__).parent / "data" / "golden_prompts"

RENDERABLE = [k for k in PromptKind if k is not PromptKind.ICL_V3]


def _statement(text="The moon is made of basalt.", sid="s1"):
    return Statement(id=sid, text=text, language=Language.EN,
                     label=SixWayLabel.HALF_TRUE, possibility=None,
                     split=Split.TEST)


def _demo(text="Rivers flow upward in spring.", label=SixWayLabel.FALSE):
    return (text, demo_label_to_score(label))


def _render(kind, statement=None):
    statement = statement or _statement()
    if kind is PromptKind.WEB_EVIDENCE:
        return render(kind, statement, evidence="Some article text.",
                      evidence_id="a1")
    if kind in (PromptKind.ICL_V1, PromptKind.ICL_V2):
        return render(kind, statement, demo=_demo(), demo_id="d1")
    return render(kind, statement)


class TestTemplates:
    @pytest.mark.parametrize("kind", RENDERABLE)
    def test_template_bytes_match_golden_copy(self, kind):
        golden = (GOLDEN / f"{kind.value}.txt").read_bytes()
        assert template_text(kind).encode("utf-8") == golden

    def test_icl_v3_has_no_template(self):
        with pytest.raises(ConfigError):
            template_text(PromptKind.ICL_V3)

    def test_catalog_hashes_cover_renderable_kinds(self):
        hashes = catalog_hashes()
        assert set(hashes) == {k.value for k in RENDERABLE}
        for kind in RENDERABLE:
            raw = (GOLDEN / f"{kind.value}.txt").read_bytes()
            assert hashes[kind.value] == hashlib.sha256(raw).hexdigest()
            assert template_sha256(kind) == hashes[kind.value]

    def test_templates_use_straight_quotes_only(self):
        for kind in RENDERABLE:
            text = template_text(kind)
            assert "“" not in text and "”" not in text
            assert "—" not in text


class TestRender:
    @pytest.mark.parametrize("kind", RENDERABLE)
    def test_placeholders_fully_substituted(self, kind):
        rendered = _render(kind)
        for placeholder in ("STATEMENT", "ARTICLE", "CLOSEST_TRAIN_TEXT",
                            "CLOSEST_TRAIN_LABEL"):
            assert placeholder not in rendered.text

    @pytest.mark.parametrize("kind", RENDERABLE)
    def test_statement_appears_exactly_once_quoted(self, kind):
        statement = _statement("An unmistakable MARKER claim.")
        rendered = _render(kind, statement)
        assert rendered.text.count(statement.text) == 1
        assert f'"{statement.text}"' in rendered.text

    def test_single_pass_substitution_protects_adversarial_text(self):
        statement = _statement("STATEMENT says ARTICLE is CLOSEST_TRAIN_TEXT.")
        rendered = render(PromptKind.SCORE, statement)
        assert rendered.text.count("STATEMENT says ARTICLE") == 1

    def test_rendering_is_deterministic(self):
        first = _render(PromptKind.SCORE)
        second = _render(PromptKind.SCORE)
        assert first == second
        assert prompt_sha256(first) == prompt_sha256(second)

    def test_score_prompt_layout(self):
        rendered = render(PromptKind.SCORE, _statement("X marks the spot."))
        assert rendered.text.startswith(
            'Rate the truthfulness of the following statement: '
            '"X marks the spot."\n')
        assert rendered.text.count("\n") == 1

    def test_explain_prompts_are_single_line(self):
        for kind in (PromptKind.SCORE_THEN_EXPLAIN,
                     PromptKind.EXPLAIN_THEN_SCORE):
            assert "\n" not in _render(kind).text

    def test_web_evidence_requires_article(self):
        with pytest.raises(ConfigError):
            render(PromptKind.WEB_EVIDENCE, _statement())

    def test_plain_kinds_reject_article(self):
        with pytest.raises(ConfigError):
            render(PromptKind.SCORE, _statement(), evidence="article")

    def test_icl_requires_demo(self):
        with pytest.raises(ConfigError):
            render(PromptKind.ICL_V1, _statement())

    def test_icl_v3_render_refuses(self):
        with pytest.raises(ConfigError):
            render(PromptKind.ICL_V3, _statement(), demo=_demo())

    def test_icl_demo_score_embedded(self):
        for label, expected in ((SixWayLabel.PANTS_FIRE, "0"),
                                (SixWayLabel.HALF_TRUE, "60"),
                                (SixWayLabel.TRUE, "100")):
            rendered = render(PromptKind.ICL_V1, _statement(),
                              demo=_demo(label=label), demo_id="d1")
            assert expected in rendered.text

    def test_icl_demo_score_out_of_range(self):
        with pytest.raises(ConfigError):
            render(PromptKind.ICL_V1, _statement(), demo=("text", 120))

    def test_rendered_prompt_carries_ids(self):
        rendered = render(PromptKind.WEB_EVIDENCE, _statement(sid="stmt-9"),
                          evidence="Article body.", evidence_id="art-4")
        assert rendered.statement_id == "stmt-9"
        assert rendered.evidence_id == "art-4"
        assert isinstance(rendered, RenderedPrompt)

    def test_prompt_sha256_accepts_text_or_prompt(self):
        rendered = _render(PromptKind.SCORE)
        assert prompt_sha256(rendered) == prompt_sha256(rendered.text)


class TestDemoScore:
    def test_mapping_is_twenty_per_step(self):
        for label in SixWayLabel:
            assert demo_label_to_score(label) == int(label) * 20


class TestIclSelection:
    def test_percentile_boundary_is_inclusive(self):
        distances = [float(d) for d in range(1, 101)]
        cutoff = float(np.percentile(distances, 10))
        assert select_icl_variant(cutoff, distances) is PromptKind.ICL_V2
        assert select_icl_variant(cutoff + 1e-9,
                                  distances) is PromptKind.SCORE

    def test_empty_distance_pool_rejected(self):
        with pytest.raises(ConfigError):
            select_icl_variant(0.1, [])

    @given(st.lists(st.floats(min_value=0.0, max_value=2.0,
                              allow_nan=False), min_size=20, max_size=200),
           st.floats(min_value=0.0, max_value=2.0, allow_nan=False))
    def test_matches_percentile_oracle(self, distances, test_distance):
        expected = (PromptKind.ICL_V2
                    if test_distance <= np.percentile(distances, 10)
                    else PromptKind.SCORE)
        assert select_icl_variant(test_distance, distances) is expected
