import json

import pytest

from verifact.corpus import (ESCALATION, AnnotationTriple, BinaryLabel,
                             PossibilityLabel, SixWayLabel, Split, Statement,
                             ThreeWayLabel, agreement_kappa, apply_resolutions,
                             binarize, coarsen_6_to_3, load_annotation_triples,
                             load_liar_new, load_liar_tsv,
                             load_resolution_sidecar, resolve_possibility)
from verifact.errors import DataError, ParseError, SchemaError

from .oracles import cohen_kappa


class TestLabels:
    def test_binarize_splits_in_the_middle(self):
        false_side = [SixWayLabel.PANTS_FIRE, SixWayLabel.FALSE,
                      SixWayLabel.BARELY_OR_MOSTLY_FALSE]
        true_side = [SixWayLabel.HALF_TRUE, SixWayLabel.MOSTLY_TRUE,
                     SixWayLabel.TRUE]
        assert all(binarize(lab) is BinaryLabel.FALSE for lab in false_side)
        assert all(binarize(lab) is BinaryLabel.TRUE for lab in true_side)

    def test_coarsen_pairs_adjacent_labels(self):
        expected = {0: 0, 1: 0, 2: 1, 3: 1, 4: 2, 5: 2}
        for raw, want in expected.items():
            assert coarsen_6_to_3(SixWayLabel(raw)) == ThreeWayLabel(want)


class TestLiarTsv:
    def test_loads_expected_counts(self, liar_val, liar_test):
        assert len(liar_val) == 1284
        assert len(liar_test) == 1267
        val_false = sum(1 for s in liar_val
                        if binarize(s.label) is BinaryLabel.FALSE)
        test_false = sum(1 for s in liar_test
                         if binarize(s.label) is BinaryLabel.FALSE)
        assert val_false == 616
        assert test_false == 553

    def test_split_tagging_and_order(self, liar_test):
        assert all(s.split is Split.TEST for s in liar_test)
        assert len({s.id for s in liar_test}) == len(liar_test)

    def test_bad_label_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("a.json\ttrue\tok claim\n"
                        "b.json\tnonsense\tbad claim\n", encoding="utf-8")
        with pytest.raises(SchemaError, match=r":2: unknown veracity label"):
            load_liar_tsv(path)

    def test_empty_text_reports_line_number(self, tmp_path):
        path = tmp_path / "empty.tsv"
        path.write_text("a.json\ttrue\t \n", encoding="utf-8")
        with pytest.raises(ParseError, match=r":1"):
            load_liar_tsv(path)

    def test_short_row_is_parse_error(self, tmp_path):
        path = tmp_path / "short.tsv"
        path.write_text("a.json\ttrue\n", encoding="utf-8")
        with pytest.raises(ParseError, match="3 tab-separated columns"):
            load_liar_tsv(path)


class TestLiarNew:
    def test_counts_and_languages(self, liar_new_path):
        statements = load_liar_new(liar_new_path)
        assert len(statements) == 2 * 1957
        en = [s for s in statements if s.language.value == "en"]
        fr = [s for s in statements if s.language.value == "fr"]
        assert len(en) == 1957 and len(fr) == 1957
        assert all(s.id.endswith("_en") for s in en)
        assert all(s.split is Split.TEST for s in statements)

    def test_six_way_distribution(self, liar_new_en):
        counts = {label: 0 for label in SixWayLabel}
        for s in liar_new_en:
            counts[s.label] += 1
        assert counts[SixWayLabel.PANTS_FIRE] == 359
        assert counts[SixWayLabel.FALSE] == 1067
        assert counts[SixWayLabel.BARELY_OR_MOSTLY_FALSE] == 237
        assert counts[SixWayLabel.HALF_TRUE] == 147
        assert counts[SixWayLabel.MOSTLY_TRUE] == 99
        assert counts[SixWayLabel.TRUE] == 48

    def test_possibility_distribution(self, liar_new_en):
        counts = {label: 0 for label in PossibilityLabel}
        for s in liar_new_en:
            counts[s.possibility] += 1
        assert counts[PossibilityLabel.POSSIBLE] == 927
        assert counts[PossibilityLabel.HARD] == 581
        assert counts[PossibilityLabel.IMPOSSIBLE] == 449

    def test_training_cutoff_month_is_dropped(self, tmp_path):
        rows = [
            {"id": "a", "text_en": "x", "text_fr": "y", "label": "false",
             "possibility": "possible", "date": "2021-09-14"},
            {"id": "b", "text_en": "x", "text_fr": "y", "label": "true",
             "possibility": "hard", "date": "2021-10-02"},
            {"id": "c", "text_en": "x", "text_fr": "y", "label": "true",
             "possibility": "hard"},
        ]
        path = tmp_path / "mini.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n",
                        encoding="utf-8")
        statements = load_liar_new(path)
        kept_ids = {s.id for s in statements}
        assert kept_ids == {"b_en", "b_fr", "c_en", "c_fr"}

    def test_missing_field_is_schema_error(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text(json.dumps({"id": "a", "text_en": "x",
                                    "label": "false",
                                    "possibility": "possible"}) + "\n",
                        encoding="utf-8")
        with pytest.raises(SchemaError):
            load_liar_new(path)


class TestPossibilityResolution:
    def _triple(self, *votes):
        return AnnotationTriple(
            statement_id="t",
            votes=tuple(PossibilityLabel(v) for v in votes))

    def test_unanimous(self):
        triple = self._triple("possible", "possible", "possible")
        assert resolve_possibility(triple) is PossibilityLabel.POSSIBLE

    def test_majority(self):
        triple = self._triple("hard", "hard", "possible")
        assert resolve_possibility(triple) is PossibilityLabel.HARD

    def test_possible_plus_impossible_escalates(self):
        for votes in (("possible", "impossible", "hard"),
                      ("possible", "possible", "impossible"),
                      ("impossible", "impossible", "possible")):
            assert resolve_possibility(self._triple(*votes)) is ESCALATION

    def test_hard_majorities_do_not_escalate(self):
        triple = self._triple("hard", "hard", "impossible")
        assert resolve_possibility(triple) is PossibilityLabel.HARD

    def test_fixture_round_trip(self, data_dir):
        triples = load_annotation_triples(data_dir / "annotation" /
                                          "triples.jsonl")
        assert len(triples) == 12
        escalated = [t.statement_id for t in triples
                     if resolve_possibility(t) is ESCALATION]
        assert escalated == ["t07", "t08", "t09", "t10"]
        sidecar = load_resolution_sidecar(data_dir / "annotation" /
                                          "sidecar.csv")
        resolved = apply_resolutions(triples, sidecar)
        assert resolved["t07"] is PossibilityLabel.HARD
        assert resolved["t10"] is PossibilityLabel.IMPOSSIBLE
        assert resolved["t00"] is PossibilityLabel.POSSIBLE

    def test_unresolved_escalation_raises(self, data_dir):
        triples = load_annotation_triples(data_dir / "annotation" /
                                          "triples.jsonl")
        with pytest.raises(DataError, match="t07"):
            apply_resolutions(triples, {})


class TestKappa:
    def test_fixture_value(self, data_dir):
        lines = (data_dir / "annotation" / "votes.csv").read_text(
            encoding="utf-8").splitlines()[1:]
        a = [line.split(",")[1] for line in lines]
        b = [line.split(",")[2] for line in lines]
        kappa = agreement_kappa(a, b)
        assert round(kappa, 3) == 0.312
        assert kappa == pytest.approx(cohen_kappa(a, b), abs=1e-12)
        disagreements = sum(1 for x, y in zip(a, b) if x != y)
        assert disagreements == 72 and len(a) == 200

    def test_matches_sklearn(self):
        sklearn_metrics = pytest.importorskip("sklearn.metrics")
        rng_labels = ["p", "h", "i"]
        import random
        rng = random.Random(3)
        a = [rng.choice(rng_labels) for _ in range(300)]
        b = [rng.choice(rng_labels) for _ in range(300)]
        assert agreement_kappa(a, b) == pytest.approx(
            sklearn_metrics.cohen_kappa_score(a, b), abs=1e-12)

    def test_perfect_expected_agreement_guard(self):
        assert agreement_kappa(["p", "p"], ["p", "p"]) == 1.0


class TestStatement:
    def test_statement_is_frozen(self):
        statement = Statement(id="x", text="t", language=None, label=None,
                              possibility=None, split=Split.TEST)
        with pytest.raises(Exception):
            statement.id = "y"
