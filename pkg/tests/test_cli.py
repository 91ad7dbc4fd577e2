"""End-to-end command-line runs against the tiny offline corpus."""

import json
import random

import pytest

from verifact import (
    API_KEY_ENV,
    ENDPOINT_ENV,
    Language,
    PromptKind,
    SixWayLabel,
    Split,
    Statement,
    prompt_sha256,
    read_records,
    render,
)
from verifact.cli import main


@pytest.fixture
def tiny_dir(data_dir):
    return data_dir / "tiny"


@pytest.fixture
def tiny_score(fixtures_dir):
    return fixtures_dir / "tiny_score.jsonl"


def _run_args(tiny_dir, tiny_score, out, **extra):
    args = ["run", "--dataset", str(tiny_dir), "--split", "test",
            "--fixtures", str(tiny_score), "--out", str(out)]
    for key, value in extra.items():
        flag = "--" + key.replace("_", "-")
        if value is True:
            args.append(flag)
        else:
            args.extend([flag, str(value)])
    return args


def _seed0_fill():
    return random.Random(0).randint(0, 100)


class TestRun:
    def test_end_to_end_outputs(self, tiny_dir, tiny_score, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(_run_args(tiny_dir, tiny_score, out)) == 0
        for name in ("manifest.json", "records.jsonl", "metrics.json",
                     "summary.csv", "usage.jsonl", "cost.json"):
            assert (out / name).exists(), name
        records = read_records(out / "records.jsonl")
        assert len(records) == 6
        filled = [r for r in records if r.filled_random]
        assert [r.statement_id for r in filled] == ["t0004.json"]
        assert filled[0].verdict.value == _seed0_fill()

        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["n_total"] == 6 and metrics["n_scored"] == 6
        # scores 10,80,51,fill,90,49 vs gold F,T,T,F,T,F at threshold 50
        expected_correct = 5 + (1 if _seed0_fill() < 50 else 0)
        assert metrics["accuracy"] == pytest.approx(expected_correct / 6)

        cost = json.loads((out / "cost.json").read_text())
        entry = cost["models"]["gpt-4-0314"]
        assert entry["input_tokens"] == 240 and entry["output_tokens"] == 12
        assert entry["usd"] == pytest.approx(0.00792)

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["prompt"] == "score"
        assert manifest["template_hashes"]
        assert manifest["prices"]["gpt-4-0314"] == [0.03, 0.06]

        assert "n=6 scored=6" in capsys.readouterr().out

    def test_double_run_byte_identical(self, tiny_dir, tiny_score, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(_run_args(tiny_dir, tiny_score, out_a)) == 0
        assert main(_run_args(tiny_dir, tiny_score, out_b)) == 0
        for name in ("records.jsonl", "metrics.json", "summary.csv",
                     "usage.jsonl", "cost.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_gate_band(self, tiny_dir, tiny_score, tmp_path):
        out = tmp_path / "out"
        assert main(_run_args(tiny_dir, tiny_score, out, gate="band")) == 0
        metrics = json.loads((out / "metrics.json").read_text())
        # 51 and 49 fall in the band; the seed-0 fill may join them
        in_band = 2 + (1 if 49 <= _seed0_fill() <= 51 else 0)
        assert metrics["n_excluded"] == in_band
        assert metrics["n_scored"] == 6 - in_band
        assert metrics["n_total"] == 6

    def test_fixed_threshold_changes_decisions(self, tiny_dir, tiny_score,
                                               tmp_path):
        out = tmp_path / "out"
        assert main(_run_args(tiny_dir, tiny_score, out, threshold=85)) == 0
        records = read_records(out / "records.jsonl")
        by_id = {r.statement_id: r for r in records}
        assert by_id["t0002.json"].prediction == 0  # 80 < 85
        assert by_id["t0005.json"].prediction == 1  # 90 >= 85

    def test_optimized_threshold_recorded(self, tiny_dir, tiny_score,
                                          tmp_path):
        out = tmp_path / "out"
        assert main(_run_args(tiny_dir, tiny_score, out,
                              threshold="optimize")) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert isinstance(manifest["optimized_threshold"], int)
        assert 0 <= manifest["optimized_threshold"] <= 101

    def test_reps_score_run_zero_only(self, tiny_dir, tiny_score, tmp_path):
        out = tmp_path / "out"
        assert main(_run_args(tiny_dir, tiny_score, out, reps=3)) == 0
        records = read_records(out / "records.jsonl")
        assert len(records) == 18
        assert {r.run_index for r in records} == {0, 1, 2}
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["n_total"] == 6

    def test_cache_makes_second_run_free(self, tiny_dir, tiny_score, tmp_path):
        cache = tmp_path / "cache.jsonl"
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(_run_args(tiny_dir, tiny_score, out_a,
                              cache=cache)) == 0
        assert main(_run_args(tiny_dir, tiny_score, out_b,
                              cache=cache)) == 0
        assert (out_a / "records.jsonl").read_bytes() == \
            (out_b / "records.jsonl").read_bytes()
        assert (out_b / "usage.jsonl").read_text() == ""
        cost = json.loads((out_b / "cost.json").read_text())
        assert cost["models"] == {}

    def test_binary_ue_with_uncertain_gate(self, tiny_dir, fixtures_dir,
                                           tmp_path):
        out = tmp_path / "out"
        args = _run_args(tiny_dir, fixtures_dir / "tiny_binary_ue.jsonl", out,
                         prompt="binary-uncertainty-enabled", gate="uncertain")
        assert main(args) == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["n_excluded"] == 1  # the lone "0.5" reply
        assert metrics["n_scored"] == 5
        records = read_records(out / "records.jsonl")
        by_id = {r.statement_id: r for r in records}
        assert by_id["t0006.json"].filled_random  # "No idea." got filled
        assert by_id["t0006.json"].verdict.value in (0, 1)

    def test_binary_prompt_rejects_threshold(self, tiny_dir, fixtures_dir,
                                             tmp_path, capsys):
        args = _run_args(tiny_dir, fixtures_dir / "tiny_binary_ue.jsonl",
                         tmp_path / "out",
                         prompt="binary-uncertainty-enabled", threshold=60)
        assert main(args) == 2
        assert "no threshold" in capsys.readouterr().err

    def test_web_evidence_answerless_toggle(self, tiny_dir, fixtures_dir,
                                            tmp_path):
        outs = {}
        for answerless in (False, True):
            out = tmp_path / ("ans" if answerless else "plain")
            extra = {"prompt": "web-evidence",
                     "articles": tiny_dir / "articles.jsonl"}
            if answerless:
                extra["answerless"] = True
            args = _run_args(tiny_dir, fixtures_dir / "tiny_web.jsonl", out,
                             **extra)
            assert main(args) == 0
            outs[answerless] = out
        plain = read_records(outs[False] / "records.jsonl")
        answerless = read_records(outs[True] / "records.jsonl")
        # fixtures reply identically for both prompt variants
        assert [r.verdict.value for r in plain] == \
            [r.verdict.value for r in answerless]
        plain_manifest = json.loads((outs[False] / "manifest.json").read_text())
        ans_manifest = json.loads((outs[True] / "manifest.json").read_text())
        assert not plain_manifest["answerless"]
        assert ans_manifest["answerless"]

    def test_empty_dataset_warns_and_exits_zero(self, tiny_score, tmp_path,
                                                capsys):
        dataset = tmp_path / "empty.tsv"
        dataset.write_text("")
        out = tmp_path / "out"
        args = ["run", "--dataset", str(dataset), "--fixtures",
                str(tiny_score), "--out", str(out)]
        assert main(args) == 0
        assert "empty dataset" in capsys.readouterr().err
        assert read_records(out / "records.jsonl") == []
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["n_total"] == 0


class TestRunFailures:
    def test_stub_without_fixtures(self, tiny_dir, tmp_path, capsys):
        args = ["run", "--dataset", str(tiny_dir), "--out",
                str(tmp_path / "out")]
        assert main(args) == 2
        assert "--fixtures" in capsys.readouterr().err

    def test_http_without_credential(self, tiny_dir, tmp_path, monkeypatch,
                                     capsys):
        monkeypatch.delenv(API_KEY_ENV, raising=False)
        monkeypatch.setenv(ENDPOINT_ENV, "https://api.example.test")
        args = ["run", "--dataset", str(tiny_dir), "--provider", "http",
                "--out", str(tmp_path / "out")]
        assert main(args) == 2
        assert API_KEY_ENV in capsys.readouterr().err

    def test_non_runnable_prompt_kind(self, tiny_dir, tiny_score, tmp_path,
                                      capsys):
        args = _run_args(tiny_dir, tiny_score, tmp_path / "out",
                         prompt="icl-v1")
        assert main(args) == 2
        assert "not runnable" in capsys.readouterr().err

    def test_fixture_miss_flushes_partial_records(self, tmp_path, capsys):
        # 40 statements split the work into two pools of 32 and 8; a
        # missing fixture in the second pool must still flush the first.
        dataset = tmp_path / "claims.tsv"
        rows = []
        fixture_lines = []
        for i in range(40):
            sid = f"c{i:03d}.json"
            text = f"Claim number {i} cites {i + 3} official documents."
            rows.append(f"{sid}\thalf-true\t{text}")
            statement = Statement(id=sid, text=text, language=Language.EN,
                                  label=SixWayLabel.HALF_TRUE,
                                  possibility=None, split=Split.TEST)
            if i < 39:
                sha = prompt_sha256(render(PromptKind.SCORE, statement))
                fixture_lines.append(json.dumps(
                    {"prompt_sha256": sha, "run_index": 0, "text": "60"}))
        dataset.write_text("\n".join(rows) + "\n")
        fixtures = tmp_path / "fixtures.jsonl"
        fixtures.write_text("\n".join(fixture_lines) + "\n")
        out = tmp_path / "out"
        args = ["run", "--dataset", str(dataset), "--fixtures", str(fixtures),
                "--out", str(out)]
        assert main(args) == 4
        assert "no fixture" in capsys.readouterr().err
        partial = read_records(out / "records.jsonl")
        assert len(partial) == 32
        assert all(r.verdict.value == 60 for r in partial)


class TestEvaluate:
    @pytest.fixture
    def score_records(self, tiny_dir, tiny_score, tmp_path):
        out = tmp_path / "run_out"
        assert main(_run_args(tiny_dir, tiny_score, out)) == 0
        return out / "records.jsonl"

    def test_binary_rethreshold(self, score_records, tiny_dir, tmp_path,
                                capsys):
        args = ["evaluate", "--records", str(score_records), "--dataset",
                str(tiny_dir), "--split", "test", "--threshold", "85",
                "--out", str(tmp_path / "eval.json")]
        assert main(args) == 0
        payload = json.loads((tmp_path / "eval.json").read_text())
        assert payload["n_scored"] == 6
        # 85 flips 80 and 51 to False: preds 0,0,0,fill,1,0 vs gold 0,1,1,0,1,0
        fill_pred = 1 if _seed0_fill() >= 85 else 0
        expected = (3 + (1 if fill_pred == 0 else 0)) / 6
        assert payload["accuracy"] == pytest.approx(expected)

    @pytest.mark.parametrize("kway,n_classes", [(3, 3), (6, 6)])
    def test_kway_modes(self, score_records, tiny_dir, tmp_path, capsys,
                        kway, n_classes):
        args = ["evaluate", "--records", str(score_records), "--dataset",
                str(tiny_dir), "--split", "test", "--kway", str(kway)]
        assert main(args) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["n_scored"] == 6
        assert 0.0 <= payload["accuracy"] <= 1.0
        assert len(payload["per_class_f1"]) <= n_classes


class TestCalibrateCommand:
    def test_fit_then_apply(self, tiny_dir, tiny_score, tmp_path, capsys):
        run_out = tmp_path / "run_out"
        assert main(_run_args(tiny_dir, tiny_score, run_out)) == 0
        fit_out = tmp_path / "fit"
        args = ["calibrate", "--records", str(run_out / "records.jsonl"),
                "--dataset", str(tiny_dir), "--split", "test",
                "--mode", "fit", "--out", str(fit_out)]
        assert main(args) == 0
        assert "slope=" in capsys.readouterr().out
        model_path = fit_out / "calibration.json"
        model = json.loads(model_path.read_text())
        assert set(model) == {"slope", "intercept"}

        apply_out = tmp_path / "apply"
        args = ["calibrate", "--records", str(run_out / "records.jsonl"),
                "--dataset", str(tiny_dir), "--split", "test",
                "--mode", f"apply:{model_path}", "--out", str(apply_out)]
        assert main(args) == 0
        assert "ece=" in capsys.readouterr().out
        assert (apply_out / "reliability.csv").exists()
        calibrated = read_records(apply_out / "records_calibrated.jsonl")
        scored = [r for r in calibrated if r.verdict.value is not None]
        assert all(0.0 < r.probability < 1.0 for r in scored)

    def test_bad_mode(self, tiny_dir, tiny_score, tmp_path, capsys):
        run_out = tmp_path / "run_out"
        assert main(_run_args(tiny_dir, tiny_score, run_out)) == 0
        args = ["calibrate", "--records", str(run_out / "records.jsonl"),
                "--dataset", str(tiny_dir), "--split", "test",
                "--mode", "nonsense", "--out", str(tmp_path / "x")]
        assert main(args) == 2


class TestGateCommand:
    def test_band_split_files(self, tiny_dir, tiny_score, tmp_path, capsys):
        run_out = tmp_path / "run_out"
        assert main(_run_args(tiny_dir, tiny_score, run_out)) == 0
        gate_out = tmp_path / "gate"
        args = ["gate", "--records", str(run_out / "records.jsonl"),
                "--mode", "band", "--out", str(gate_out)]
        assert main(args) == 0
        kept = read_records(gate_out / "kept.jsonl")
        excluded = read_records(gate_out / "excluded.jsonl")
        assert len(kept) + len(excluded) == 6
        assert all(49 <= r.verdict.value <= 51 for r in excluded)
        summary = json.loads((gate_out / "gate_summary.json").read_text())
        assert summary["n_kept"] == len(kept)
        assert summary["n_excluded"] == len(excluded)
        assert summary["exclusion_reason"] == "near_midpoint"


class TestStudyCommand:
    def test_variation_over_rep_files(self, tiny_dir, tiny_score, tmp_path,
                                      capsys):
        run_out = tmp_path / "run_out"
        assert main(_run_args(tiny_dir, tiny_score, run_out, reps=3)) == 0
        records = read_records(run_out / "records.jsonl")
        from verifact import write_records
        rep_paths = []
        for rep in range(3):
            path = tmp_path / f"rep{rep}.jsonl"
            write_records([r for r in records if r.run_index == rep], path)
            rep_paths.append(str(path))
        args = ["study", "--kind", "variation", "--records", *rep_paths,
                "--dataset", str(tiny_dir), "--split", "test",
                "--out", str(tmp_path / "variation.json")]
        assert main(args) == 0
        payload = json.loads((tmp_path / "variation.json").read_text())
        # t0004 answers: filled refusal / "5" / "0.5" -> only two numeric
        assert payload["n_nonnumeric"] == 1
        # spread is t0002 (80, 85, 95) or t0004's filled pair
        fill_spread = abs(_seed0_fill() - 5)
        assert payload["max_ptp"] == max(15, fill_spread)
        assert payload["n_large_ptp"] == (1 if fill_spread > 50 else 0)

    def test_variation_needs_two_files(self, tiny_dir, tmp_path, capsys):
        args = ["study", "--kind", "variation", "--records",
                str(tmp_path / "one.jsonl"), "--dataset", str(tiny_dir)]
        assert main(args) == 2

    def test_errors_study(self, tiny_dir, tiny_score, tmp_path, capsys):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(_run_args(tiny_dir, tiny_score, out_a)) == 0
        assert main(_run_args(tiny_dir, tiny_score, out_b,
                              threshold=85)) == 0
        capsys.readouterr()
        args = ["study", "--kind", "errors",
                "--records-a", str(out_a / "records.jsonl"),
                "--records-b", str(out_b / "records.jsonl"),
                "--dataset", str(tiny_dir), "--split", "test"]
        assert main(args) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["n_compared"] == 6
        cells = [payload["a_right_b_wrong"], payload["b_right_a_wrong"],
                 payload["both_right"], payload["both_wrong"]]
        assert sum(cells) == 6


class TestTruncateCommand:
    def test_planted_corpus(self, data_dir, tmp_path, capsys):
        out = tmp_path / "trunc"
        args = ["truncate", "--articles",
                str(data_dir / "articles" / "planted.jsonl"),
                "--out", str(out)]
        assert main(args) == 0
        assert "articles=25" in capsys.readouterr().out
        expected = {}
        with (data_dir / "articles" / "planted_expected.jsonl").open() as fh:
            for line in fh:
                payload = json.loads(line)
                expected[payload["statement_id"]] = payload["text"]
        produced = {}
        with (out / "articles_answerless.jsonl").open() as fh:
            for line in fh:
                payload = json.loads(line)
                produced[payload["statement_id"]] = payload["text"]
        assert produced == expected
        audits = [json.loads(line) for line in
                  (out / "truncation_audit.jsonl").read_text().splitlines()]
        assert len(audits) == 25
        assert all(a["n_removed"] >= 1 for a in audits)


class TestCostCommand:
    def test_default_prices(self, tmp_path, capsys):
        usage = tmp_path / "usage.jsonl"
        rows = [{"model_id": "gpt-4-0314", "input_tokens": 50_000,
                 "output_tokens": 1_500}] * 2
        usage.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        assert main(["cost", "--usage", str(usage)]) == 0
        payload = json.loads(capsys.readouterr().out)
        entry = payload["gpt-4-0314"]
        assert entry["input_tokens"] == 100_000
        assert entry["output_tokens"] == 3_000
        assert entry["usd"] == pytest.approx(3.18, abs=1e-9)

    def test_config_price_override(self, tmp_path, capsys):
        usage = tmp_path / "usage.jsonl"
        usage.write_text(json.dumps({"model_id": "other-model",
                                     "input_tokens": 1000,
                                     "output_tokens": 1000}) + "\n")
        config = tmp_path / "config.yaml"
        config.write_text("prices:\n  other-model:\n"
                          "    input_per_1k: 0.5\n    output_per_1k: 1.5\n")
        assert main(["cost", "--usage", str(usage), "--config",
                     str(config)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["other-model"]["usd"] == pytest.approx(2.0)

    def test_unpriced_model_reports_tokens_only(self, tmp_path, capsys):
        usage = tmp_path / "usage.jsonl"
        usage.write_text(json.dumps({"model_id": "mystery",
                                     "input_tokens": 10,
                                     "output_tokens": 10}) + "\n")
        assert main(["cost", "--usage", str(usage)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert "usd" not in payload["mystery"]
