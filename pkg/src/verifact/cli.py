"""Command-line entry point: run, evaluate, calibrate, gate, study, truncate, cost.

Every run writes a self-describing output directory: the prediction
records, the metrics report, a manifest that pins every input (including
prompt template hashes and the price table), and a cost summary. Given
the same manifest, fixtures, and seed, outputs are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 transport error,
4 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from . import calibration as cal
from . import studies
from .corpus import (BinaryLabel, PossibilityLabel, Split, Statement, binarize,
                     coarsen_6_to_3, load_liar_new, load_liar_tsv)
from .decisions import (GateMode, ThresholdRule, apply_threshold, gate_uncertain,
                        optimize_threshold, score_to_kway)
from .errors import (ConfigError, DataError, ScoreRangeError, TransportError,
                     VerifactError)
from .evidence import (audit_truncation, build_evidence_prompt, load_articles,
                       strip_verdict, write_articles)
from .gateway import (DEFAULT_TEMPERATURE, CostLedger, HttpProvider,
                      ModelGateway, ModelRequest, ResponseCache, StubProvider)
from .metrics import MetricsReport, stratified_report, write_summary_csv
from .parsing import (PredictionRecord, SplitOrder, Verdict, VerdictKind,
                      fill_refusals, parse_binary, parse_score, read_records,
                      split_explained, write_records)
from .prompts import PromptKind, catalog_hashes, render

__all__ = ["main", "ExperimentManifest"]

DEFAULT_PRICES: dict[str, tuple[float, float]] = {"gpt-4-0314": (0.03, 0.06)}

_SCORE_KINDS = {PromptKind.SCORE, PromptKind.WEB_EVIDENCE,
                PromptKind.SCORE_THEN_EXPLAIN, PromptKind.EXPLAIN_THEN_SCORE}
_BINARY_KINDS = {PromptKind.BINARY, PromptKind.BINARY_UNCERTAINTY_ENABLED}
_RUNNABLE_KINDS = _SCORE_KINDS | _BINARY_KINDS


@dataclass(frozen=True)
class ExperimentManifest:
    """Everything needed to replay a run offline, serialized with results."""

    dataset: str
    split: str
    language: str
    prompt: str
    model: str
    temperature: float
    reps: int
    seed: int
    threshold: object  # int, "optimize", or None
    gate: str
    calibrate: str | None
    provider: str
    fixtures: str | None
    out: str
    answerless: bool = False

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "split": self.split,
            "language": self.language,
            "prompt": self.prompt,
            "model": self.model,
            "temperature": self.temperature,
            "reps": self.reps,
            "seed": self.seed,
            "threshold": self.threshold,
            "gate": self.gate,
            "calibrate": self.calibrate,
            "provider": self.provider,
            "fixtures": self.fixtures,
            "out": self.out,
            "answerless": self.answerless,
        }


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {path}")
    loaded = yaml.safe_load(config_path.read_text(encoding="utf-8"))
    if loaded is None:
        return {}
    if not isinstance(loaded, dict):
        raise ConfigError(f"config root must be a mapping: {path}")
    return loaded


def _price_table(config: dict) -> dict[str, tuple[float, float]]:
    table = dict(DEFAULT_PRICES)
    for model_id, entry in (config.get("prices") or {}).items():
        try:
            table[str(model_id)] = (float(entry["input_per_1k"]),
                                    float(entry["output_per_1k"]))
        except (KeyError, TypeError, ValueError):
            raise ConfigError(
                f"price entry for {model_id!r} needs input_per_1k and "
                "output_per_1k") from None
    return table


def _prompt_kind(name: str) -> PromptKind:
    try:
        return PromptKind(name.replace("-", "_"))
    except ValueError:
        raise ConfigError(f"unknown prompt kind: {name}") from None


def _load_statements(dataset: str, split: str, language: str) -> list[Statement]:
    path = Path(dataset)
    if path.is_dir():
        filenames = {"train": "train.tsv", "val": "valid.tsv", "test": "test.tsv"}
        file = path / filenames[split]
        if not file.exists():
            raise ConfigError(f"dataset directory {dataset} has no {file.name}")
        return load_liar_tsv(file, split=Split(split))
    if not path.exists():
        raise ConfigError(f"dataset not found: {dataset}")
    if path.suffix == ".jsonl":
        if split != "test":
            raise ConfigError("the bilingual JSONL corpus is evaluation-only; "
                              "use --split test")
        return [s for s in load_liar_new(path) if s.language.value == language]
    if path.suffix == ".tsv":
        return load_liar_tsv(path, split=Split(split))
    raise ConfigError(f"cannot infer dataset format from {dataset!r} "
                      "(expected a directory, .tsv, or .jsonl)")


def _gold_binary(statements: Sequence[Statement]) -> dict[str, int]:
    gold: dict[str, int] = {}
    for statement in statements:
        if statement.label is None:
            raise DataError(f"statement {statement.id} has no gold label")
        gold[statement.id] = int(binarize(statement.label))
    return gold


def _possibility_map(statements: Sequence[Statement]) -> dict[str, PossibilityLabel] | None:
    labels = {s.id: s.possibility for s in statements if s.possibility is not None}
    if not labels:
        return None
    if len(labels) != len(statements):
        missing = [s.id for s in statements if s.possibility is None]
        raise DataError("possibility labels missing for: "
                        + ", ".join(missing[:10]))
    return labels


def _parse_reply(kind: PromptKind, raw: str) -> tuple[Verdict, bool]:
    """Parse one reply; returns (verdict, range_error_flag)."""
    try:
        if kind is PromptKind.BINARY:
            return parse_binary(raw, uncertainty_enabled=False), False
        if kind is PromptKind.BINARY_UNCERTAINTY_ENABLED:
            return parse_binary(raw, uncertainty_enabled=True), False
        if kind is PromptKind.SCORE_THEN_EXPLAIN:
            return split_explained(raw, SplitOrder.SCORE_FIRST), False
        if kind is PromptKind.EXPLAIN_THEN_SCORE:
            return split_explained(raw, SplitOrder.EXPLAIN_FIRST), False
        return parse_score(raw), False
    except ScoreRangeError:
        return Verdict.refusal(raw), True


def _apply_decisions(records: Sequence[PredictionRecord],
                     rule: ThresholdRule | None) -> list[PredictionRecord]:
    decided = []
    for record in records:
        if record.verdict.kind is VerdictKind.SCORE and rule is not None:
            prediction = int(apply_threshold(record.verdict.value, rule))
            decided.append(replace(record, prediction=prediction))
        elif record.verdict.kind is VerdictKind.BINARY:
            decided.append(replace(record, prediction=record.verdict.value))
        else:
            decided.append(record)
    return decided


def _split_gated(records: Sequence[PredictionRecord],
                 gate: str) -> tuple[list[PredictionRecord], list[PredictionRecord]]:
    """Partition records for scoring; Uncertain verdicts are never scoreable."""
    uncertain = [r for r in records if r.verdict.kind is VerdictKind.UNCERTAIN]
    rest = [r for r in records if r.verdict.kind is not VerdictKind.UNCERTAIN]
    if gate == "uncertain":
        gated = gate_uncertain(records, GateMode.UNCERTAIN_VERDICT)
        return gated.kept, gated.excluded
    if gate == "band":
        gated = gate_uncertain(rest, GateMode.SCORE_BAND)
        return gated.kept, gated.excluded + uncertain
    return rest, uncertain


def _empty_report() -> MetricsReport:
    return MetricsReport(n_total=0, n_scored=0, n_excluded=0,
                         n_filled_random=0, accuracy=0.0, weighted_f1=0.0,
                         macro_f1=0.0, per_class_f1={})


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _build_gateway(manifest: ExperimentManifest, config: dict,
                   cache_path: str | None) -> ModelGateway:
    provider_config = config.get("provider") or {}
    ledger = CostLedger(price_table=_price_table(config))
    cache = ResponseCache(cache_path) if cache_path else None
    if manifest.provider == "stub":
        if manifest.fixtures is None:
            raise ConfigError("stub provider needs --fixtures")
        provider = StubProvider(
            fixtures_path=manifest.fixtures,
            embedding_dim=int(provider_config.get("embedding_dim", 64)))
    else:
        provider = HttpProvider(
            endpoint=provider_config.get("endpoint"),
            timeout=float(provider_config.get("timeout_s", 60.0)),
            max_retries=int(provider_config.get("max_retries", 5)))
    return ModelGateway(provider=provider, ledger=ledger, cache=cache,
                        concurrency=int(provider_config.get("concurrency", 4)))


def _query_and_parse(
    gateway: ModelGateway,
    manifest: ExperimentManifest,
    statements: Sequence[Statement],
    kind: PromptKind,
    articles: Mapping | None,
    usage_rows: list[dict],
    partial: list[PredictionRecord],
) -> list[PredictionRecord]:
    """Render, query (bounded fan-out), and parse; appends to ``partial``
    as results arrive so callers can flush them on error."""
    requests = []
    for statement in statements:
        if kind is PromptKind.WEB_EVIDENCE:
            if articles is None:
                raise ConfigError("web-evidence prompts need --articles")
            if statement.id not in articles:
                raise DataError(f"no article for statement {statement.id}")
            prompt = build_evidence_prompt(statement, articles[statement.id],
                                           answerless=manifest.answerless)
        else:
            prompt = render(kind, statement)
        for run_index in range(manifest.reps):
            requests.append(ModelRequest(model_id=manifest.model, prompt=prompt,
                                         temperature=manifest.temperature,
                                         run_index=run_index))
    chunk_size = max(32, gateway.concurrency * 8)
    records: list[PredictionRecord] = []
    for start in range(0, len(requests), chunk_size):
        chunk = requests[start:start + chunk_size]
        for response in gateway.chat_many(chunk):
            verdict, range_error = _parse_reply(kind, response.raw_text)
            record = PredictionRecord(
                statement_id=response.request.prompt.statement_id,
                prompt_kind=kind,
                model_id=response.request.model_id,
                run_index=response.request.run_index,
                raw_text=response.raw_text,
                verdict=verdict,
                range_error=range_error,
            )
            records.append(record)
            partial.append(record)
            if not response.cache_hit:
                usage_rows.append({"model_id": response.request.model_id,
                                   "input_tokens": response.input_tokens,
                                   "output_tokens": response.output_tokens})
    return records


def _resolve_threshold(
    manifest: ExperimentManifest,
    kind: PromptKind,
    gateway: ModelGateway,
    articles: Mapping | None,
    usage_rows: list[dict],
    partial: list[PredictionRecord],
) -> tuple[ThresholdRule | None, int | None]:
    """Fixed rule, validation-optimized rule, or None for binary prompts."""
    if kind in _BINARY_KINDS:
        if manifest.threshold not in (None, "none"):
            raise ConfigError("binary prompts take no threshold")
        return None, None
    if manifest.threshold == "optimize":
        val_statements = _load_statements(manifest.dataset, "val",
                                          manifest.language)
        val_records = _query_and_parse(gateway, manifest, val_statements, kind,
                                       articles, usage_rows, partial)
        val_records = fill_refusals(val_records, seed=manifest.seed)
        gold = _gold_binary(val_statements)
        scores, labels = [], []
        for record in val_records:
            if record.verdict.kind is VerdictKind.SCORE:
                scores.append(record.verdict.value)
                labels.append(BinaryLabel(gold[record.statement_id]))
        rule = optimize_threshold(scores, labels)
        return rule, rule.threshold
    if manifest.threshold is None:
        return ThresholdRule(50), None
    return ThresholdRule(int(manifest.threshold)), None


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    kind = _prompt_kind(args.prompt)
    if kind not in _RUNNABLE_KINDS:
        raise ConfigError(
            f"prompt kind {args.prompt!r} is not runnable end-to-end; "
            "demonstration prompts are composed via the library API")
    manifest = ExperimentManifest(
        dataset=args.dataset, split=args.split, language=args.language,
        prompt=kind.value, model=args.model, temperature=args.temperature,
        reps=args.reps, seed=args.seed, threshold=args.threshold,
        gate=args.gate, calibrate=args.calibrate, provider=args.provider,
        fixtures=args.fixtures, out=args.out, answerless=args.answerless)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    gateway = _build_gateway(manifest, config, args.cache)
    articles = load_articles(args.articles) if args.articles else None

    statements = _load_statements(manifest.dataset, manifest.split,
                                  manifest.language)
    manifest_payload = {**manifest.to_dict(),
                        "template_hashes": catalog_hashes(),
                        "prices": {m: list(p) for m, p
                                   in sorted(_price_table(config).items())}}
    _write_json(manifest_payload, out_dir / "manifest.json")

    if not statements:
        print("warning: empty dataset; writing empty outputs", file=sys.stderr)
        write_records([], out_dir / "records.jsonl")
        _empty_report().to_json(out_dir / "metrics.json")
        _write_json({"models": {}}, out_dir / "cost.json")
        return 0

    usage_rows: list[dict] = []
    partial: list[PredictionRecord] = []
    try:
        rule, optimized = _resolve_threshold(manifest, kind, gateway, articles,
                                             usage_rows, partial)
        if optimized is not None:
            manifest_payload["optimized_threshold"] = optimized
            _write_json(manifest_payload, out_dir / "manifest.json")
        records = _query_and_parse(gateway, manifest, statements, kind,
                                   articles, usage_rows, partial)
    except VerifactError:
        write_records(partial, out_dir / "records.jsonl")
        raise

    records = fill_refusals(records, seed=manifest.seed)
    records = _apply_decisions(records, rule)

    if manifest.calibrate:
        records = _run_calibration(manifest.calibrate, records, statements,
                                   out_dir, smoothing=False)

    kept, excluded = _split_gated(records, manifest.gate)
    write_records(records, out_dir / "records.jsonl")

    gold = _gold_binary(statements)
    possibility = _possibility_map(statements)
    if manifest.reps > 1:
        # With repetitions the records file holds every run; score run 0.
        kept = [r for r in kept if r.run_index == 0]
        excluded = [r for r in excluded if r.run_index == 0]
    report = stratified_report(kept, gold, possibility, excluded=excluded)
    report.to_json(out_dir / "metrics.json")
    write_summary_csv(report, out_dir / "summary.csv")

    _write_usage(usage_rows, out_dir / "usage.jsonl")
    _write_cost(gateway.ledger, out_dir / "cost.json")
    print(f"n={report.n_total} scored={report.n_scored} "
          f"accuracy={report.accuracy:.4f} weighted_f1={report.weighted_f1:.4f} "
          f"macro_f1={report.macro_f1:.4f}")
    return 0


def _run_calibration(mode: str, records: list[PredictionRecord],
                     statements: Sequence[Statement], out_dir: Path,
                     smoothing: bool) -> list[PredictionRecord]:
    gold = _gold_binary(statements)
    if mode == "fit":
        scores, labels = [], []
        for record in records:
            if record.verdict.kind is VerdictKind.SCORE and not record.filled_random:
                scores.append(float(record.verdict.value))
                labels.append(BinaryLabel(gold[record.statement_id]))
        model = cal.platt_fit(scores, labels, smoothing=smoothing)
        model.save(out_dir / "calibration.json")
        print(f"calibration: slope={model.slope:.6f} "
              f"intercept={model.intercept:.6f}")
        return records
    if mode.startswith("apply:"):
        model = cal.CalibrationModel.load(mode.split(":", 1)[1])
        calibrated = []
        for record in records:
            if record.verdict.kind is VerdictKind.SCORE:
                probability = cal.apply_calibration(model,
                                                    float(record.verdict.value))
                calibrated.append(replace(record, probability=probability))
            else:
                calibrated.append(record)
        eligible = [r for r in calibrated
                    if r.probability is not None and not r.filled_random]
        if eligible:
            probs = [r.probability for r in eligible]
            labels = [BinaryLabel(gold[r.statement_id]) for r in eligible]
            table = cal.reliability_table(probs, labels)
            cal.write_reliability_csv(table, out_dir / "reliability.csv")
            print(f"ece={table.ece():.6f} ties_cross_edges={table.ties_cross_edges}")
        return calibrated
    raise ConfigError(f"--calibrate must be 'fit' or 'apply:PATH', got {mode!r}")


def _write_usage(rows: list[dict], path: Path) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, separators=(",", ":")) + "\n")


def _write_cost(ledger: CostLedger, path: Path) -> None:
    models = {}
    for model_id in ledger.models():
        in_tok, out_tok = ledger.totals(model_id)
        entry: dict[str, object] = {"input_tokens": in_tok,
                                    "output_tokens": out_tok}
        if model_id in ledger.price_table:
            entry["usd"] = round(ledger.estimate_cost(model_id), 6)
        models[model_id] = entry
    _write_json({"models": models}, path)


def cmd_evaluate(args: argparse.Namespace) -> int:
    records = read_records(args.records)
    statements = _load_statements(args.dataset, args.split, args.language)
    possibility = _possibility_map(statements)
    if args.kway == 2:
        gold = _gold_binary(statements)
        if args.threshold is not None:
            rule = ThresholdRule(int(args.threshold))
            records = _apply_decisions(records, rule)
    else:
        gold = {}
        for statement in statements:
            if statement.label is None:
                raise DataError(f"statement {statement.id} has no gold label")
            if args.kway == 6:
                gold[statement.id] = int(statement.label)
            else:
                gold[statement.id] = int(coarsen_6_to_3(statement.label))
        decided = []
        for record in records:
            if record.verdict.kind is VerdictKind.SCORE:
                decided.append(replace(record, prediction=score_to_kway(
                    record.verdict.value, args.kway)))
            else:
                decided.append(record)
        records = decided
    kept, excluded = _split_gated(records, "none")
    kept = [r for r in kept if r.prediction is not None]
    report = stratified_report(kept, gold, possibility, excluded=excluded)
    payload = report.to_dict()
    if args.out:
        _write_json(payload, Path(args.out))
    print(json.dumps(payload, indent=2))
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    records = read_records(args.records)
    statements = _load_statements(args.dataset, args.split, args.language)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = _run_calibration(args.mode, records, statements, out_dir,
                               smoothing=args.smoothing)
    if args.mode.startswith("apply:"):
        write_records(records, out_dir / "records_calibrated.jsonl")
    return 0


def cmd_gate(args: argparse.Namespace) -> int:
    records = read_records(args.records)
    mode = {"band": GateMode.SCORE_BAND,
            "softmax-band": GateMode.SOFTMAX_BAND,
            "uncertain": GateMode.UNCERTAIN_VERDICT}[args.mode]
    gated = gate_uncertain(records, mode)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_records(gated.kept, out_dir / "kept.jsonl")
    write_records(gated.excluded, out_dir / "excluded.jsonl")
    summary: dict[str, object] = {
        "mode": args.mode,
        "exclusion_reason": gated.exclusion_reason.value,
        "n_kept": len(gated.kept),
        "n_excluded": len(gated.excluded),
    }
    if args.dataset:
        statements = _load_statements(args.dataset, args.split, args.language)
        possibility = _possibility_map(statements)
        if possibility:
            counts: dict[str, int] = {}
            for record in gated.excluded:
                if record.statement_id not in possibility:
                    raise DataError(f"no possibility label for "
                                    f"{record.statement_id}")
                label = possibility[record.statement_id].value
                counts[label] = counts.get(label, 0) + 1
            summary["excluded_by_possibility"] = dict(sorted(counts.items()))
    _write_json(summary, out_dir / "gate_summary.json")
    print(json.dumps(summary, indent=2))
    return 0


def cmd_study(args: argparse.Namespace) -> int:
    if args.kind == "variation":
        if len(args.records) < 2:
            raise ConfigError("variation study needs at least 2 records files")
        runs = [read_records(path) for path in args.records]
        statements = _load_statements(args.dataset, args.split, args.language)
        gold = _gold_binary(statements)
        report = studies.variation_study(
            runs, gold, rule=ThresholdRule(args.threshold), seed=args.seed)
        payload = report.to_dict()
        if args.out:
            _write_json(payload, Path(args.out))
        print(json.dumps(payload, indent=2))
        return 0
    # errors study
    if not (args.records_a and args.records_b):
        raise ConfigError("errors study needs --records-a and --records-b")
    records_a = read_records(args.records_a)
    records_b = read_records(args.records_b)
    statements = _load_statements(args.dataset, args.split, args.language)
    gold = _gold_binary(statements)

    def _predictions(records: list[PredictionRecord], name: str) -> dict[str, int]:
        preds: dict[str, int] = {}
        for record in records:
            if record.prediction is not None:
                preds[record.statement_id] = record.prediction
        if not preds:
            raise DataError(f"{name} has no records with predictions")
        return preds

    preds_a = _predictions(records_a, "records-a")
    preds_b = _predictions(records_b, "records-b")
    shared = set(preds_a) & set(preds_b)
    partition = studies.error_partition(
        {k: preds_a[k] for k in shared}, {k: preds_b[k] for k in shared}, gold)
    payload: dict[str, object] = {
        "n_compared": len(shared),
        "a_right_b_wrong": len(partition.a_right_b_wrong),
        "b_right_a_wrong": len(partition.b_right_a_wrong),
        "both_right": len(partition.both_right),
        "both_wrong": len(partition.both_wrong),
    }
    if args.distances:
        distances = _read_distances(args.distances)
        group_a = [distances[i][0] for i in partition.a_right_b_wrong
                   if i in distances]
        group_b = [distances[i][0] for i in partition.b_right_a_wrong
                   if i in distances]
        mean_a, mean_b, p_welch = studies.group_distance_test(
            group_a, group_b, studies.TestMethod.WELCH)
        _, _, p_perm = studies.group_distance_test(
            group_a, group_b, studies.TestMethod.PERMUTATION, seed=args.seed)
        payload["distance_mean_a_right_b_wrong"] = mean_a
        payload["distance_mean_b_right_a_wrong"] = mean_b
        payload["p_welch"] = p_welch
        payload["p_permutation"] = p_perm
        if args.out:
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            studies.export_error_analysis(partition, distances,
                                          out_dir / "error_analysis.csv")
            _write_json(payload, out_dir / "errors_summary.json")
    print(json.dumps(payload, indent=2))
    return 0


def _read_distances(path: str) -> dict[str, tuple[float, str]]:
    import csv as _csv
    distances: dict[str, tuple[float, str]] = {}
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = _csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise DataError(f"empty distances file: {path}")
        for row in reader:
            if not row:
                continue
            distances[row[0]] = (float(row[1]),
                                 row[2] if len(row) > 2 else "")
    return distances


def cmd_truncate(args: argparse.Namespace) -> int:
    articles = load_articles(args.articles)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stripped = []
    audits = []
    for statement_id in sorted(articles):
        article = articles[statement_id]
        stripped.append(strip_verdict(article, substring=args.substring))
        audits.append(audit_truncation(article, substring=args.substring))
    write_articles(stripped, out_dir / "articles_answerless.jsonl")
    with (out_dir / "truncation_audit.jsonl").open("w", encoding="utf-8") as handle:
        for audit in audits:
            handle.write(json.dumps({
                "statement_id": audit.statement_id,
                "n_sentences": audit.n_sentences,
                "n_removed": audit.n_removed,
                "divergent": audit.divergent,
            }, separators=(",", ":")) + "\n")
    n_truncated = sum(1 for audit in audits if audit.n_removed)
    n_divergent = sum(1 for audit in audits if audit.divergent)
    print(f"articles={len(audits)} truncated={n_truncated} "
          f"divergent_under_substring={n_divergent}")
    return 0


def cmd_cost(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    ledger = CostLedger(price_table=_price_table(config))
    with Path(args.usage).open(encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            row = json.loads(line)
            ledger.record(row["model_id"], int(row["input_tokens"]),
                          int(row["output_tokens"]))
    payload = {}
    for model_id in ledger.models():
        if args.model and model_id != args.model:
            continue
        in_tok, out_tok = ledger.totals(model_id)
        entry: dict[str, object] = {"input_tokens": in_tok,
                                    "output_tokens": out_tok}
        if model_id in ledger.price_table:
            entry["usd"] = round(ledger.estimate_cost(model_id), 6)
        payload[model_id] = entry
    print(json.dumps(payload, indent=2))
    return 0


def _add_dataset_flags(parser: argparse.ArgumentParser,
                       required: bool = True) -> None:
    parser.add_argument("--dataset", required=required,
                        help="dataset directory (train/valid/test TSVs), a "
                             "single .tsv, or a bilingual .jsonl corpus")
    parser.add_argument("--split", choices=["train", "val", "test"],
                        default="test")
    parser.add_argument("--language", choices=["en", "fr"], default="en",
                        help="language filter for the bilingual corpus")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="verifact",
        description="Batch harness for LLM truthfulness rating experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full pipeline: prompts through metrics")
    _add_dataset_flags(run)
    run.add_argument("--prompt", default="score",
                     help="score | binary | binary-uncertainty-enabled | "
                          "score-then-explain | explain-then-score | "
                          "web-evidence")
    run.add_argument("--model", default="gpt-4-0314")
    run.add_argument("--temperature", type=float, default=DEFAULT_TEMPERATURE)
    run.add_argument("--reps", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--threshold", default=None,
                     help="integer threshold or 'optimize' (fits on the "
                          "validation split); score prompts default to 50")
    run.add_argument("--gate", choices=["none", "band", "uncertain"],
                     default="none")
    run.add_argument("--calibrate", default=None,
                     help="'fit' or 'apply:PATH'")
    run.add_argument("--out", required=True)
    run.add_argument("--provider", choices=["stub", "http"], default="stub")
    run.add_argument("--fixtures", default=None,
                     help="recorded-responses JSONL for the stub provider")
    run.add_argument("--config", default=None)
    run.add_argument("--cache", default=None,
                     help="response cache JSONL path")
    run.add_argument("--articles", default=None,
                     help="article JSONL for web-evidence prompts")
    run.add_argument("--answerless", action="store_true",
                     help="strip verdict sentences from articles")
    run.set_defaults(func=cmd_run)

    evaluate = sub.add_parser("evaluate", help="score a records file")
    evaluate.add_argument("--records", required=True)
    _add_dataset_flags(evaluate)
    evaluate.add_argument("--threshold", default=None)
    evaluate.add_argument("--kway", type=int, choices=[2, 3, 6], default=2)
    evaluate.add_argument("--out", default=None)
    evaluate.set_defaults(func=cmd_evaluate)

    calibrate = sub.add_parser("calibrate", help="fit or apply Platt scaling")
    calibrate.add_argument("--records", required=True)
    _add_dataset_flags(calibrate)
    calibrate.add_argument("--mode", required=True, help="'fit' or 'apply:PATH'")
    calibrate.add_argument("--smoothing", action="store_true",
                           help="use smoothed regression targets")
    calibrate.add_argument("--out", required=True)
    calibrate.set_defaults(func=cmd_calibrate)

    gate = sub.add_parser("gate", help="split records into kept/excluded")
    gate.add_argument("--records", required=True)
    gate.add_argument("--mode", choices=["band", "softmax-band", "uncertain"],
                      required=True)
    _add_dataset_flags(gate, required=False)
    gate.add_argument("--out", required=True)
    gate.set_defaults(func=cmd_gate)

    study = sub.add_parser("study", help="variation or error analyses")
    study.add_argument("--kind", choices=["variation", "errors"],
                       required=True)
    study.add_argument("--records", nargs="*", default=[],
                       help="one records file per repetition (variation)")
    study.add_argument("--records-a", default=None)
    study.add_argument("--records-b", default=None)
    _add_dataset_flags(study)
    study.add_argument("--threshold", type=int, default=50)
    study.add_argument("--seed", type=int, default=0)
    study.add_argument("--distances", default=None,
                       help="CSV id,distance[,nearest_train_id]")
    study.add_argument("--out", default=None)
    study.set_defaults(func=cmd_study)

    truncate = sub.add_parser("truncate", help="strip verdicts from articles")
    truncate.add_argument("--articles", required=True)
    truncate.add_argument("--substring", action="store_true",
                          help="substring keyword matching instead of "
                               "word-bounded")
    truncate.add_argument("--out", required=True)
    truncate.set_defaults(func=cmd_truncate)

    cost = sub.add_parser("cost", help="price a usage log")
    cost.add_argument("--usage", required=True)
    cost.add_argument("--config", default=None)
    cost.add_argument("--model", default=None)
    cost.set_defaults(func=cmd_cost)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
