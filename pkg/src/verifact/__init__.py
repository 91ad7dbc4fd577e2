"""Batch harness for LLM truthfulness rating experiments.

Loads fact-checking corpora, renders a fixed catalog of prompts, queries
an OpenAI-compatible chat endpoint (or a deterministic offline stub),
parses the replies into verdicts, applies threshold and gating rules,
calibrates scores, and reports stratified metrics. Every run is
manifest-pinned and byte-reproducible offline.
"""

from .calibration import (CalibrationModel, PlattScaler, ReliabilityBin,
                          ReliabilityTable, apply_calibration, ece, platt_fit,
                          reliability_table, write_reliability_csv)
from .corpus import (ESCALATION, AnnotationTriple, BinaryLabel, EscalationFlag,
                     Language, PossibilityLabel, SixWayLabel, Split, Statement,
                     ThreeWayLabel, agreement_kappa, apply_resolutions,
                     binarize, coarsen_6_to_3, load_annotation_triples,
                     load_liar_new, load_liar_tsv, load_resolution_sidecar,
                     resolve_possibility)
from .decisions import (OTHER_CLASS_INDEX, ExclusionReason, GateMode,
                        GatedSet, ThresholdRule, apply_threshold,
                        gate_uncertain, optimize_threshold, score_to_kway)
from .errors import (ConfigError, DataError, FixtureMissError, ParseError,
                     SchemaError, ScoreRangeError, TransportError,
                     VerifactError)
from .evidence import (Article, TruncationAudit, audit_truncation,
                       build_evidence_prompt, load_articles, split_sentences,
                       strip_verdict, write_articles)
from .gateway import (API_KEY_ENV, DEFAULT_TEMPERATURE, ENDPOINT_ENV,
                      REPLICATION_TEMPERATURE, CostLedger,
                      EmbeddingVector, HttpProvider, ModelGateway,
                      ModelRequest, ModelResponse, ResponseCache, StubProvider,
                      estimate_cost)
from .metrics import (Averaging, ConfusionMatrix, MetricsReport, confusion,
                      metrics, per_class_f1, stratified_report,
                      write_summary_csv)
from .parsing import (PredictionRecord, SplitOrder, Verdict, VerdictKind,
                      fill_refusals, parse_binary, parse_score, read_records,
                      split_explained, write_records)
from .prompts import (PromptKind, RenderedPrompt, catalog_hashes,
                      demo_label_to_score, prompt_sha256, render,
                      select_icl_variant, template_sha256, template_text)
from .studies import (ErrorPartition, TestMethod, VariationReport,
                      error_partition, export_error_analysis,
                      group_distance_test, nearest_train_distance,
                      variation_study)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "VerifactError", "ConfigError", "DataError", "SchemaError", "ParseError",
    "ScoreRangeError", "TransportError", "FixtureMissError",
    # corpus
    "SixWayLabel", "ThreeWayLabel", "BinaryLabel", "PossibilityLabel",
    "Language", "Split", "Statement", "AnnotationTriple", "EscalationFlag",
    "ESCALATION", "load_liar_tsv", "load_liar_new", "load_annotation_triples",
    "load_resolution_sidecar", "binarize", "coarsen_6_to_3",
    "resolve_possibility", "apply_resolutions", "agreement_kappa",
    # prompts
    "PromptKind", "RenderedPrompt", "template_text", "template_sha256",
    "catalog_hashes", "prompt_sha256", "render", "select_icl_variant",
    "demo_label_to_score",
    # parsing
    "VerdictKind", "Verdict", "SplitOrder", "PredictionRecord", "parse_score",
    "parse_binary", "split_explained", "fill_refusals", "write_records",
    "read_records",
    # decisions
    "ThresholdRule", "apply_threshold", "optimize_threshold", "score_to_kway",
    "GateMode", "GatedSet", "ExclusionReason", "OTHER_CLASS_INDEX",
    "gate_uncertain",
    # calibration
    "CalibrationModel", "PlattScaler", "platt_fit", "apply_calibration",
    "ReliabilityBin", "ReliabilityTable", "reliability_table", "ece",
    "write_reliability_csv",
    # metrics
    "Averaging", "ConfusionMatrix", "confusion", "per_class_f1", "metrics",
    "MetricsReport", "stratified_report", "write_summary_csv",
    # gateway
    "DEFAULT_TEMPERATURE", "REPLICATION_TEMPERATURE",
    "API_KEY_ENV", "ENDPOINT_ENV", "ModelRequest",
    "ModelResponse", "EmbeddingVector", "CostLedger", "estimate_cost",
    "ResponseCache", "StubProvider", "HttpProvider", "ModelGateway",
    # studies
    "VariationReport", "variation_study", "nearest_train_distance",
    "TestMethod", "group_distance_test", "ErrorPartition", "error_partition",
    "export_error_analysis",
    # evidence
    "Article", "TruncationAudit", "split_sentences", "strip_verdict",
    "audit_truncation", "build_evidence_prompt", "load_articles",
    "write_articles",
]
