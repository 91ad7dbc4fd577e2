#!/usr/bin/env python3
"""Regenerate the synthetic corpora and recorded-reply fixtures in tests/data.

The test suite replays these fixtures through the full pipeline and
asserts the headline numbers (optimized threshold 71, test accuracy
68.2 / weighted F1 68.1, bilingual binary 81.2 / macro 68.8, exactly
906 abstentions split 306 impossible / 352 hard, calibration error near
0.059, error partitions 241/174 and 182/82, Welch p near 5e-4). This
script solves for response assignments that hit those targets through
the package's own loaders, renderer, parser, and metrics, then freezes
them as JSONL keyed by prompt hash. Rerunning is deterministic.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import numpy as np
from scipy import stats

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from verifact.calibration import apply_calibration, ece, platt_fit  # noqa: E402
from verifact.corpus import (BinaryLabel, Split, binarize, load_liar_new,  # noqa: E402
                             load_liar_tsv)
from verifact.decisions import ThresholdRule, optimize_threshold  # noqa: E402
from verifact.parsing import (PredictionRecord, Verdict, VerdictKind,  # noqa: E402
                              write_records)
from verifact.prompts import PromptKind, prompt_sha256, render  # noqa: E402

DATA = ROOT / "tests" / "data"

# Six-way label counts per split, false-leaning classes first.
LIAR_LABELS = ["pants-fire", "false", "barely-true",
               "half-true", "mostly-true", "true"]
LIAR_VAL_COUNTS = [116, 263, 237, 248, 251, 169]    # 1284, binary 616/668
LIAR_TEST_COUNTS = [92, 249, 212, 265, 241, 208]    # 1267, binary 553/714
LIAR_TRAIN_COUNTS = [10, 10, 10, 10, 10, 10]

# Bilingual corpus: rows are possibility strata, columns six-way labels.
LIAR_NEW_CELLS = {
    "possible":   [150, 450, 127, 100, 67, 33],     # 927
    "hard":       [120, 330, 71, 30, 20, 10],       # 581
    "impossible": [89, 287, 39, 17, 12, 5],         # 449
}

REFUSAL_TEXTS = [
    "I'm sorry, but I cannot verify this statement.",
    "As a language model I do not have access to current information.",
    "I cannot provide a score for this claim.",
    "It is impossible to rate this without more context.",
    "Unable to determine.",
    "The statement cannot be evaluated as given.",
    "N/A",
    "I would rather not speculate on this.",
    "There is not enough information to answer.",
    "Je ne peux pas évaluer cette déclaration.",
    "Score: N/A",
    "unknown",
    "The claim is ambiguous; no score applies.",
    "I must decline to rate this statement.",
    "Cannot comply with this request.",
    "fifty",
    "Score: 72/100",
    "0.50",
    "100%",
    "+",
    "approximately 80",
    "It depends on the interpretation of the claim.",
    "No verdict.",
    "[no response]",
    "-",
]

_TOPICS = ["the state budget", "crime statistics", "a new tax plan",
           "hospital funding", "school enrollment", "the trade deficit",
           "voter registration", "a highway project", "energy prices",
           "unemployment figures", "a census report", "border staffing"]
_VERBS = ["increased", "decreased", "doubled", "stayed flat",
          "was cut", "was approved", "was rejected", "changed"]


def _claim(rng: random.Random, i: int) -> str:
    return (f"Record {i}: {rng.choice(_TOPICS)} {rng.choice(_VERBS)} by "
            f"{rng.randint(2, 95)} percent over {rng.randint(2, 9)} years.")


def _claim_fr(rng: random.Random, i: int) -> str:
    return (f"Enregistrement {i}: le chiffre officiel a varié de "
            f"{rng.randint(2, 95)} pour cent en {rng.randint(2, 9)} ans.")


def _write_tsv(path: Path, prefix: str, counts: list[int],
               shuffle_seed: int) -> None:
    rng = random.Random(shuffle_seed)
    labels = [label for label, n in zip(LIAR_LABELS, counts)
              for _ in range(n)]
    rng.shuffle(labels)
    text_rng = random.Random(shuffle_seed + 1)
    lines = []
    for i, label in enumerate(labels):
        lines.append(f"{prefix}{i:05d}.json\t{label}\t{_claim(text_rng, i)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def make_liar_corpus() -> None:
    out = DATA / "liar"
    out.mkdir(parents=True, exist_ok=True)
    _write_tsv(out / "train.tsv", "30", LIAR_TRAIN_COUNTS, 31)
    _write_tsv(out / "valid.tsv", "10", LIAR_VAL_COUNTS, 11)
    _write_tsv(out / "test.tsv", "20", LIAR_TEST_COUNTS, 21)


def make_liar_new_corpus() -> None:
    out = DATA / "liar_new"
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for stratum, counts in LIAR_NEW_CELLS.items():
        for label, n in zip(LIAR_LABELS, counts):
            rows.extend((stratum, label) for _ in range(n))
    rng = random.Random(13)
    rng.shuffle(rows)
    text_rng = random.Random(14)
    with (out / "liar_new.jsonl").open("w", encoding="utf-8") as handle:
        for i, (stratum, label) in enumerate(rows):
            handle.write(json.dumps({
                "id": f"ln{i:05d}",
                "text_en": _claim(text_rng, i),
                "text_fr": _claim_fr(text_rng, i),
                "label": label,
                "possibility": stratum,
            }, ensure_ascii=False) + "\n")


def _fixture_line(sha: str, run_index: int, text: str,
                  input_tokens: int, output_tokens: int) -> str:
    return json.dumps({"prompt_sha256": sha, "run_index": run_index,
                       "text": text, "input_tokens": input_tokens,
                       "output_tokens": output_tokens},
                      ensure_ascii=False)


def _weighted_f1(tn: int, fp: int, fn: int, tp: int) -> float:
    def f1(tp_, fp_, fn_):
        denom = 2 * tp_ + fp_ + fn_
        return 2 * tp_ / denom if denom else 0.0
    n_false = tn + fp
    n_true = tp + fn
    # false is the positive class of its own F1: predicted-false counts
    f1_false = f1(tn, fn, fp)
    f1_true = f1(tp, fp, fn)
    return (n_false * f1_false + n_true * f1_true) / (n_false + n_true)


def _macro_f1(tn: int, fp: int, fn: int, tp: int) -> float:
    def f1(tp_, fp_, fn_):
        denom = 2 * tp_ + fp_ + fn_
        return 2 * tp_ / denom if denom else 0.0
    return (f1(tn, fn, fp) + f1(tp, fp, fn)) / 2.0


def make_liar_score_fixture() -> dict:
    """Score replies for valid+test splits of the six-way TSV corpus.

    Valid split: engineered so the optimizer lands on threshold 71 after
    the 40 refusals are filled (seed 0). Test split: 12 refusals, then
    band counts solved so accuracy is exactly 864/1267 at threshold 71
    and 822/1267 at threshold 50, with weighted F1 close to 68.1 / 60.9
    and post-calibration ECE near 0.059.
    """
    val = load_liar_tsv(DATA / "liar" / "valid.tsv", split=Split.VAL)
    test = load_liar_tsv(DATA / "liar" / "test.tsv", split=Split.TEST)
    val_gold = [int(binarize(s.label)) for s in val]
    test_gold = [int(binarize(s.label)) for s in test]

    # ---- valid split ----
    val_refusal_idx = set(range(20, 20 + 40 * 30, 30))
    assert len(val_refusal_idx) == 40 and max(val_refusal_idx) < len(val)
    false_nr = [i for i, g in enumerate(val_gold)
                if g == 0 and i not in val_refusal_idx]
    true_nr = [i for i, g in enumerate(val_gold)
               if g == 1 and i not in val_refusal_idx]

    rng = random.Random(41)
    val_scores: dict[int, int] = {}
    # true side: a large block exactly at 71 makes 71 the unique optimum
    t_at71, t_low = 360, 70
    block = list(true_nr)
    rng.shuffle(block)
    for i in block[:t_at71]:
        val_scores[i] = 71
    for i in block[t_at71:t_at71 + t_low]:
        val_scores[i] = rng.randint(5, 45)
    for i in block[t_at71 + t_low:]:
        val_scores[i] = rng.choice([75, 80, 82, 85, 88, 90, 92, 95, 98])
    # false side: a block exactly at 70 penalizes every threshold <= 70
    f_at70, f_high = 190, 40
    block = list(false_nr)
    rng.shuffle(block)
    for i in block[:f_at70]:
        val_scores[i] = 70
    for i in block[f_at70:f_at70 + f_high]:
        val_scores[i] = rng.choice([72, 75, 78, 82, 88])
    for i in block[f_at70 + f_high:]:
        val_scores[i] = rng.choice([0, 2, 5, 8, 10, 12, 15, 18, 20, 25,
                                    28, 30, 32, 35, 38, 40, 42, 45, 48])

    # replicate the pipeline's refusal fill: seed-0 draws in record order
    fill = random.Random(0)
    val_filled: dict[int, int] = {}
    for i in range(len(val)):
        if i in val_refusal_idx:
            val_filled[i] = fill.randint(0, 100)
    all_scores = [val_filled.get(i, val_scores.get(i)) for i in range(len(val))]
    labels = [BinaryLabel(g) for g in val_gold]
    rule = optimize_threshold(all_scores, labels)
    if rule.threshold != 71:
        raise SystemExit(f"valid-split design failed: optimum {rule.threshold}")

    # Platt model the replay will fit on the non-filled valid records
    cal_scores = [float(val_scores[i]) for i in range(len(val))
                  if i not in val_refusal_idx]
    cal_labels = [BinaryLabel(val_gold[i]) for i in range(len(val))
                  if i not in val_refusal_idx]
    model = platt_fit(cal_scores, cal_labels)

    # ---- test split ----
    test_refusal_idx = set(range(50, 50 + 12 * 100, 100))
    assert len(test_refusal_idx) == 12
    fill = random.Random(0)
    test_filled: dict[int, int] = {}
    for i in range(len(test)):
        if i in test_refusal_idx:
            test_filled[i] = fill.randint(0, 100)

    def band(score: int) -> int:
        return 0 if score <= 49 else (1 if score <= 70 else 2)

    known = np.zeros((2, 3), dtype=int)   # [gold][band] from filled refusals
    for i, score in test_filled.items():
        known[test_gold[i]][band(score)] += 1
    false_nr = [i for i, g in enumerate(test_gold)
                if g == 0 and i not in test_refusal_idx]
    true_nr = [i for i, g in enumerate(test_gold)
               if g == 1 and i not in test_refusal_idx]
    n_false_nr, n_true_nr = len(false_nr), len(true_nr)

    target_correct_50 = 822    # 64.877 percent of 1267
    target_correct_71 = 864    # 68.193 percent of 1267
    best = None
    for a0 in range(n_false_nr + 1):
        for a1 in range(n_false_nr - a0 + 1):
            a2 = n_false_nr - a0 - a1
            b2 = target_correct_71 - (known[0][0] + a0 + known[0][1]
                                      + a1 + known[1][2])
            b1 = target_correct_50 - (known[0][0] + a0 + known[1][1]
                                      + known[1][2] + b2)
            if not (0 <= b2 <= n_true_nr and 0 <= b1):
                continue
            b0 = n_true_nr - b1 - b2
            if b0 < 0:
                continue
            # totals including the filled refusals
            A = [known[0][k] + v for k, v in enumerate((a0, a1, a2))]
            B = [known[1][k] + v for k, v in enumerate((b0, b1, b2))]
            wf50 = _weighted_f1(tn=A[0], fp=A[1] + A[2], fn=B[0],
                                tp=B[1] + B[2])
            wf71 = _weighted_f1(tn=A[0] + A[1], fp=A[2], fn=B[0] + B[1],
                                tp=B[2])
            loss = 2.0 * abs(wf71 - 0.681) + abs(wf50 - 0.609)
            if best is None or loss < best[0]:
                best = (loss, a0, a1, a2, b0, b1, b2, wf50, wf71)
    loss, a0, a1, a2, b0, b1, b2, wf50, wf71 = best
    if abs(wf71 - 0.681) > 0.0008:
        raise SystemExit(f"test-split design failed: weighted F1 {wf71:.4f}")

    rng = random.Random(43)
    f_shuffled = list(false_nr)
    t_shuffled = list(true_nr)
    rng.shuffle(f_shuffled)
    rng.shuffle(t_shuffled)
    bands = {0: {"range": (0, 49), "false": f_shuffled[:a0],
                 "true": t_shuffled[:b0]},
             1: {"range": (50, 70), "false": f_shuffled[a0:a0 + a1],
                 "true": t_shuffled[b0:b0 + b1]},
             2: {"range": (71, 100), "false": f_shuffled[a0 + a1:],
                 "true": t_shuffled[b0 + b1:]}}

    def _aware_assignment(cell: dict) -> dict[int, int]:
        """Two anchor scores per band whose class mix tracks the
        calibration curve, so the band contributes almost no ECE."""
        lo, hi = cell["range"]
        n_true, n_false = len(cell["true"]), len(cell["false"])
        n = n_true + n_false
        if n == 0:
            return {}
        rate = n_true / n
        s_lo, s_hi = lo, hi
        p_lo = apply_calibration(model, float(s_lo))
        p_hi = apply_calibration(model, float(s_hi))
        frac = min(1.0, max(0.0, (rate - p_lo) / (p_hi - p_lo)))
        w_hi = int(round(n * frac))
        true_hi = min(n_true, max(0, int(round(
            w_hi * apply_calibration(model, float(s_hi))))))
        false_hi = min(n_false, w_hi - true_hi)
        assign = {}
        for k, member in enumerate(cell["true"]):
            assign[member] = s_hi if k < true_hi else s_lo
        for k, member in enumerate(cell["false"]):
            assign[member] = s_hi if k < false_hi else s_lo
        return assign

    aware: dict[int, int] = {}
    for cell in bands.values():
        aware.update(_aware_assignment(cell))

    # blend with uniform in-band placement; the blend fraction sets ECE.
    # Evaluate in statement order: that is the order the replay sees, and
    # with stable-rank quantile bins the order of tied probabilities
    # decides which bin they land in.
    eligible = [i for i in range(len(test)) if i not in test_refusal_idx]
    eligible_gold = [BinaryLabel(test_gold[i]) for i in eligible]

    def _blended(lam: float, seed: int) -> dict[int, int]:
        mix_rng = np.random.default_rng(seed)
        assign = dict(aware)
        for band_idx, cell in bands.items():
            lo, hi = cell["range"]
            for member in cell["false"] + cell["true"]:
                if mix_rng.random() < lam:
                    assign[member] = int(mix_rng.integers(lo, hi + 1))
        return assign

    best_assign, best_gap = None, None
    for seed in (431, 433, 439, 443, 449):
        for lam in [k / 100.0 for k in range(101)]:
            assign = _blended(lam, seed)
            probs = [apply_calibration(model, float(assign[i]))
                     for i in eligible]
            gap = abs(ece(probs, eligible_gold) - 0.059)
            if best_gap is None or gap < best_gap:
                best_gap, best_assign = gap, assign
        if best_gap < 0.0005:
            break
    if best_gap > 0.004:
        raise SystemExit(f"calibration design failed: ECE gap {best_gap:.4f}")
    test_scores = best_assign

    # ---- write the fixture ----
    out = DATA / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    refusal_cycle = 0
    for i, statement in enumerate(val):
        sha = prompt_sha256(render(PromptKind.SCORE, statement))
        if i in val_refusal_idx:
            text = REFUSAL_TEXTS[refusal_cycle % len(REFUSAL_TEXTS)]
            refusal_cycle += 1
        else:
            text = str(val_scores[i])
        lines.append(_fixture_line(sha, 0, text, 79, 2))
    # test tokens total exactly 100000 in / 3000 out
    for i, statement in enumerate(test):
        sha = prompt_sha256(render(PromptKind.SCORE, statement))
        if i in test_refusal_idx:
            text = REFUSAL_TEXTS[refusal_cycle % len(REFUSAL_TEXTS)]
            refusal_cycle += 1
        else:
            text = str(test_scores[i])
        input_tokens = 78 if i < 93 else 79
        output_tokens = 3 if i < 466 else 2
        lines.append(_fixture_line(sha, 0, text, input_tokens, output_tokens))
    (out / "liar_score.jsonl").write_text("\n".join(lines) + "\n",
                                          encoding="utf-8")

    final_scores = {test[i].id: test_filled.get(i, test_scores.get(i))
                    for i in range(len(test))}
    print(f"liar score fixture: wf71={wf71 * 100:.3f} wf50={wf50 * 100:.3f} "
          f"ece_gap={best_gap:.5f}")
    return {"test_scores": final_scores,
            "test_gold": {test[i].id: test_gold[i] for i in range(len(test))}}


def make_liar_new_fixtures() -> dict:
    """Binary and abstention replies for the bilingual corpus (English)."""
    statements = [s for s in load_liar_new(DATA / "liar_new" / "liar_new.jsonl")
                  if s.language.value == "en"]
    by_stratum: dict[str, dict[int, list]] = {}
    for statement in statements:
        side = int(binarize(statement.label))
        by_stratum.setdefault(statement.possibility.value,
                              {0: [], 1: []})[side].append(statement)

    # binary replay: per-stratum correct counts summing to 1589/1957
    plan = {"possible": {"tp": 130, "tn": 681},
            "hard": {"tp": 33, "tn": 420},
            "impossible": {"tp": 15, "tn": 310}}
    replies: dict[str, str] = {}
    rng = random.Random(17)
    for stratum, sides in by_stratum.items():
        true_side = list(sides[1])
        false_side = list(sides[0])
        rng.shuffle(true_side)
        rng.shuffle(false_side)
        tp, tn = plan[stratum]["tp"], plan[stratum]["tn"]
        for statement in true_side[:tp]:
            replies[statement.id] = "1"
        for statement in true_side[tp:]:
            replies[statement.id] = "0"
        for statement in false_side[:tn]:
            replies[statement.id] = "0"
        for statement in false_side[tn:]:
            replies[statement.id] = "1"

    out = DATA / "fixtures"
    lines = []
    for statement in statements:
        sha = prompt_sha256(render(PromptKind.BINARY, statement))
        lines.append(_fixture_line(sha, 0, replies[statement.id], 75, 1))
    (out / "liar_new_binary.jsonl").write_text("\n".join(lines) + "\n",
                                               encoding="utf-8")

    # abstention replay: 906 "0.5" split 248 possible/352 hard/306 impossible
    abstain_plan = {"possible": 248, "hard": 352, "impossible": 306}
    kept_true_cap = {s: len(by_stratum[s][1]) for s in abstain_plan}

    # search kept composition for accuracy 92.3 / macro F1 76.8 on 1051 kept
    n_kept = 1957 - 906
    best = None
    for correct in (969, 970, 971):
        for g_true in range(40, 260):
            for tp in range(10, g_true + 1):
                fn = g_true - tp
                g_false = n_kept - g_true
                tn = correct - tp
                fp = g_false - tn
                if tn < 0 or fp < 0:
                    continue
                acc = correct / n_kept
                macro = _macro_f1(tn, fp, fn, tp)
                loss = (abs(acc * 100 - 92.3) + abs(macro * 100 - 76.8))
                if best is None or loss < best[0]:
                    best = (loss, correct, g_true, tp)
    loss, correct, g_true, tp = best
    fn = g_true - tp
    tn = correct - tp
    fp = (n_kept - g_true) - tn
    if loss > 0.25:
        raise SystemExit(f"abstention design failed: loss {loss:.3f}")

    # distribute the kept true side across strata within availability
    kept_true = {"possible": min(kept_true_cap["possible"],
                                 int(round(g_true * 0.75))),
                 "hard": min(kept_true_cap["hard"], int(round(g_true * 0.19)))}
    kept_true["impossible"] = g_true - sum(kept_true.values())
    if not 0 <= kept_true["impossible"] <= kept_true_cap["impossible"]:
        raise SystemExit("abstention design failed: stratum caps")

    def _spread(total: int, caps: dict[str, int]) -> dict[str, int]:
        shares = {}
        remaining = total
        names = list(caps)
        for name in names[:-1]:
            shares[name] = min(caps[name],
                               int(round(total * caps[name] / sum(caps.values()))))
            remaining -= shares[name]
        shares[names[-1]] = remaining
        if not 0 <= shares[names[-1]] <= caps[names[-1]]:
            raise SystemExit("abstention design failed: spread")
        return shares

    tp_share = _spread(tp, {s: kept_true[s] for s in abstain_plan})
    fp_caps = {s: len(by_stratum[s][0])
               - (abstain_plan[s] - (len(by_stratum[s][1]) - kept_true[s]))
               for s in abstain_plan}
    fp_share = _spread(fp, fp_caps)

    rng = random.Random(19)
    lines = []
    ue_replies: dict[str, str] = {}
    for stratum in abstain_plan:
        true_side = list(by_stratum[stratum][1])
        false_side = list(by_stratum[stratum][0])
        rng.shuffle(true_side)
        rng.shuffle(false_side)
        n_abstain_true = len(true_side) - kept_true[stratum]
        for statement in true_side[:n_abstain_true]:
            ue_replies[statement.id] = "0.5"
        kept_t = true_side[n_abstain_true:]
        for statement in kept_t[:tp_share[stratum]]:
            ue_replies[statement.id] = "1"
        for statement in kept_t[tp_share[stratum]:]:
            ue_replies[statement.id] = "0"
        n_abstain_false = abstain_plan[stratum] - n_abstain_true
        for statement in false_side[:n_abstain_false]:
            ue_replies[statement.id] = "0.5"
        kept_f = false_side[n_abstain_false:]
        for statement in kept_f[:fp_share[stratum]]:
            ue_replies[statement.id] = "1"
        for statement in kept_f[fp_share[stratum]:]:
            ue_replies[statement.id] = "0"
    for statement in statements:
        sha = prompt_sha256(render(PromptKind.BINARY_UNCERTAINTY_ENABLED,
                                   statement))
        lines.append(_fixture_line(sha, 0, ue_replies[statement.id], 110, 1))
    (out / "liar_new_ue.jsonl").write_text("\n".join(lines) + "\n",
                                           encoding="utf-8")
    n_abstain = sum(1 for t in ue_replies.values() if t == "0.5")
    print(f"liar_new fixtures: binary correct 1589, abstain {n_abstain}, "
          f"kept acc {correct / n_kept * 100:.3f} "
          f"macro {_macro_f1(tn, fp, fn, tp) * 100:.3f}")
    return {"binary_replies": replies,
            "possible_ids": [s.id for s in by_stratum["possible"][0]
                             + by_stratum["possible"][1]],
            "gold": {s.id: int(binarize(s.label)) for s in statements}}


def _partner_records(preds: dict[str, int], model_id: str,
                     path: Path) -> None:
    records = []
    for statement_id in sorted(preds):
        value = preds[statement_id]
        records.append(PredictionRecord(
            statement_id=statement_id, prompt_kind=PromptKind.BINARY,
            model_id=model_id, run_index=0, raw_text=str(value),
            verdict=Verdict.binary(value), prediction=value))
    write_records(records, path)


def make_partner_fixtures(liar_info: dict, liar_new_info: dict) -> dict:
    """Reference-classifier records hitting the error-partition targets."""
    out = DATA / "fixtures"
    scores = liar_info["test_scores"]
    gold = liar_info["test_gold"]
    gpt_correct = sorted(i for i in scores
                         if int(scores[i] >= 50) == gold[i])
    gpt_wrong = sorted(i for i in scores if i not in set(gpt_correct))
    assert len(gpt_correct) == 822, len(gpt_correct)
    rng = random.Random(47)
    a_right_b_wrong = set(rng.sample(gpt_correct, 241))
    b_right_a_wrong = set(rng.sample(gpt_wrong, 174))
    partner = {}
    for statement_id in scores:
        correct = (statement_id in gpt_correct and
                   statement_id not in a_right_b_wrong) or \
                  (statement_id in b_right_a_wrong)
        partner[statement_id] = gold[statement_id] if correct \
            else 1 - gold[statement_id]
    _partner_records(partner, "reference-classifier",
                     out / "roberta_liar.jsonl")

    # bilingual corpus, possible stratum only: 182 / 82
    replies = liar_new_info["binary_replies"]
    gold_new = liar_new_info["gold"]
    possible = set(liar_new_info["possible_ids"])
    new_correct = sorted(i for i in possible
                         if int(replies[i]) == gold_new[i])
    new_wrong = sorted(i for i in possible if i not in set(new_correct))
    assert len(new_correct) == 811, len(new_correct)
    rng = random.Random(53)
    a_rbw = set(rng.sample(new_correct, 182))
    b_raw = set(rng.sample(new_wrong, 82))
    partner_new = {}
    for statement_id in sorted(gold_new):
        if statement_id in possible:
            correct = (statement_id in new_correct
                       and statement_id not in a_rbw) or statement_id in b_raw
        else:
            correct = True
        partner_new[statement_id] = gold_new[statement_id] if correct \
            else 1 - gold_new[statement_id]
    _partner_records(partner_new, "reference-classifier",
                     out / "roberta_liar_new.jsonl")
    return {"a_right_b_wrong": sorted(a_right_b_wrong),
            "b_right_a_wrong": sorted(b_right_a_wrong)}


def make_distance_fixture(liar_info: dict, partition: dict) -> None:
    """Distances whose partition-cell means are 0.127 / 0.116 with Welch
    p close to 5e-4."""
    out = DATA / "fixtures"
    scores = liar_info["test_scores"]
    cell_a = partition["a_right_b_wrong"]
    cell_b = partition["b_right_a_wrong"]
    rng = np.random.default_rng(59)
    base = {i: float(x) for i, x in
            zip(sorted(scores), np.clip(rng.normal(0.12, 0.03, len(scores)),
                                        0.005, 0.9))}

    def _sample(ids, mean, spread):
        values = rng.normal(mean, spread, len(ids))
        values += mean - values.mean()
        return {i: float(v) for i, v in zip(ids, values)}

    lo, hi = 0.5, 4.0
    for _ in range(60):
        scale = (lo + hi) / 2.0
        rng = np.random.default_rng(59)
        dist_a = _sample(cell_a, 0.127, 0.02 * scale)
        dist_b = _sample(cell_b, 0.116, 0.02 * scale)
        p = float(stats.ttest_ind(list(dist_a.values()),
                                  list(dist_b.values()),
                                  equal_var=False).pvalue)
        if abs(p - 5e-4) < 2e-5:
            break
        if p < 5e-4:
            lo = scale
        else:
            hi = scale
    if not 3e-4 < p < 7e-4:
        raise SystemExit(f"distance design failed: p {p:.6f}")

    train = load_liar_tsv(DATA / "liar" / "train.tsv", split=Split.TRAIN)
    train_ids = [s.id for s in train]
    values = dict(base)
    values.update(dist_a)
    values.update(dist_b)
    lines = ["id,distance,nearest_train_id"]
    for i, statement_id in enumerate(sorted(values)):
        lines.append(f"{statement_id},{values[statement_id]:.6f},"
                     f"{train_ids[i % len(train_ids)]}")
    (out / "distances_liar.csv").write_text("\n".join(lines) + "\n",
                                            encoding="utf-8")
    print(f"distance fixture: welch p={p:.6f}")


def make_annotation_fixtures() -> None:
    out = DATA / "annotation"
    out.mkdir(parents=True, exist_ok=True)
    # two-annotator table: 72 PP, 59 PI, 13 IP, 56 II -> kappa 0.312
    pairs = ([("possible", "possible")] * 72 + [("possible", "impossible")] * 59
             + [("impossible", "possible")] * 13
             + [("impossible", "impossible")] * 56)
    random.Random(23).shuffle(pairs)
    lines = ["id,annotator_a,annotator_b"]
    lines += [f"v{i:03d},{a},{b}" for i, (a, b) in enumerate(pairs)]
    (out / "votes.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    triples = [
        ("t00", "possible", "possible", "possible"),
        ("t01", "hard", "hard", "hard"),
        ("t02", "impossible", "impossible", "impossible"),
        ("t03", "possible", "possible", "hard"),
        ("t04", "hard", "hard", "impossible"),
        ("t05", "possible", "hard", "hard"),
        ("t06", "impossible", "impossible", "hard"),
        ("t07", "possible", "impossible", "hard"),     # escalation
        ("t08", "possible", "possible", "impossible"),  # escalation
        ("t09", "impossible", "impossible", "possible"),  # escalation
        ("t10", "p", "i", "i"),                          # escalation
        ("t11", "h", "h", "p"),
    ]
    lines = [json.dumps({"id": i, "raw_votes": [a, b, c]})
             for i, a, b, c in triples]
    (out / "triples.jsonl").write_text("\n".join(lines) + "\n",
                                       encoding="utf-8")
    sidecar = ["statement_id,label", "t07,hard", "t08,possible",
               "t09,impossible", "t10,impossible"]
    (out / "sidecar.csv").write_text("\n".join(sidecar) + "\n",
                                     encoding="utf-8")


_PREFIX_SENTENCES = [
    "The claim spread quickly on social media last week.",
    "Local officials released figures covering the previous decade.",
    "Reporters contacted the agency for comment on the numbers.",
    "Archived budget documents tell a more complicated story.",
    "Several experts noted the data excludes seasonal workers.",
    "A spokesperson pointed to a quarterly report from March.",
    "The video clip omits the first half of the exchange.",
    "Economists we consulted offered differing interpretations.",
    "The figure comes from a survey with a small sample size.",
    "State records show the program began two years earlier.",
]

_PREFIX_WITH_SUBSTRING = [
    "Critics say the ad falsely frames the senator's vote.",
    "The mailer was distributed by a group the senator trusted.",
    "Witnesses described the scene truthfully in their filings.",
]

_VERDICT_SENTENCES = [
    "Our ruling: this claim is false.",
    "We rate this statement True.",
    "Verdict: Pants on Fire!",
    "PolitiFact rates it mostly false.",
    "So the claim is true.",
    "We therefore rule the statement false.",
    "That makes the claim half true.",
    "In the end this one earns a rating of barely true.",
    "The evidence shows the statement is false.",
    "Rating: pants on fire.",
]

_TRAILING_SENTENCES = [
    "Editor's note: this article was updated after publication.",
    "Sources are listed at the end of the page.",
    "Read more fact-checks at our website.",
]


def make_article_fixtures() -> None:
    out = DATA / "articles"
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(29)
    article_lines = []
    expected_lines = []
    for i in range(25):
        n_prefix = rng.randint(2, 5)
        prefix = [rng.choice(_PREFIX_SENTENCES) for _ in range(n_prefix)]
        if i % 8 == 3:
            prefix.insert(rng.randrange(len(prefix)),
                          rng.choice(_PREFIX_WITH_SUBSTRING))
        verdict = _VERDICT_SENTENCES[i % len(_VERDICT_SENTENCES)]
        n_trailing = rng.randint(0, 2)
        trailing = [rng.choice(_TRAILING_SENTENCES) for _ in range(n_trailing)]
        prefix_text = " ".join(prefix)
        text = " ".join(prefix + [verdict] + trailing)
        statement_id = f"art{i:03d}"
        article_lines.append(json.dumps({
            "statement_id": statement_id, "text": text,
            "source_url": f"https://example.org/fact/{i:03d}"},
            ensure_ascii=False))
        # the separator space before the verdict sentence goes with it
        expected_lines.append(json.dumps({
            "statement_id": statement_id, "text": prefix_text},
            ensure_ascii=False))
    (out / "planted.jsonl").write_text("\n".join(article_lines) + "\n",
                                       encoding="utf-8")
    (out / "planted_expected.jsonl").write_text(
        "\n".join(expected_lines) + "\n", encoding="utf-8")


def make_tiny_fixtures() -> None:
    """A six-statement corpus with score, repetition, abstention, and
    evidence replies for fast end-to-end CLI tests."""
    out_dir = DATA / "tiny"
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [
        ("t0001.json", "false", "The bridge toll was abolished in 2019."),
        ("t0002.json", "true", "Enrollment grew for six straight years."),
        ("t0003.json", "half-true", "The city cut its fleet budget in half."),
        ("t0004.json", "pants-fire", "The census counted nine million ghosts."),
        ("t0005.json", "mostly-true", "Exports doubled over the last decade."),
        ("t0006.json", "barely-true", "The levy funds only administrative pay."),
    ]
    tsv = "\n".join("\t".join(row) for row in rows) + "\n"
    for name in ("train.tsv", "valid.tsv", "test.tsv"):
        (out_dir / name).write_text(tsv, encoding="utf-8")

    articles = []
    for statement_id, _, _ in rows:
        articles.append(json.dumps({
            "statement_id": statement_id,
            "text": ("Investigators reviewed the ledger entries. "
                     "The totals match the audited filings. "
                     "We rate this claim false."),
            "source_url": f"https://example.org/{statement_id}"},
            ensure_ascii=False))
    (out_dir / "articles.jsonl").write_text("\n".join(articles) + "\n",
                                            encoding="utf-8")

    statements = load_liar_tsv(out_dir / "test.tsv", split=Split.TEST)
    fixtures = DATA / "fixtures"
    score_by_run = {
        0: ["10", "80", "51", "I cannot rate this.", "90", "49"],
        1: ["12", "85", "50", "5", "88", "49"],
        2: ["10", "95", "55", "0.5", "90", "45"],
    }
    lines = []
    for run_index, texts in score_by_run.items():
        for statement, text in zip(statements, texts):
            sha = prompt_sha256(render(PromptKind.SCORE, statement))
            lines.append(_fixture_line(sha, run_index, text, 40, 2))
    (fixtures / "tiny_score.jsonl").write_text("\n".join(lines) + "\n",
                                               encoding="utf-8")

    ue_texts = ["0", "1", "0.5", "0", "1", "No idea."]
    lines = []
    for statement, text in zip(statements, ue_texts):
        sha = prompt_sha256(render(PromptKind.BINARY_UNCERTAINTY_ENABLED,
                                   statement))
        lines.append(_fixture_line(sha, 0, text, 60, 1))
    (fixtures / "tiny_binary_ue.jsonl").write_text("\n".join(lines) + "\n",
                                                   encoding="utf-8")

    from verifact.evidence import build_evidence_prompt, load_articles
    article_map = load_articles(out_dir / "articles.jsonl")
    web_texts = ["5", "75", "60", "2", "80", "35"]
    lines = []
    for answerless in (False, True):
        for statement, text in zip(statements, web_texts):
            prompt = build_evidence_prompt(statement,
                                           article_map[statement.id],
                                           answerless=answerless)
            lines.append(_fixture_line(prompt_sha256(prompt), 0, text, 90, 2))
    (fixtures / "tiny_web.jsonl").write_text("\n".join(lines) + "\n",
                                             encoding="utf-8")


def make_refusal_bank() -> None:
    (DATA / "refusal_texts.txt").write_text(
        "\n".join(REFUSAL_TEXTS) + "\n", encoding="utf-8")


def verify_replays() -> None:
    """Run the shipped fixtures through the real CLI and check targets."""
    import shutil
    import tempfile

    from verifact import cli

    tmp = Path(tempfile.mkdtemp(prefix="fixture-verify-"))
    try:
        out = tmp / "optimized"
        code = cli.main([
            "run", "--dataset", str(DATA / "liar"), "--split", "test",
            "--prompt", "score", "--threshold", "optimize", "--seed", "0",
            "--provider", "stub",
            "--fixtures", str(DATA / "fixtures" / "liar_score.jsonl"),
            "--out", str(out)])
        assert code == 0, code
        manifest = json.loads((out / "manifest.json").read_text())
        metrics = json.loads((out / "metrics.json").read_text())
        assert manifest["optimized_threshold"] == 71, manifest
        acc = metrics["accuracy"] * 100
        wf1 = metrics["weighted_f1"] * 100
        assert abs(acc - 68.2) <= 0.1, acc
        assert abs(wf1 - 68.1) <= 0.1, wf1
        print(f"replay optimized: t=71 acc={acc:.3f} wf1={wf1:.3f}")

        out50 = tmp / "zero_shot"
        code = cli.main([
            "run", "--dataset", str(DATA / "liar"), "--split", "test",
            "--prompt", "score", "--threshold", "50", "--seed", "0",
            "--provider", "stub",
            "--fixtures", str(DATA / "fixtures" / "liar_score.jsonl"),
            "--out", str(out50)])
        assert code == 0
        metrics = json.loads((out50 / "metrics.json").read_text())
        cost = json.loads((out50 / "cost.json").read_text())
        acc = metrics["accuracy"] * 100
        wf1 = metrics["weighted_f1"] * 100
        usd = cost["models"]["gpt-4-0314"]["usd"]
        assert abs(acc - 64.9) <= 0.15, acc
        assert abs(wf1 - 60.9) <= 0.25, wf1
        assert abs(usd - 3.18) < 1e-9, usd
        print(f"replay zero-shot: acc={acc:.3f} wf1={wf1:.3f} usd={usd}")

        val_out = tmp / "val"
        code = cli.main([
            "run", "--dataset", str(DATA / "liar"), "--split", "val",
            "--prompt", "score", "--threshold", "50", "--seed", "0",
            "--provider", "stub",
            "--fixtures", str(DATA / "fixtures" / "liar_score.jsonl"),
            "--out", str(val_out)])
        assert code == 0
        cal_out = tmp / "cal"
        code = cli.main([
            "calibrate", "--records", str(val_out / "records.jsonl"),
            "--dataset", str(DATA / "liar"), "--split", "val",
            "--mode", "fit", "--out", str(cal_out)])
        assert code == 0
        apply_out = tmp / "applied"
        code = cli.main([
            "calibrate", "--records", str(out50 / "records.jsonl"),
            "--dataset", str(DATA / "liar"), "--split", "test",
            "--mode", f"apply:{cal_out / 'calibration.json'}",
            "--out", str(apply_out)])
        assert code == 0
        reliability = (apply_out / "reliability.csv").read_text().splitlines()
        gap = 0.0
        total = 0
        for line in reliability[1:]:
            _, _, count, conf, acc_bin = line.split(",")
            gap += int(count) * abs(float(conf) - float(acc_bin))
            total += int(count)
        replay_ece = gap / total
        assert abs(replay_ece - 0.059) <= 0.005, replay_ece
        print(f"replay calibration: ece={replay_ece:.4f}")

        out_binary = tmp / "binary"
        code = cli.main([
            "run", "--dataset", str(DATA / "liar_new" / "liar_new.jsonl"),
            "--prompt", "binary", "--seed", "0", "--provider", "stub",
            "--fixtures", str(DATA / "fixtures" / "liar_new_binary.jsonl"),
            "--out", str(out_binary)])
        assert code == 0
        metrics = json.loads((out_binary / "metrics.json").read_text())
        acc = metrics["accuracy"] * 100
        mf1 = metrics["macro_f1"] * 100
        assert abs(acc - 81.2) <= 0.1, acc
        assert abs(mf1 - 68.8) <= 0.1, mf1
        print(f"replay bilingual binary: acc={acc:.3f} macro={mf1:.3f}")

        out_ue = tmp / "ue"
        code = cli.main([
            "run", "--dataset", str(DATA / "liar_new" / "liar_new.jsonl"),
            "--prompt", "binary-uncertainty-enabled", "--gate", "uncertain",
            "--seed", "0", "--provider", "stub",
            "--fixtures", str(DATA / "fixtures" / "liar_new_ue.jsonl"),
            "--out", str(out_ue)])
        assert code == 0
        metrics = json.loads((out_ue / "metrics.json").read_text())
        assert metrics["n_excluded"] == 906, metrics["n_excluded"]
        strata = metrics["strata"]
        assert strata["impossible"]["n_excluded"] == 306
        assert strata["hard"]["n_excluded"] == 352
        acc = metrics["accuracy"] * 100
        mf1 = metrics["macro_f1"] * 100
        print(f"replay abstention: excluded 906 (306/352) "
              f"acc={acc:.3f} macro={mf1:.3f}")
        assert abs(acc - 92.3) <= 0.15, acc
        assert abs(mf1 - 76.8) <= 0.2, mf1
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def main() -> None:
    make_liar_corpus()
    make_liar_new_corpus()
    liar_info = make_liar_score_fixture()
    liar_new_info = make_liar_new_fixtures()
    partition = make_partner_fixtures(liar_info, liar_new_info)
    make_distance_fixture(liar_info, partition)
    make_annotation_fixtures()
    make_article_fixtures()
    make_tiny_fixtures()
    make_refusal_bank()
    verify_replays()
    print("all fixtures written")


if __name__ == "__main__":
    main()
