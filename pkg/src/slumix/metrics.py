"""Evaluation metrics: intent accuracy, micro entity F1, and SLU-F1.

All comparisons run on normalized labels (whitespace collapsed; scenario,
action and entity types lowercased; fillers case-preserving), mirroring the
codec's normalization so round-tripped predictions do not lose score.

SLU-F1 jointly scores intent and entities: each utterance contributes its
entity spans plus two pseudo-spans carrying the scenario and action values.
Same-type gold/predicted spans are matched by an optimal assignment, with
fractional credit per matched pair given by multiset-overlap F1 of the filler
strings, computed once over word tokens and once over characters. The final
score is the arithmetic mean of the micro word-level F1 and the micro
character-level F1 (the SLURP-toolkit convention).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from scipy.optimize import linear_sum_assignment

from .corpus import SemanticLabel
from .errors import MetricsError

# Exhaustive assignment is used up to this many spans per side; the Hungarian
# solver takes over beyond it. Both produce the maximum credit.
_EXHAUSTIVE_LIMIT = 5


@dataclass(frozen=True)
class PredictionRecord:
    utt_id: str
    gold: SemanticLabel
    pred: SemanticLabel


@dataclass(frozen=True)
class MetricReport:
    intent_accuracy: float
    entity_precision: float
    entity_recall: float
    entity_f1: float
    slu_f1: float
    counts: dict

    def value(self, metric: str) -> float:
        try:
            return getattr(self, metric)
        except AttributeError:
            raise MetricsError(f"unknown metric {metric!r}") from None


METRIC_NAMES = ("intent_accuracy", "entity_precision", "entity_recall",
                "entity_f1", "slu_f1")


def _check_records(records) -> list[PredictionRecord]:
    records = list(records)
    if not records:
        raise MetricsError("empty record list")
    seen = set()
    for r in records:
        if r.utt_id in seen:
            raise MetricsError(f"duplicate utterance id {r.utt_id!r}")
        seen.add(r.utt_id)
    return records


def overlap_f1(gold: Counter, pred: Counter) -> float:
    """Multiset-overlap F1 between two bags of tokens or characters."""
    if not gold and not pred:
        return 1.0
    inter = sum((gold & pred).values())
    if inter == 0:
        return 0.0
    precision = inter / sum(pred.values())
    recall = inter / sum(gold.values())
    return 2 * precision * recall / (precision + recall)


def word_credit(gold_filler: str, pred_filler: str) -> float:
    return overlap_f1(Counter(gold_filler.split()), Counter(pred_filler.split()))


def char_credit(gold_filler: str, pred_filler: str) -> float:
    return overlap_f1(Counter(gold_filler), Counter(pred_filler))


def _f1(precision: float, recall: float) -> float:
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


def _ratio(num: float, denom: float) -> float:
    return num / denom if denom > 0 else 0.0


def _spans(label: SemanticLabel) -> list[tuple[str, str]]:
    """Entity spans plus the scenario/action pseudo-spans."""
    if label.unparseable:
        return []
    spans = [("scenario", label.scenario), ("action", label.action)]
    spans += [(e.etype, e.filler) for e in label.entities]
    return spans


def _max_credit_exhaustive(matrix: list[list[float]]) -> float:
    n_gold = len(matrix)

    def best(g: int, used: int) -> float:
        if g == n_gold:
            return 0.0
        top = best(g + 1, used)  # leave gold g unmatched
        for p, credit in enumerate(matrix[g]):
            if not used & (1 << p):
                top = max(top, credit + best(g + 1, used | (1 << p)))
        return top

    return best(0, 0)


def _max_credit(matrix: list[list[float]]) -> float:
    """Maximum total credit of an injective partial matching."""
    if not matrix or not matrix[0]:
        return 0.0
    if len(matrix) <= _EXHAUSTIVE_LIMIT and len(matrix[0]) <= _EXHAUSTIVE_LIMIT:
        return _max_credit_exhaustive(matrix)
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    return float(sum(matrix[r][c] for r, c in zip(rows, cols)))


def _matched_credit(gold_spans, pred_spans, credit_fn) -> float:
    """Optimal same-type matching credit for one utterance."""
    by_type: dict[str, tuple[list, list]] = {}
    for etype, filler in gold_spans:
        by_type.setdefault(etype, ([], []))[0].append(filler)
    for etype, filler in pred_spans:
        by_type.setdefault(etype, ([], []))[1].append(filler)
    total = 0.0
    for golds, preds in by_type.values():
        if golds and preds:
            total += _max_credit([[credit_fn(g, p) for p in preds] for g in golds])
    return total


def _entity_counts(gold: SemanticLabel, pred: SemanticLabel) -> tuple[int, int, int]:
    """(tp, fp, fn) for exact-match entity scoring on one utterance."""
    gold_bag = Counter((e.etype, e.filler) for e in gold.entities)
    pred_bag = Counter() if pred.unparseable else Counter(
        (e.etype, e.filler) for e in pred.entities)
    tp = sum((gold_bag & pred_bag).values())
    return tp, sum(pred_bag.values()) - tp, sum(gold_bag.values()) - tp


def intent_accuracy(records) -> float:
    """Fraction of utterances whose (scenario, action) pair is exactly right."""
    records = _check_records(records)
    hits = 0
    for r in records:
        gold, pred = r.gold.normalized(), r.pred.normalized()
        if not pred.unparseable and pred.intent == gold.intent:
            hits += 1
    return hits / len(records)


def entity_prf(records) -> tuple[float, float, float]:
    """Micro precision/recall/F1 over exact (type, filler) entity matches."""
    records = _check_records(records)
    tp = fp = fn = 0
    for r in records:
        dtp, dfp, dfn = _entity_counts(r.gold.normalized(), r.pred.normalized())
        tp, fp, fn = tp + dtp, fp + dfp, fn + dfn
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    return precision, recall, _f1(precision, recall)


def _slu_totals(records) -> tuple[float, float, int, int]:
    word_tp = char_tp = 0.0
    n_gold = n_pred = 0
    for r in records:
        gold_spans = _spans(r.gold.normalized())
        pred_spans = _spans(r.pred.normalized())
        n_gold += len(gold_spans)
        n_pred += len(pred_spans)
        word_tp += _matched_credit(gold_spans, pred_spans, word_credit)
        char_tp += _matched_credit(gold_spans, pred_spans, char_credit)
    return word_tp, char_tp, n_gold, n_pred


def _slu_from_totals(word_tp, char_tp, n_gold, n_pred) -> float:
    word_f1 = _f1(_ratio(word_tp, n_pred), _ratio(word_tp, n_gold))
    char_f1 = _f1(_ratio(char_tp, n_pred), _ratio(char_tp, n_gold))
    return (word_f1 + char_f1) / 2


def slu_f1(records) -> float:
    """Mean of micro word-overlap F1 and micro char-overlap F1 over spans."""
    records = _check_records(records)
    return _slu_from_totals(*_slu_totals(records))


def evaluate(records) -> MetricReport:
    """All three metrics in one pass, with the underlying counts."""
    records = _check_records(records)
    tp = fp = fn = 0
    for r in records:
        dtp, dfp, dfn = _entity_counts(r.gold.normalized(), r.pred.normalized())
        tp, fp, fn = tp + dtp, fp + dfp, fn + dfn
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _f1(precision, recall)
    word_tp, char_tp, n_gold, n_pred = _slu_totals(records)
    return MetricReport(
        intent_accuracy=intent_accuracy(records),
        entity_precision=precision,
        entity_recall=recall,
        entity_f1=f1,
        slu_f1=_slu_from_totals(word_tp, char_tp, n_gold, n_pred),
        counts={
            "n_utts": len(records),
            "tp": tp,
            "fp": fp,
            "fn": fn,
            "word_tp_frac": word_tp,
            "char_tp_frac": char_tp,
        },
    )


def report_to_dict(report: MetricReport) -> dict:
    return {
        "intent_accuracy": report.intent_accuracy,
        "entity_precision": report.entity_precision,
        "entity_recall": report.entity_recall,
        "entity_f1": report.entity_f1,
        "slu_f1": report.slu_f1,
        "counts": dict(report.counts),
    }


def report_from_dict(obj: dict) -> MetricReport:
    return MetricReport(
        intent_accuracy=obj["intent_accuracy"],
        entity_precision=obj["entity_precision"],
        entity_recall=obj["entity_recall"],
        entity_f1=obj["entity_f1"],
        slu_f1=obj["slu_f1"],
        counts=dict(obj.get("counts", {})),
    )
