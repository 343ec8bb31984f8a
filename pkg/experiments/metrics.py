# Copyright (c) mm-opinion-miner contributors
"""
Chunk-level scoring with conlleval semantics and sentiment classification
scores for the four settings.
"""
from collections import Counter
from dataclasses import asdict, dataclass, field

from absa.errors import ValidationError
from absa.labels import (
    AeTag, Chunk, Scheme, SentimentClass, Tag, TagSequence, decouple,
    extract_chunks, repair, sentence_sentiment, to_ae
)

from typing import Any, Dict, List, Optional, Sequence, Tuple

__all__ = [
    "Score",
    "ChunkCounts",
    "ChunkReport",
    "SentimentReport",
    "MetricsReport",
    "count_chunks",
    "evaluate_chunks",
    "evaluate_sentiment",
    "classification_report",
    "conlleval_summary",
    "predicted_sentence_sentiment",
    "build_report",
]

UNTYPED = ""


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    f1: float
    support: int = 0

    @classmethod
    def of(cls, correct: int, predicted: int, gold: int) -> "Score":
        """Precision over predicted items, recall over gold items."""
        p = correct / predicted if predicted else 0.0
        r = correct / gold if gold else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f, gold)


@dataclass
class ChunkCounts:
    """The tallies conlleval keeps."""
    correct: int = 0
    gold: int = 0
    predicted: int = 0
    tokens: int = 0
    correct_tags: int = 0
    per_type: Dict[str, List[int]] = field(default_factory=dict)

    def add_type(self, kind: str, correct: int, gold: int,
                 predicted: int) -> None:
        counts = self.per_type.setdefault(kind, [0, 0, 0])
        counts[0] += correct
        counts[1] += gold
        counts[2] += predicted

    @property
    def accuracy(self) -> float:
        return self.correct_tags / self.tokens if self.tokens else 0.0


@dataclass(frozen=True)
class ChunkReport:
    overall: Score
    per_type: Dict[str, Score]
    counts: ChunkCounts

    @property
    def f1(self) -> float:
        return self.overall.f1


def _chunk_key(chunk: Chunk, typed: bool) -> Tuple[int, int, str]:
    kind = chunk.sentiment.short if typed and chunk.sentiment else UNTYPED
    return (chunk.start, chunk.end, kind)


def count_chunks(gold: Sequence[TagSequence], pred: Sequence[TagSequence],
                 *, typed: bool = True) -> ChunkCounts:
    """
    Exact-span chunk matching. With `typed`, a collapsed chunk must also
    carry the gold sentiment. Predictions get the lenient IOB repair.
    """
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences but {len(pred)} "
                         "predictions")
    counts = ChunkCounts()
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValidationError(
                f"{len(g)} gold tags but {len(p)} predicted tags", index=i)
        if not typed:
            g, p = to_ae(g), to_ae(p)
        gold_keys = Counter(_chunk_key(c, typed) for c in extract_chunks(g))
        pred_keys = Counter(_chunk_key(c, typed)
                            for c in extract_chunks(repair(p)))
        hits = gold_keys & pred_keys
        counts.correct += sum(hits.values())
        counts.gold += sum(gold_keys.values())
        counts.predicted += sum(pred_keys.values())
        counts.tokens += len(g)
        counts.correct_tags += sum(1 for a, b in zip(g.tags, p.tags) if a == b)
        for kind in set(gold_keys) | set(pred_keys):
            counts.add_type(kind[2], hits[kind], gold_keys[kind],
                            pred_keys[kind])
    return counts


def evaluate_chunks(gold: Sequence[TagSequence], pred: Sequence[TagSequence],
                    *, typed: bool = False) -> ChunkReport:
    """
    Chunk precision, recall and F1. Untyped scoring is the aspect extraction
    score; typed scoring also requires the sentiment of collapsed chunks.
    """
    counts = count_chunks(gold, pred, typed=typed)
    per_type = {
        kind: Score.of(values[0], values[2], values[1])
        for kind, values in sorted(counts.per_type.items())
    }
    overall = Score.of(counts.correct, counts.predicted, counts.gold)
    return ChunkReport(overall, per_type, counts)


def conlleval_summary(counts: ChunkCounts) -> str:
    """The text report printed by the conlleval script."""
    p = 100.0 * counts.correct / counts.predicted if counts.predicted else 0.0
    r = 100.0 * counts.correct / counts.gold if counts.gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    lines = [
        f"processed {counts.tokens} tokens with {counts.gold} phrases; "
        f"found: {counts.predicted} phrases; correct: {counts.correct}."
    ]
    if counts.tokens > 0:
        lines.append(f"accuracy: {100.0 * counts.accuracy:6.2f}%; "
                     f"precision: {p:6.2f}%; recall: {r:6.2f}%; FB1: {f:6.2f}")
    for kind, (correct, gold, predicted) in sorted(counts.per_type.items()):
        if kind == UNTYPED:
            continue
        tp = 100.0 * correct / predicted if predicted else 0.0
        tr = 100.0 * correct / gold if gold else 0.0
        tf = 2 * tp * tr / (tp + tr) if tp + tr > 0 else 0.0
        lines.append(f"{kind:>17}: precision: {tp:6.2f}%; recall: "
                     f"{tr:6.2f}%; FB1: {tf:6.2f}  {predicted}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SentimentReport:
    per_class: Dict[str, Score]
    macro_f1: float
    accuracy: Optional[float] = None


def classification_report(gold: Sequence[SentimentClass],
                          pred: Sequence[SentimentClass],
                          classes: Sequence[SentimentClass]
                          ) -> SentimentReport:
    """
    Per-class precision, recall and F1 for sentence-level labels. Classes
    absent from both gold and predictions are left out of the macro average.
    """
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold labels but {len(pred)} "
                         "predictions")
    known = set(classes)
    for label in (*gold, *pred):
        if label not in known:
            raise ValidationError(f"unknown sentiment class {label}")
    per_class: Dict[str, Score] = {}
    present: List[float] = []
    for c in classes:
        correct = sum(1 for g, p in zip(gold, pred) if g is c and p is c)
        n_gold = sum(1 for g in gold if g is c)
        n_pred = sum(1 for p in pred if p is c)
        per_class[c.value] = Score.of(correct, n_pred, n_gold)
        if n_gold or n_pred:
            present.append(per_class[c.value].f1)
    macro = sum(present) / len(present) if present else 0.0
    accuracy = (sum(1 for g, p in zip(gold, pred) if g is p) / len(gold)
                if gold else 0.0)
    return SentimentReport(per_class, macro, accuracy)


def _chunk_sentiment_report(gold: Sequence[TagSequence],
                            pred: Sequence[TagSequence],
                            classes: Sequence[SentimentClass]
                            ) -> SentimentReport:
    """Aspect-level sentiment: typed chunk scores per sentiment class."""
    decoupled_gold = [_with_chunk_sentiments(g) for g in gold]
    decoupled_pred = [_with_chunk_sentiments(p) for p in pred]
    report = evaluate_chunks(decoupled_gold, decoupled_pred, typed=True)
    per_class: Dict[str, Score] = {}
    present: List[float] = []
    for c in classes:
        correct, n_gold, n_pred = report.counts.per_type.get(c.short, [0, 0, 0])
        per_class[c.value] = Score.of(correct, n_pred, n_gold)
        if n_gold or n_pred:
            present.append(per_class[c.value].f1)
    macro = sum(present) / len(present) if present else 0.0
    return SentimentReport(per_class, macro)


def _with_chunk_sentiments(seq: TagSequence) -> TagSequence:
    """
    Rewrite a collapsed sequence so each chunk carries one sentiment, the
    majority over its tokens.
    """
    ae, chunks = decouple(seq)
    tags = list(ae.tags)
    for chunk in chunks:
        for i in range(chunk.start, chunk.end):
            tags[i] = Tag(tags[i].position, chunk.sentiment)
    if any(t.position is not AeTag.O and t.sentiment is None for t in tags):
        raise ValidationError("aspect chunk without a sentiment")
    return TagSequence(Scheme.COLLAPSED, tuple(tags))


def predicted_sentence_sentiment(tags: TagSequence) -> SentimentClass:
    """Sentence sentiment implied by collapsed tags (majority over chunks)."""
    return sentence_sentiment(decouple(tags)[1])


def evaluate_sentiment(gold: Sequence[Any], pred: Sequence[Any], setting: str,
                       classes: Sequence[SentimentClass]) -> SentimentReport:
    """
    cal scores aspect-level sentiments from collapsed tag sequences; csl and
    jsl score sentence-level classes.
    """
    if setting == "cal":
        return _chunk_sentiment_report(gold, pred, classes)
    if setting in ("csl", "jsl"):
        return classification_report(gold, pred, classes)
    raise ValueError(f"no sentiment scoring in the {setting!r} setting")


@dataclass(frozen=True)
class MetricsReport:
    """Aspect extraction scores plus, where the setting has them, sentiment."""
    ae: Score
    sentiment: Optional[SentimentReport] = None
    loss: Optional[float] = None

    @property
    def ae_f1(self) -> float:
        return self.ae.f1

    def flat(self) -> Dict[str, float]:
        """Scalar metrics keyed by name, for aggregation across runs."""
        out = {
            "ae_precision": self.ae.precision,
            "ae_recall": self.ae.recall,
            "ae_f1": self.ae.f1,
        }
        if self.sentiment is not None:
            out["sc_macro_f1"] = self.sentiment.macro_f1
            if self.sentiment.accuracy is not None:
                out["sc_accuracy"] = self.sentiment.accuracy
            for name, score in self.sentiment.per_class.items():
                out[f"sc_{name}_precision"] = score.precision
                out[f"sc_{name}_recall"] = score.recall
                out[f"sc_{name}_f1"] = score.f1
        return out

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "ae_precision": self.ae.precision,
            "ae_recall": self.ae.recall,
            "ae_f1": self.ae.f1,
            "ae_support": self.ae.support,
        }
        if self.sentiment is not None:
            out["sentiment"] = {
                "per_class": {k: asdict(v)
                              for k, v in self.sentiment.per_class.items()},
                "macro_f1": self.sentiment.macro_f1,
                "accuracy": self.sentiment.accuracy,
            }
        if self.loss is not None:
            out["loss"] = self.loss
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricsReport":
        ae = Score(data["ae_precision"], data["ae_recall"], data["ae_f1"],
                   data.get("ae_support", 0))
        sentiment = None
        if "sentiment" in data:
            s = data["sentiment"]
            sentiment = SentimentReport(
                {k: Score(**v) for k, v in s["per_class"].items()},
                s["macro_f1"], s.get("accuracy"))
        return cls(ae, sentiment, data.get("loss"))


def build_report(gold: Sequence[TagSequence], pred: Sequence[TagSequence],
                 setting: str, classes: Sequence[SentimentClass], *,
                 gold_sentiments: Optional[Sequence[SentimentClass]] = None,
                 pred_sentiments: Optional[Sequence[SentimentClass]] = None
                 ) -> MetricsReport:
    """
    Aspect extraction scores for every setting, plus the setting's sentiment
    scores. Sentence sentiments missing in csl are read off the collapsed
    tags; jsl scores sentence sentiment only when both sides are given.
    """
    ae = evaluate_chunks(gold, pred, typed=False).overall
    sentiment: Optional[SentimentReport] = None
    if setting == "cal":
        sentiment = evaluate_sentiment(gold, pred, setting, classes)
    elif setting in ("csl", "jsl"):
        if setting == "csl":
            if gold_sentiments is None:
                gold_sentiments = [predicted_sentence_sentiment(g) for g in gold]
            if pred_sentiments is None:
                pred_sentiments = [predicted_sentence_sentiment(p) for p in pred]
        if gold_sentiments is not None and pred_sentiments is not None:
            sentiment = evaluate_sentiment(gold_sentiments, pred_sentiments,
                                           setting, classes)
    elif setting != "simple":
        raise ValueError(f"invalid setting {setting!r}")
    return MetricsReport(ae, sentiment)
