# Copyright (c) mm-opinion-miner contributors
import argparse
import json
import logging
import os
import time
from dataclasses import asdict

import fsspec

from absa.errors import ConfigError, ValidationError
from absa.ingest import Sentence, implied_sentiment, load_dataset
from absa.labels import Scheme, SentimentClass, TagSequence, as_collapsed
from experiments.conll import (
    ScoredSentence, read_predictions, write_predictions
)
from experiments.manifest import MANIFEST_FILE, RunManifest, hash_inputs
from experiments.metrics import (
    build_report, conlleval_summary, evaluate_chunks
)
from model.network import SETTINGS

from . import constants as c
from .base import BaseCommand, snapshot
from .util import comma_list, flags, metrics_table, require

from typing import Any, Dict, List, Optional, Sequence, Tuple

__all__ = ["EvalCommand"]


def _sentiments(sentences: Sequence[Sentence]
                ) -> Optional[List[SentimentClass]]:
    found = [implied_sentiment(s) for s in sentences]
    if any(f is None for f in found):
        return None
    return [f for f in found if f is not None]


def match_predictions(gold: Sequence[Sentence], pred: Sequence[Sentence]
                      ) -> List[Tuple[Sentence, Sentence]]:
    """Pair gold and predicted sentences by id, in gold order."""
    by_id = {s.id: s for s in pred}
    pairs = []
    for g in gold:
        if g.gold is None:
            raise ValidationError("gold sentence has no tags",
                                  sentence_id=g.id)
        p = by_id.get(g.id)
        if p is None or p.gold is None:
            raise ValidationError("no predicted tags", sentence_id=g.id)
        if len(p) != len(g):
            raise ValidationError(f"{len(g)} gold tokens but {len(p)} "
                                  "predicted", sentence_id=g.id)
        pairs.append((g, p))
    extra = len(set(by_id) - {g.id for g in gold})
    if extra:
        logging.warning(f"ignoring {extra:,} predictions without gold")
    return pairs


class EvalCommand(BaseCommand):
    """
    Score predicted tags against gold, conlleval style. Input is either a
    gold and a predictions dataset (sentences matched by id) or a
    "TOKEN GOLD PRED" file.
    """
    name = "eval"
    help = "Score predictions against gold annotations."

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            *flags(c.GOLD),
            dest=c.GOLD,
            type=str,
            help="Gold sentences (JSONL or CoNLL).",
        )
        parser.add_argument(
            *flags(c.PREDICTIONS),
            dest=c.PREDICTIONS,
            type=str,
            help="Predicted sentences with the same ids (JSONL or CoNLL).",
        )
        parser.add_argument(
            *flags(c.CONLL),
            dest=c.CONLL,
            type=str,
            help="A 'TOKEN GOLD PRED' file instead of --gold/--predictions.",
        )
        parser.add_argument(
            *flags(c.SETTING),
            dest=c.SETTING,
            choices=SETTINGS,
            default="simple",
            help="Setting whose sentiment scores to report.",
        )
        parser.add_argument(
            *flags(c.SENTIMENTS),
            dest=c.SENTIMENTS,
            type=comma_list,
            default=["positive", "negative", "neutral"],
            help="Comma-separated sentiment classes.",
        )
        parser.add_argument(
            *flags(c.OUT),
            dest=c.OUT,
            type=str,
            help="Output directory for metrics.json and predictions.conll.",
        )

    def run(self, args: Dict[str, Any]) -> int:
        require(args, c.OUT)
        start = time.time()
        try:
            classes = [SentimentClass.parse(s) for s in args[c.SENTIMENTS]]
        except ValueError as e:
            raise ConfigError(str(e)) from None
        setting = args[c.SETTING]

        # 1. Read gold and predictions.
        gold_sentiments = pred_sentiments = None
        if args.get(c.CONLL):
            if args.get(c.GOLD) or args.get(c.PREDICTIONS):
                raise ConfigError("pass either --conll or --gold with "
                                  "--predictions, not both")
            inputs = [args[c.CONLL]]
            rows = read_predictions(args[c.CONLL])
        elif args.get(c.GOLD) and args.get(c.PREDICTIONS):
            inputs = [args[c.GOLD], args[c.PREDICTIONS]]
            pairs = match_predictions(
                load_dataset(args[c.GOLD]),
                load_dataset(args[c.PREDICTIONS], strict=False))
            rows = []
            for g, p in pairs:
                assert g.gold is not None and p.gold is not None
                rows.append(ScoredSentence(g.tokens, g.gold, p.gold))
            if setting in ("csl", "jsl"):
                gold_sentiments = _sentiments([g for g, _ in pairs])
                pred_sentiments = _sentiments([p for _, p in pairs])
        else:
            raise ConfigError("pass --gold and --predictions, or --conll")

        gold: List[TagSequence] = [r.gold for r in rows]
        pred: List[TagSequence] = [r.pred for r in rows]
        converted = [as_collapsed(g) for g in gold]
        collapsed = (any(g.scheme is Scheme.COLLAPSED for g in gold)
                     and all(g is not None for g in converted))
        if collapsed:
            gold = [g for g in converted if g is not None]
        if setting in ("cal", "csl") and not collapsed:
            raise ConfigError(f"the {setting} setting scores collapsed tags; "
                              "the gold tags carry no sentiment")

        # 2. Score.
        report = build_report(gold, pred, setting, classes,
                              gold_sentiments=gold_sentiments,
                              pred_sentiments=pred_sentiments)
        chunks = evaluate_chunks(gold, pred, typed=collapsed)

        # 3. Write outputs.
        out = args[c.OUT]
        fs, _, _ = fsspec.get_fs_token_paths(out)
        fs.makedirs(out, exist_ok=True)
        outputs = {
            "metrics": os.path.join(out, "metrics.json"),
            "predictions": os.path.join(out, "predictions.conll"),
        }
        metrics = report.to_dict()
        metrics["per_type"] = {k or "chunk": asdict(v)
                               for k, v in chunks.per_type.items()}
        with fsspec.open(outputs["metrics"], "wt", encoding="utf-8") as f:
            json.dump(metrics, f, indent=2, sort_keys=True)
            f.write("\n")
        write_predictions(rows, outputs["predictions"])
        manifest = RunManifest(self.name, snapshot(args), hash_inputs(inputs),
                               outputs)
        manifest.finish()
        manifest.write(os.path.join(out, MANIFEST_FILE))

        print(conlleval_summary(chunks.counts), end="")
        print(metrics_table({setting: report.flat()}))
        logging.info(f"completed in {time.time() - start:,.3f}s")
        return c.EXIT_OK
