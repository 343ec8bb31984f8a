# Copyright (c) mm-opinion-miner contributors
"""
Mini-batch Adam training with early stopping on validation aspect
extraction F1, plus prediction and scoring of trained models.
"""
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from absa.errors import ConfigError
from absa.ingest import (
    EmbeddingTable, Sentence, Vocabulary, build_vocab, implied_sentiment,
    load_embeddings, random_embeddings
)
from absa.labels import SentimentClass, TagSequence
from media.features import Segment
from model.autodiff import Adam, NumericError, backward
from model.network import EncoderStack, ModelConfig

from .batching import (
    describe_split, iterate_batches, make_batch, prepare_sentences, target_tags
)
from .metrics import MetricsReport, build_report, predicted_sentence_sentiment

from typing import Any, Dict, List, Mapping, Optional, Sequence

__all__ = [
    "TrainConfig",
    "EpochRecord",
    "TrainResult",
    "SentencePrediction",
    "BATCH_SIZES",
    "build_model",
    "train",
    "predict",
    "evaluate",
]

# batch sizes used for the two reference corpora
BATCH_SIZES = {"youtubean": 8, "pom": 64}


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    batch_size: int = 8
    max_epochs: int = 50
    patience: int = 5
    learning_rate: float = 1e-3
    seed: int = 0
    min_frequency: int = 1
    valid_fraction: float = 0.1
    target_score: Optional[float] = None
    selection_metric: str = "ae_f1"

    def validate(self) -> None:
        self.model.validate()
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be positive, got "
                              f"{self.batch_size}")
        if self.patience < 1:
            raise ConfigError(f"patience must be positive, got {self.patience}")
        if self.max_epochs < 1:
            raise ConfigError(f"max epochs must be positive, got "
                              f"{self.max_epochs}")
        if self.learning_rate < 0:
            raise ConfigError(f"negative learning rate {self.learning_rate}")
        if not 0.0 <= self.valid_fraction < 1.0:
            raise ConfigError(f"validation fraction must be in [0, 1), got "
                              f"{self.valid_fraction}")
        if not self.selection_metric:
            raise ConfigError("a selection metric is required")

    @property
    def setting(self) -> str:
        return self.model.setting

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        values = dict(data)
        model = ModelConfig.from_dict(values.pop("model", {}))
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown training config keys {unknown}")
        return cls(model=model, **values)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    valid_score: float
    seconds: float


@dataclass
class TrainResult:
    model: EncoderStack
    vocab: Vocabulary
    config: TrainConfig
    best_epoch: int
    best_valid_score: float
    history: List[EpochRecord]

    def to_dict(self) -> Dict[str, Any]:
        """Training curve without wall-clock times."""
        return {
            "best_epoch": self.best_epoch,
            "selection_metric": self.config.selection_metric,
            "best_valid_score": self.best_valid_score,
            "epochs": [{"epoch": r.epoch, "loss": r.loss,
                        "valid_score": r.valid_score} for r in self.history],
        }


@dataclass(frozen=True)
class SentencePrediction:
    id: str
    tags: TagSequence
    sentiment: Optional[SentimentClass] = None


def build_model(config: TrainConfig, vocab: Vocabulary,
                embeddings: Optional[EmbeddingTable] = None) -> EncoderStack:
    """
    A fresh model sized to the vocabulary. Pre-trained vectors are fine-tuned;
    without them embeddings are learned from a uniform initialization.
    """
    if config.model.use_pretrained_embeddings:
        if embeddings is None:
            raise ConfigError("this variant uses pre-trained embeddings; "
                              "pass an embeddings file")
        table = embeddings
    else:
        table = random_embeddings(vocab, config.model.embedding_dim,
                                  seed=config.seed)
    model_config = replace(config.model, vocab_size=len(vocab),
                           embedding_dim=table.dimension, seed=config.seed)
    return EncoderStack(model_config, table.matrix)


def _check_gradients(model: EncoderStack, ids: Sequence[str]) -> None:
    for name, p in model.named_parameters():
        if p.grad is not None and not np.all(np.isfinite(p.grad)):
            raise NumericError(f"non-finite gradient for {name} in batch "
                               f"{list(ids)}")


def train(config: TrainConfig, train_set: Sequence[Sentence],
          valid_set: Optional[Sequence[Sentence]] = None, *,
          segments: Optional[Mapping[str, Segment]] = None,
          embeddings_path: Optional[str] = None,
          vocab: Optional[Vocabulary] = None) -> TrainResult:
    """
    Train until the validation selection metric (aspect extraction F1 by
    default) has not improved for `patience` epochs, or `max_epochs` pass,
    and return the best model seen. Without a validation set the training
    set is scored instead.
    """
    config.validate()
    train_sents = prepare_sentences(train_set, config.model)
    valid_sents = (prepare_sentences(valid_set, config.model)
                   if valid_set else train_sents)
    describe_split("train", train_sents)
    describe_split("valid", valid_sents)

    vocab = vocab or build_vocab(train_sents, config.min_frequency)
    embeddings = None
    if config.model.use_pretrained_embeddings and embeddings_path:
        embeddings = load_embeddings(embeddings_path, vocab, seed=config.seed)
    model = build_model(config, vocab, embeddings)
    optimizer = Adam(model.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)

    metric = config.selection_metric
    history: List[EpochRecord] = []
    best_score, best_epoch = -1.0, 0
    best_state = model.state_dict()
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        start = time.time()
        model.train()
        total, n_batches = 0.0, 0
        for sents in iterate_batches(train_sents, config.batch_size, rng):
            batch = make_batch(sents, vocab, model.config, segments)
            optimizer.zero_grad()
            try:
                loss = model.loss(batch).total
            except NumericError as e:
                raise NumericError(f"{e} in batch {batch.sentence_ids}") from e
            value = loss.item()
            if not math.isfinite(value):
                raise NumericError(f"loss is {value} in batch "
                                   f"{batch.sentence_ids}")
            backward(loss)
            _check_gradients(model, batch.sentence_ids)
            optimizer.step()
            total += value
            n_batches += 1

        report = evaluate(model, valid_sents, vocab, segments,
                          batch_size=config.batch_size)
        scores = report.flat()
        if metric not in scores:
            raise ConfigError(f"selection metric {metric!r} is not reported "
                              f"in the {config.setting} setting; have "
                              f"{sorted(scores)}")
        score = scores[metric]
        record = EpochRecord(epoch, total / max(n_batches, 1), score,
                             time.time() - start)
        history.append(record)
        logging.info(f"epoch {epoch}: loss {record.loss:.4f}, valid {metric} "
                     f"{score:.4f} ({record.seconds:,.3f}s)")
        if score > best_score:
            best_score, best_epoch, stale = score, epoch, 0
            best_state = model.state_dict()
        else:
            stale += 1
        if config.target_score is not None and best_score >= config.target_score:
            logging.info(f"reached target {metric} {config.target_score} at "
                         f"epoch {epoch}")
            break
        if stale >= config.patience:
            logging.info(f"no improvement for {stale} epochs; stopping at "
                         f"epoch {epoch}")
            break

    model.load_state_dict(best_state)
    model.eval()
    logging.info(f"best validation {metric} {best_score:.4f} at epoch "
                 f"{best_epoch}")
    resolved = replace(config, model=model.config)
    return TrainResult(model, vocab, resolved, best_epoch, best_score, history)


def predict(model: EncoderStack, sentences: Sequence[Sentence],
            vocab: Vocabulary,
            segments: Optional[Mapping[str, Segment]] = None, *,
            batch_size: int = 64) -> List[SentencePrediction]:
    """
    Decoded tags per sentence, with a sentence sentiment in the sentence
    level settings: read off the tags in csl, from the sentence head in jsl.
    """
    config = model.config
    tagset = config.tagset
    classes = config.sentiment_classes
    out: List[SentencePrediction] = []
    for sents in iterate_batches(sentences, batch_size):
        batch = make_batch(sents, vocab, config, segments, with_labels=False)
        prediction = model.predict(batch)
        for b, s in enumerate(sents):
            tags = tagset.decode(prediction.tags[b])
            sentiment: Optional[SentimentClass] = None
            if config.setting == "csl":
                sentiment = predicted_sentence_sentiment(tags)
            elif config.setting == "jsl" and prediction.sentence is not None:
                sentiment = classes[prediction.sentence[b]]
            out.append(SentencePrediction(s.id, tags, sentiment))
    return out


def evaluate(model: EncoderStack, sentences: Sequence[Sentence],
             vocab: Vocabulary,
             segments: Optional[Mapping[str, Segment]] = None, *,
             batch_size: int = 64,
             predictions: Optional[Sequence[SentencePrediction]] = None
             ) -> MetricsReport:
    config = model.config
    if predictions is None:
        predictions = predict(model, sentences, vocab, segments,
                              batch_size=batch_size)
    gold = [target_tags(s, config) for s in sentences]
    pred = [p.tags for p in predictions]
    gold_sentiments = pred_sentiments = None
    if config.setting in ("csl", "jsl"):
        found = [implied_sentiment(s) for s in sentences]
        if all(f is not None for f in found):
            gold_sentiments = [f for f in found if f is not None]
        if all(p.sentiment is not None for p in predictions):
            pred_sentiments = [p.sentiment for p in predictions
                               if p.sentiment is not None]
    return build_report(gold, pred, config.setting, config.sentiment_classes,
                        gold_sentiments=gold_sentiments,
                        pred_sentiments=pred_sentiments)
