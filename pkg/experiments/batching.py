# Copyright (c) mm-opinion-miner contributors
"""
Turning sentences and their media segments into padded model inputs.
"""
import logging
from dataclasses import replace

import numpy as np
import numpy.typing as npt

from absa.errors import ConfigError, ValidationError
from absa.ingest import (
    Sentence, Vocabulary, filter_single_sentiment, implied_sentiment
)
from absa.labels import Scheme, TagSequence, as_collapsed, to_ae
from media.features import FeatureSequence, Segment
from model.network import ModelConfig, ModelInput

from typing import Iterator, List, Mapping, Optional, Sequence, Tuple

__all__ = [
    "prepare_sentences",
    "target_tags",
    "sentence_label",
    "make_batch",
    "iterate_batches",
    "describe_split",
]


def prepare_sentences(sentences: Sequence[Sentence],
                      config: ModelConfig) -> List[Sentence]:
    """
    Check that the data can train the configured setting. Sentence-level
    settings keep only single-sentiment sentences; jsl needs a sentence
    sentiment for each of them.
    """
    if not sentences:
        raise ValidationError("no sentences to train on")
    for s in sentences:
        if s.gold is None:
            raise ValidationError("sentence has no gold tags", sentence_id=s.id)
    out = list(sentences)
    golds = [s.gold for s in out if s.gold is not None]
    collapsible = all(as_collapsed(g) is not None for g in golds)
    if config.scheme is Scheme.COLLAPSED:
        converted: List[Sentence] = []
        for s in out:
            assert s.gold is not None
            gold = as_collapsed(s.gold)
            if gold is None:
                raise ConfigError(
                    f"the {config.setting} setting needs sentiment-bearing "
                    f"(collapsed) tags, but sentence {s.id} has plain IOB tags")
            converted.append(replace(s, gold=gold))
        out = converted
    # aspect-free sentences fit either scheme
    sentiment_tagged = any(g.scheme is Scheme.COLLAPSED for g in golds)
    if config.setting == "csl" or (config.setting == "jsl" and collapsible
                                   and sentiment_tagged):
        out = filter_single_sentiment(out)
    if config.setting == "jsl":
        missing = [s.id for s in out if implied_sentiment(s) is None]
        if missing:
            raise ConfigError(
                f"the jsl setting needs a sentence sentiment for every "
                f"sentence; {len(missing):,} have none (e.g. {missing[:3]})")
    if not out:
        raise ValidationError("no sentences left after filtering")
    return out


def target_tags(sentence: Sentence, config: ModelConfig) -> TagSequence:
    """Gold tags in the scheme the configured setting trains on."""
    if sentence.gold is None:
        raise ValidationError("sentence has no gold tags",
                              sentence_id=sentence.id)
    if config.scheme is Scheme.AE:
        return to_ae(sentence.gold)
    return sentence.gold


def sentence_label(sentence: Sentence, config: ModelConfig) -> int:
    sentiment = implied_sentiment(sentence)
    if sentiment is None:
        raise ValidationError("sentence sentiment required",
                              sentence_id=sentence.id)
    classes = config.sentiment_classes
    if sentiment not in classes:
        raise ValidationError(f"sentiment {sentiment} is not one of the "
                              f"configured classes", sentence_id=sentence.id)
    return classes.index(sentiment)


def _pad_frames(sequences: Sequence[Optional[FeatureSequence]], dim: int,
                what: str) -> Tuple[npt.NDArray[np.float64],
                                    npt.NDArray[np.float64]]:
    steps = max((len(s) for s in sequences if s is not None), default=0)
    frames = np.zeros((len(sequences), steps, dim))
    mask = np.zeros((len(sequences), steps))
    for b, seq in enumerate(sequences):
        if seq is None or len(seq) == 0:
            continue
        if seq.dim != dim:
            raise ConfigError(f"{what} features have dim {seq.dim}, the "
                              f"model expects {dim}")
        frames[b, :len(seq)] = seq.frames
        mask[b, :len(seq)] = 1.0
    return frames, mask


def make_batch(sentences: Sequence[Sentence], vocab: Vocabulary,
               config: ModelConfig,
               segments: Optional[Mapping[str, Segment]] = None, *,
               with_labels: bool = True) -> ModelInput:
    """
    Pad to the longest sentence of the batch. Padding uses the PAD index and
    a zero mask, so it never reaches losses or metrics.
    """
    if not sentences:
        raise ValueError("empty batch")
    steps = max(len(s) for s in sentences)
    token_ids = np.full((len(sentences), steps), vocab.pad_index,
                        dtype=np.int64)
    mask = np.zeros((len(sentences), steps))
    for b, s in enumerate(sentences):
        if len(s) == 0:
            raise ValidationError("empty sentence", sentence_id=s.id)
        token_ids[b, :len(s)] = vocab.encode(s.tokens)
        mask[b, :len(s)] = 1.0
    batch = ModelInput(token_ids, mask,
                       sentence_ids=[s.id for s in sentences])

    if config.use_audio or config.use_video:
        if segments is None:
            raise ConfigError("this model needs media features")
        picked = [segments.get(s.id, Segment()) for s in sentences]
        if config.use_audio:
            batch.audio, batch.audio_mask = _pad_frames(
                [p.audio for p in picked], config.audio_dim, "audio")
        if config.use_video:
            batch.video, batch.video_mask = _pad_frames(
                [p.video for p in picked], config.video_dim, "video")

    if with_labels:
        tagset = config.tagset
        labels = np.zeros((len(sentences), steps), dtype=np.int64)
        for b, s in enumerate(sentences):
            try:
                labels[b, :len(s)] = tagset.encode(target_tags(s, config))
            except ValidationError as e:
                raise ValidationError(str(e), sentence_id=s.id) from None
        batch.labels = labels
        if config.setting == "jsl":
            batch.sentence_labels = np.array(
                [sentence_label(s, config) for s in sentences], dtype=np.int64)
    return batch


def iterate_batches(sentences: Sequence[Sentence], batch_size: int,
                    rng: Optional[np.random.Generator] = None
                    ) -> Iterator[List[Sentence]]:
    """Consecutive mini-batches, in a random order when `rng` is given."""
    if batch_size < 1:
        raise ConfigError(f"batch size must be positive, got {batch_size}")
    order = (rng.permutation(len(sentences)) if rng is not None
             else np.arange(len(sentences)))
    for i in range(0, len(order), batch_size):
        yield [sentences[int(j)] for j in order[i:i + batch_size]]


def describe_split(name: str, sentences: Sequence[Sentence]) -> None:
    aspects = sum(len(s.chunks()) for s in sentences)
    logging.info(f"{name}: {len(sentences):,} sentences, {aspects:,} aspects")
