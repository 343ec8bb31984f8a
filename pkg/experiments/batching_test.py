"""
Tests for turning sentences into padded model inputs.
"""
import numpy as np
import pytest

from absa.errors import ConfigError, ValidationError
from absa.ingest import Sentence, build_vocab
from absa.labels import Scheme, SentimentClass, TagSequence
from media.features import FeatureSequence, Modality, Segment
from model.network import ModelConfig

from .batching import (
    iterate_batches, make_batch, prepare_sentences, sentence_label,
    target_tags
)

from typing import List, Optional


def sentence(sid: str, tags: List[str],
             sentiment: Optional[SentimentClass] = None) -> Sentence:
    tokens = tuple(f"w{i}" for i in range(len(tags)))
    return Sentence(sid, tokens, TagSequence.infer(tags), sentiment)


def frames(n: int, dim: int) -> FeatureSequence:
    return FeatureSequence(Modality.AUDIO, dim, np.ones((n, dim)),
                           np.arange(n, dtype=float))


def test_prepare_filters_mixed_sentiment() -> None:
    data = [sentence("a", ["B-POS", "O"]),
            sentence("b", ["B-POS", "B-NEG"]),
            sentence("c", ["O", "O"])]
    kept = prepare_sentences(data, ModelConfig(setting="csl"))
    assert [s.id for s in kept] == ["a", "c"]
    assert len(prepare_sentences(data, ModelConfig(setting="cal"))) == 3


def test_csl_keeps_aspect_free_sentences() -> None:
    """All-O sentences read as plain tags but belong to a collapsed corpus."""
    data = [sentence("a", ["B-POS", "O"]), sentence("b", ["O", "O"])]
    kept = prepare_sentences(data, ModelConfig(setting="csl"))
    assert [s.id for s in kept] == ["a", "b"]
    assert kept[1].sentiment is SentimentClass.NEUTRAL
    assert all(s.gold is not None and s.gold.scheme is Scheme.COLLAPSED
               for s in kept)


def test_jsl_drops_mixed_and_keeps_aspect_free() -> None:
    data = [sentence("a", ["B-POS", "O", "B-NEG"]), sentence("b", ["O", "O"]),
            sentence("c", ["O", "B-NEG"])]
    config = ModelConfig(setting="jsl")
    kept = prepare_sentences(data, config)
    assert [s.id for s in kept] == ["b", "c"]
    assert [s.sentiment for s in kept] == [SentimentClass.NEUTRAL,
                                           SentimentClass.NEGATIVE]
    assert target_tags(kept[0], config).strings() == ["O", "O"]


def test_prepare_rejects_plain_tags_for_collapsed_settings() -> None:
    data = [sentence("a", ["B", "O"])]
    with pytest.raises(ConfigError, match="collapsed"):
        prepare_sentences(data, ModelConfig(setting="cal"))
    assert prepare_sentences(data, ModelConfig(setting="simple")) == data


def test_jsl_needs_sentence_sentiments() -> None:
    """Plain tags and no sentence label leave nothing to train the head on."""
    with pytest.raises(ConfigError, match="jsl"):
        prepare_sentences([sentence("a", ["B", "O"])],
                          ModelConfig(setting="jsl"))
    ok = [sentence("a", ["B", "O"], SentimentClass.NEGATIVE)]
    assert prepare_sentences(ok, ModelConfig(setting="jsl")) == ok
    assert sentence_label(ok[0], ModelConfig(setting="jsl")) == 1


def test_prepare_errors() -> None:
    with pytest.raises(ValidationError):
        prepare_sentences([], ModelConfig())
    with pytest.raises(ValidationError):
        prepare_sentences([Sentence("x", ("a",))], ModelConfig())


def test_target_tags_follow_the_setting() -> None:
    s = sentence("a", ["B-POS", "I-POS", "O"])
    assert target_tags(s, ModelConfig(setting="simple")).strings() == \
        ["B", "I", "O"]
    assert target_tags(s, ModelConfig(setting="cal")).strings() == \
        ["B-POS", "I-POS", "O"]


def test_make_batch_pads() -> None:
    data = [sentence("a", ["B-POS", "I-POS", "O"]),
            sentence("b", ["O", "B-NEG"])]
    vocab = build_vocab(data)
    config = ModelConfig(setting="cal", use_audio=True, audio_dim=3)
    segments = {"a": Segment(audio=frames(4, 3)), "b": Segment()}
    batch = make_batch(data, vocab, config, segments)
    assert batch.token_ids.shape == (2, 3)
    assert batch.token_ids[1, 2] == vocab.pad_index
    assert batch.mask.tolist() == [[1, 1, 1], [1, 1, 0]]
    assert batch.labels is not None
    tagset = config.tagset
    assert tagset.decode(batch.labels[0]).strings() == ["B-POS", "I-POS", "O"]
    assert batch.audio is not None and batch.audio.shape == (2, 4, 3)
    assert batch.audio_mask is not None
    assert batch.audio_mask.tolist() == [[1, 1, 1, 1], [0, 0, 0, 0]]
    assert batch.video is None
    assert batch.sentence_ids == ["a", "b"]


def test_make_batch_media_errors() -> None:
    data = [sentence("a", ["O"])]
    vocab = build_vocab(data)
    config = ModelConfig(use_audio=True, audio_dim=3)
    with pytest.raises(ConfigError):
        make_batch(data, vocab, config)
    with pytest.raises(ConfigError, match="dim 5"):
        make_batch(data, vocab, config, {"a": Segment(audio=frames(2, 5))})


def test_jsl_batch_has_sentence_labels() -> None:
    data = [sentence("a", ["B-POS", "O"]), sentence("b", ["B-NEG", "O"])]
    batch = make_batch(data, build_vocab(data), ModelConfig(setting="jsl"))
    assert batch.sentence_labels is not None
    assert batch.sentence_labels.tolist() == [0, 1]


def test_iterate_batches() -> None:
    data = [sentence(f"s{i}", ["O"]) for i in range(7)]
    sizes = [len(b) for b in iterate_batches(data, 3)]
    assert sizes == [3, 3, 1]
    shuffled = [s.id for b in iterate_batches(data, 3,
                                              np.random.default_rng(0))
                for s in b]
    assert sorted(shuffled) == sorted(s.id for s in data)
    with pytest.raises(ConfigError):
        list(iterate_batches(data, 0))
