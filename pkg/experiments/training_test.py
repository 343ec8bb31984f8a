"""
Tests for the training loop, early stopping and prediction.
"""
from dataclasses import replace
from pathlib import Path

import pytest

from absa.errors import ConfigError
from absa.ingest import build_vocab
from media.features import Segment, SpectrogramParams, extract_segments
from model.autodiff import NumericError
from model.network import EncoderStack, ModelConfig

from .synthetic import MEDIA_REF, SyntheticCorpus, make_corpus, write_corpus
from .training import TrainConfig, build_model, evaluate, predict, train

from typing import Any, Dict

AUDIO = SpectrogramParams(window=64, hop=32)
VIDEO_DIM = 16


def tiny_config(setting: str = "simple", **overrides: Any) -> TrainConfig:
    model = ModelConfig(
        setting=setting, embedding_dim=8, text_hidden=8, audio_dim=AUDIO.dim,
        audio_hidden=6, video_dim=VIDEO_DIM, video_hidden=6, fusion_hidden=8,
        attention_dim=6, sentence_hidden=(12,), dropout=0.0)
    model = replace(model, **overrides.pop("model", {}))
    values: Dict[str, Any] = dict(model=model, batch_size=8, max_epochs=5,
                                  patience=3, learning_rate=0.01, seed=0)
    values.update(overrides)
    return TrainConfig(**values)


def segments_of(corpus: SyntheticCorpus) -> Dict[str, Segment]:
    return extract_segments(corpus.sentences, {MEDIA_REF: corpus.audio},
                            {MEDIA_REF: corpus.video}, params=AUDIO,
                            video_dim=VIDEO_DIM, max_frames=8)


def test_train_config_round_trip() -> None:
    config = tiny_config("jsl", target_score=0.9)
    assert TrainConfig.from_dict(config.to_dict()) == config
    with pytest.raises(ConfigError, match="unknown"):
        TrainConfig.from_dict({"epochs": 3})
    for bad in (dict(batch_size=0), dict(patience=0), dict(max_epochs=0),
                dict(learning_rate=-1.0), dict(valid_fraction=1.0)):
        with pytest.raises(ConfigError):
            tiny_config(**bad).validate()


def test_early_stopping_waits_for_patience() -> None:
    """A frozen model never improves after the first epoch."""
    corpus = make_corpus(seed=1, n=12)
    config = tiny_config(learning_rate=0.0, patience=5, max_epochs=50)
    result = train(config, corpus.sentences)
    assert result.best_epoch == 1
    assert len(result.history) == 6
    assert len({r.valid_score for r in result.history}) == 1


def test_best_checkpoint_is_restored() -> None:
    corpus = make_corpus(seed=2, n=12)
    result = train(tiny_config(max_epochs=6), corpus.sentences[:9],
                   corpus.sentences[9:])
    best = max(r.valid_score for r in result.history)
    assert result.best_valid_score == best
    assert result.history[result.best_epoch - 1].valid_score == best
    report = evaluate(result.model, corpus.sentences[9:], result.vocab)
    assert report.ae_f1 == pytest.approx(best)


def test_overfits_small_corpus() -> None:
    corpus = make_corpus(seed=0, n=20)
    config = tiny_config(max_epochs=200, patience=200, target_score=1.0)
    result = train(config, corpus.sentences)
    assert result.best_valid_score == 1.0
    assert evaluate(result.model, corpus.sentences, result.vocab).ae_f1 == 1.0


def test_identical_seeds_identical_losses() -> None:
    corpus = make_corpus(seed=3, n=16)
    config = tiny_config("cal", max_epochs=3, patience=3,
                         model=dict(use_crf=True))
    first = train(config, corpus.sentences)
    second = train(config, corpus.sentences)
    assert [r.loss for r in first.history] == [r.loss for r in second.history]
    other = train(replace(config, seed=1), corpus.sentences)
    assert other.history[0].loss != first.history[0].loss


def test_numeric_failure_names_the_batch(
        monkeypatch: pytest.MonkeyPatch) -> None:
    def explode(self: EncoderStack, *args: Any, **kwargs: Any) -> Any:
        raise NumericError("overflow in exp")

    monkeypatch.setattr(EncoderStack, "loss", explode)
    corpus = make_corpus(seed=4, n=6)
    with pytest.raises(NumericError, match=r"in batch \['s0"):
        train(tiny_config(), corpus.sentences)


def test_unknown_selection_metric() -> None:
    corpus = make_corpus(seed=5, n=6)
    with pytest.raises(ConfigError, match="sc_accuracy"):
        train(tiny_config(selection_metric="sc_accuracy"), corpus.sentences)


def test_predictions_per_setting() -> None:
    corpus = make_corpus(seed=6, n=9)
    for setting in ("simple", "csl", "jsl"):
        result = train(tiny_config(setting, max_epochs=1), corpus.sentences)
        predictions = predict(result.model, corpus.sentences, result.vocab)
        assert [p.id for p in predictions] == [s.id for s in corpus.sentences]
        has_sentiment = {p.sentiment is not None for p in predictions}
        assert has_sentiment == {setting != "simple"}
        report = evaluate(result.model, corpus.sentences, result.vocab,
                          predictions=predictions)
        assert (report.sentiment is None) == (setting == "simple")
        expected = result.model.config.tagset.labels
        assert all(t in expected for p in predictions for t in p.tags.tags)


def test_pretrained_embeddings(tmp_path: Path) -> None:
    corpus = make_corpus(seed=7, n=6)
    paths = write_corpus(corpus, str(tmp_path))
    config = tiny_config(model=dict(use_pretrained_embeddings=True))
    vocab = build_vocab(corpus.sentences)
    with pytest.raises(ConfigError, match="pre-trained"):
        build_model(config, vocab)
    result = train(replace(config, max_epochs=1), corpus.sentences,
                   embeddings_path=paths["embeddings"])
    assert result.model.config.embedding_dim == 8
    assert result.model.config.vocab_size == len(result.vocab)


def test_media_carries_sentiment_text_cannot() -> None:
    """
    Sentence sentiment is only in the audio tones and video clusters; the
    multi-modal joint model learns it and the text-only one cannot.
    """
    train_corpus = make_corpus(seed=0, n=60, modality_only=True)
    test_corpus = make_corpus(seed=1, n=30, modality_only=True)
    train_media = segments_of(train_corpus)
    test_media = segments_of(test_corpus)
    accuracy = {}
    for media in (False, True):
        config = tiny_config(
            "jsl", max_epochs=40, patience=40, target_score=1.0,
            selection_metric="sc_accuracy",
            model=dict(use_audio=media, use_video=media))
        result = train(config, train_corpus.sentences, segments=train_media)
        report = evaluate(result.model, test_corpus.sentences, result.vocab,
                          test_media)
        assert report.sentiment is not None
        accuracy[media] = report.sentiment.accuracy
    assert accuracy[True] >= 0.9
    assert accuracy[False] <= 0.6
