"""
Tests for the assembled encoder stack in every setting.
"""
import numpy as np
import pytest

from absa.errors import ConfigError

from .autodiff import Tensor, backward
from .gradcheck import check_gradients
from .network import (
    SETTINGS, VARIANTS, EncoderStack, ModelConfig, ModelInput, baseline,
    variant
)


def toy_config(setting: str, **overrides: object) -> ModelConfig:
    values = dict(
        setting=setting, use_audio=True, use_video=True, use_crf=True,
        vocab_size=6, embedding_dim=4, text_hidden=3, audio_dim=5,
        audio_hidden=2, video_dim=4, video_hidden=2, fusion_hidden=3,
        attention_dim=3, sentence_hidden=(4, 3), dropout=0.0, seed=11,
    )
    values.update(overrides)
    return ModelConfig(**values)  # type: ignore[arg-type]


def toy_batch(config: ModelConfig, seed: int = 0) -> ModelInput:
    """Two sentences of 3 and 2 tokens, each with 2 audio and 2 video frames."""
    rng = np.random.default_rng(seed)
    mask = np.array([[1, 1, 1], [1, 1, 0]], dtype=float)
    labels = np.array([[1, 2, 0], [0, 1, 0]])
    return ModelInput(
        token_ids=np.array([[2, 3, 4], [5, 2, 0]]),
        mask=mask,
        audio=rng.normal(size=(2, 2, config.audio_dim)),
        audio_mask=np.ones((2, 2)),
        video=rng.normal(size=(2, 2, config.video_dim)),
        video_mask=np.ones((2, 2)),
        labels=labels % config.num_labels,
        sentence_labels=np.array([0, 2]),
        sentence_ids=["a", "b"],
    )


def test_config_dimensions() -> None:
    full = ModelConfig(use_audio=True, use_video=True)
    assert full.fusion_input_dim == 812
    assert ModelConfig().fusion_input_dim == 300
    assert ModelConfig(setting="cal").num_labels == 7
    assert ModelConfig(setting="jsl").num_labels == 3

    for name in VARIANTS:
        assert variant(name).variant_name == name
    plain = baseline(full)
    assert not (plain.use_audio or plain.use_video or plain.use_crf
                or plain.use_pretrained_embeddings)

    with pytest.raises(ConfigError):
        ModelConfig(setting="pipeline").validate()
    with pytest.raises(ConfigError):
        variant("T+X")
    with pytest.raises(ConfigError):
        ModelConfig.from_dict({"setting": "cal", "layers": 4})
    restored = ModelConfig.from_dict(full.to_dict())
    assert restored == full


@pytest.mark.parametrize("setting", SETTINGS)
def test_full_model_gradients(setting: str) -> None:
    """
    The end-to-end loss of the full multi-modal model agrees with finite
    differences on every parameter tensor.
    """
    config = toy_config(setting)
    model = EncoderStack(config)
    batch = toy_batch(config)
    worst = check_gradients(lambda: model.loss(batch).total,
                            model.parameters(), np.random.default_rng(1))
    names = [n for n, _ in model.named_parameters()]
    failures = {names[i]: e for i, e in worst.items() if e >= 1e-4}
    assert not failures


def test_forward_shapes() -> None:
    config = toy_config("jsl")
    model = EncoderStack(config)
    batch = toy_batch(config)
    out = model(batch)
    assert out.emissions.shape == (2, 3, config.num_labels)
    assert out.fused.shape == (2, 3, 6)
    assert out.attention.shape == (2, 3, 3)
    assert out.sentence_logits is not None
    assert out.sentence_logits.shape == (2, 3)

    losses = model.loss(batch, out)
    assert losses.sentence is not None
    assert losses.total.item() == losses.sequence.item() + losses.sentence.item()


def test_pooled_media_attached_to_every_token() -> None:
    config = toy_config("simple")
    model = EncoderStack(config)
    batch = toy_batch(config)
    assert batch.audio is not None and batch.audio_mask is not None
    text = model.encode_text(batch.token_ids, batch.mask)
    audio = model.encode_audio(batch.audio, batch.audio_mask)
    joined = model.fusion_input(text, audio, None)
    assert joined.shape[-1] == 6 + 4
    assert np.all(joined.data[:, :, 6:] == joined.data[:, :1, 6:])

    assert model.audio is not None
    states = model.audio(Tensor(batch.audio), batch.audio_mask).data
    assert np.allclose(audio.data, states.mean(axis=1), atol=1e-12)


def test_padding_is_invisible() -> None:
    config = toy_config("cal")
    model = EncoderStack(config)
    batch = toy_batch(config)
    together = model(batch).emissions.data
    assert batch.audio is not None and batch.audio_mask is not None
    assert batch.video is not None and batch.video_mask is not None

    alone = ModelInput(
        token_ids=batch.token_ids[1:, :2], mask=batch.mask[1:, :2],
        audio=batch.audio[1:], audio_mask=batch.audio_mask[1:],
        video=batch.video[1:], video_mask=batch.video_mask[1:],
    )
    assert np.allclose(model(alone).emissions.data[0], together[1, :2],
                       atol=1e-10)


def test_missing_media() -> None:
    """A sentence without frames is encoded from the learned no-signal frame."""
    config = toy_config("simple")
    model = EncoderStack(config)
    batch = toy_batch(config)
    assert batch.audio_mask is not None
    batch.audio_mask[1] = 0.0
    model.zero_grad()
    backward(model.loss(batch).total)
    assert model.audio_silence.grad is not None
    assert np.any(model.audio_silence.grad != 0.0)
    assert np.all(model.video_silence.grad == 0.0)

    with pytest.raises(ConfigError):
        model(ModelInput(batch.token_ids, batch.mask))


def test_text_only_ignores_media() -> None:
    config = toy_config("simple", use_audio=False, use_video=False)
    model = EncoderStack(config)
    batch = toy_batch(config)
    first = model(batch).emissions.data
    batch.audio = None
    batch.video = None
    assert np.array_equal(model(batch).emissions.data, first)


def test_predict() -> None:
    config = toy_config("jsl", dropout=0.5)
    model = EncoderStack(config)
    batch = toy_batch(config)
    prediction = model.predict(batch)
    assert [len(t) for t in prediction.tags] == [3, 2]
    assert prediction.sentence is not None
    assert prediction.sentence_probabilities is not None
    assert np.allclose(prediction.sentence_probabilities.sum(axis=1), 1.0,
                       atol=1e-12)
    assert model.training
    again = model.predict(batch)
    assert again.tags == prediction.tags


def test_determinism() -> None:
    config = toy_config("csl", dropout=0.5)
    first = EncoderStack(config)
    second = EncoderStack(config)
    for (na, a), (nb, b) in zip(first.named_tensors(), second.named_tensors()):
        assert na == nb and np.array_equal(a.data, b.data)
    batch = toy_batch(config)
    for _ in range(3):
        assert first.loss(batch).total.item() == second.loss(batch).total.item()
