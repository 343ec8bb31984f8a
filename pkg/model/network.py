# Copyright (c) mm-opinion-miner contributors
"""
The multi-modal opinion mining network: text, audio and video encoders,
early fusion, token self-attention, and either a CRF or a softmax output
layer, with an optional sentence-sentiment head for the joint setting.
"""
import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import numpy.typing as npt

from absa.errors import ConfigError
from absa.labels import Scheme, SentimentClass, TagSet, tagset

from .autodiff import (
    Tensor, concat, dropout, expand, expand_to, log_softmax, mean_pool, mul,
    no_grad, scale, softmax, tsum
)
from .crf import Crf, softmax_cross_entropy, softmax_decode
from .layers import BiGru, Embedding, Mlp, Module, SelfAttention, describe

from typing import Any, Dict, List, Optional, Tuple

__all__ = [
    "SETTINGS",
    "VARIANTS",
    "ModelConfig",
    "ModelInput",
    "ModelOutput",
    "Losses",
    "Prediction",
    "EncoderStack",
    "sentence_cross_entropy",
    "variant",
    "baseline",
]

Array = npt.NDArray[np.float64]

SETTINGS = ("simple", "cal", "csl", "jsl")

# ablation rows: (use_crf, use_pretrained_embeddings, use_audio, use_video)
VARIANTS: Dict[str, Tuple[bool, bool, bool, bool]] = {
    "T": (False, False, False, False),
    "T+CRF": (True, False, False, False),
    "T+GV": (False, True, False, False),
    "T+GV+CRF": (True, True, False, False),
    "T+A+V": (False, False, True, True),
    "T+CRF+A+V": (True, False, True, True),
    "T+GV+CRF+A+V": (True, True, True, True),
}


@dataclass(frozen=True)
class ModelConfig:
    setting: str = "simple"
    use_audio: bool = False
    use_video: bool = False
    use_crf: bool = False
    use_pretrained_embeddings: bool = False
    sentiments: Tuple[str, ...] = ("positive", "negative", "neutral")
    vocab_size: int = 2
    embedding_dim: int = 300
    trainable_embeddings: bool = True
    text_hidden: int = 150
    audio_dim: int = 513
    audio_hidden: int = 128
    video_dim: int = 1024
    video_hidden: int = 128
    fusion_hidden: int = 150
    attention_dim: int = 100
    sentence_hidden: Tuple[int, ...] = (128, 64)
    dropout: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.setting not in SETTINGS:
            raise ConfigError(f"invalid setting {self.setting!r}; expected "
                              f"one of {', '.join(SETTINGS)}")
        if not self.sentiments:
            raise ConfigError("at least one sentiment class is required")
        for s in self.sentiments:
            try:
                SentimentClass.parse(s)
            except ValueError as e:
                raise ConfigError(str(e)) from None
        sizes = {
            "vocab_size": self.vocab_size, "embedding_dim": self.embedding_dim,
            "text_hidden": self.text_hidden, "audio_dim": self.audio_dim,
            "audio_hidden": self.audio_hidden, "video_dim": self.video_dim,
            "video_hidden": self.video_hidden,
            "fusion_hidden": self.fusion_hidden,
            "attention_dim": self.attention_dim,
        }
        for name, value in sizes.items():
            if value < 1:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.vocab_size < 2:
            raise ConfigError("vocabulary must hold at least PAD and UNK")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def scheme(self) -> Scheme:
        """Collapsed tags for CAL and CSL, plain IOB for Simple and JSL."""
        if self.setting in ("cal", "csl"):
            return Scheme.COLLAPSED
        return Scheme.AE

    @property
    def sentiment_classes(self) -> Tuple[SentimentClass, ...]:
        return tuple(SentimentClass.parse(s) for s in self.sentiments)

    @property
    def tagset(self) -> TagSet:
        return tagset(self.scheme, self.sentiment_classes)

    @property
    def num_labels(self) -> int:
        return len(self.tagset)

    @property
    def fusion_input_dim(self) -> int:
        dim = 2 * self.text_hidden
        if self.use_audio:
            dim += 2 * self.audio_hidden
        if self.use_video:
            dim += 2 * self.video_hidden
        return dim

    @property
    def variant_name(self) -> str:
        name = "T"
        if self.use_pretrained_embeddings:
            name += "+GV"
        if self.use_crf:
            name += "+CRF"
        if self.use_audio:
            name += "+A"
        if self.use_video:
            name += "+V"
        return name

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown model config keys {unknown}")
        values = dict(data)
        for key in ("sentiments", "sentence_hidden"):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)


def variant(name: str, base: Optional[ModelConfig] = None) -> ModelConfig:
    """The configuration of an ablation row, e.g. "T+GV+CRF+A+V"."""
    if name not in VARIANTS:
        raise ConfigError(f"unknown variant {name!r}; expected one of "
                          f"{', '.join(VARIANTS)}")
    crf, glove, audio, video = VARIANTS[name]
    return replace(base or ModelConfig(), use_crf=crf,
                   use_pretrained_embeddings=glove, use_audio=audio,
                   use_video=video)


def baseline(base: Optional[ModelConfig] = None) -> ModelConfig:
    """
    Text only, embeddings learned from scratch, softmax cross-entropy: the
    comparison run for significance tests.
    """
    return variant("T", base)


@dataclass
class ModelInput:
    """
    A padded mini-batch. Masks are 1 for real steps and 0 for padding.
    Media arrays may hold zero frames for a sentence (all-zero mask row).
    """
    token_ids: npt.NDArray[np.int64]
    mask: Array
    audio: Optional[Array] = None
    audio_mask: Optional[Array] = None
    video: Optional[Array] = None
    video_mask: Optional[Array] = None
    labels: Optional[npt.NDArray[np.int64]] = None
    sentence_labels: Optional[npt.NDArray[np.int64]] = None
    sentence_ids: List[str] = field(default_factory=list)

    @property
    def batch_size(self) -> int:
        return int(self.token_ids.shape[0])

    @property
    def lengths(self) -> npt.NDArray[np.int64]:
        return self.mask.sum(axis=1).astype(np.int64)


@dataclass
class ModelOutput:
    emissions: Tensor
    fused: Tensor
    attention: Tensor
    sentence_logits: Optional[Tensor] = None


@dataclass
class Losses:
    sequence: Tensor
    sentence: Optional[Tensor] = None

    @property
    def total(self) -> Tensor:
        if self.sentence is None:
            return self.sequence
        return self.sequence + self.sentence


@dataclass
class Prediction:
    tags: List[List[int]]
    sentence: Optional[List[int]] = None
    sentence_probabilities: Optional[Array] = None


class EncoderStack(Module):
    """
    Token states h^t from a BiGRU over word embeddings, utterance vectors
    from mean-pooled BiGRUs over audio and video frames, and a fusion BiGRU
    over [h^t_i ; h̄^a ; h̄^v] feeding self-attention and the output layer.
    """
    def __init__(self, config: ModelConfig,
                 embeddings: Optional[Array] = None):
        config.validate()
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        init = np.random.default_rng(config.seed)
        if embeddings is None:
            table = init.uniform(-0.05, 0.05,
                                 size=(config.vocab_size, config.embedding_dim))
            table[0] = 0.0
        else:
            table = np.asarray(embeddings, dtype=np.float64)
            if table.shape != (config.vocab_size, config.embedding_dim):
                raise ConfigError(
                    f"embedding table {table.shape} does not match "
                    f"({config.vocab_size}, {config.embedding_dim})")
        self.embedding = Embedding(table, config.trainable_embeddings)
        self.text = BiGru(init, config.embedding_dim, config.text_hidden)
        self.audio: Optional[BiGru] = None
        self.video: Optional[BiGru] = None
        if config.use_audio:
            self.audio = BiGru(init, config.audio_dim, config.audio_hidden)
            self.audio_silence = Tensor(init.normal(0, 0.1, config.audio_dim),
                                        True)
        if config.use_video:
            self.video = BiGru(init, config.video_dim, config.video_hidden)
            self.video_silence = Tensor(init.normal(0, 0.1, config.video_dim),
                                        True)
        self.fusion = BiGru(init, config.fusion_input_dim,
                            config.fusion_hidden)
        self.attention = SelfAttention(init, 2 * config.fusion_hidden,
                                       config.attention_dim,
                                       config.num_labels)
        self.crf: Optional[Crf] = None
        if config.use_crf:
            self.crf = Crf(init, config.num_labels)
        self.sentence_head: Optional[Mlp] = None
        if config.setting == "jsl":
            sizes = [2 * config.fusion_hidden, *config.sentence_hidden,
                     len(config.sentiments)]
            self.sentence_head = Mlp(init, sizes)
        logging.info(f"built {config.variant_name} model for the "
                     f"{config.setting} setting with "
                     f"{describe(self)['parameters']:,} parameters")

    def encode_text(self, token_ids: npt.NDArray[np.int64],
                    mask: Array) -> Tensor:
        """(B, T) token ids -> (B, T, 2 * text_hidden)."""
        if token_ids.shape[1] == 0:
            raise ValueError("cannot encode an empty sentence")
        embedded = dropout(self.embedding(token_ids), self.config.dropout,
                           self.training, self.rng)
        return self.text(embedded, mask)

    def _encode_media(self, encoder: BiGru, silence: Tensor, frames: Array,
                      mask: Array) -> Tensor:
        batch, steps, dim = frames.shape
        empty = mask.sum(axis=1) == 0
        if steps == 0:
            frames = np.zeros((batch, 1, dim))
            mask = np.zeros((batch, 1))
            steps = 1
        x = Tensor(frames)
        if empty.any():
            # a learned no-signal frame stands in for sentences without media
            mask = mask.copy()
            mask[empty, 0] = 1.0
            select = np.zeros((batch, steps, dim))
            select[empty, 0, :] = 1.0
            x = x + mul(Tensor(select),
                        expand_to(silence, (batch, steps, dim)))
        states = encoder(x, mask)
        return mean_pool(states, axis=1, mask=mask)

    def encode_audio(self, frames: Array, mask: Array) -> Tensor:
        """(B, Ta, audio_dim) frames -> (B, 2 * audio_hidden) pooled states."""
        if self.audio is None:
            raise ConfigError("model was built without audio")
        return self._encode_media(self.audio, self.audio_silence, frames, mask)

    def encode_video(self, frames: Array, mask: Array) -> Tensor:
        if self.video is None:
            raise ConfigError("model was built without video")
        return self._encode_media(self.video, self.video_silence, frames, mask)

    def fusion_input(self, text: Tensor, audio: Optional[Tensor],
                     video: Optional[Tensor]) -> Tensor:
        """[h^t_i ; h̄^a ; h̄^v] for every token; absent modalities are omitted."""
        steps = text.shape[1]
        parts = [text]
        if audio is not None:
            parts.append(expand(audio, 1, steps))
        if video is not None:
            parts.append(expand(video, 1, steps))
        joined = concat(parts, axis=-1)
        if joined.shape[-1] != self.config.fusion_input_dim:
            raise ValueError(f"fusion input has dim {joined.shape[-1]}, "
                             f"expected {self.config.fusion_input_dim}")
        return joined

    def fuse(self, text: Tensor, audio: Optional[Tensor],
             video: Optional[Tensor], mask: Array) -> Tensor:
        return self.fusion(self.fusion_input(text, audio, video), mask)

    def self_attend(self, fused: Tensor, mask: Array) -> Tuple[Tensor, Tensor]:
        return self.attention(fused, mask)

    def sentence_logits(self, fused: Tensor, mask: Array) -> Tensor:
        if self.sentence_head is None:
            raise ConfigError("sentence head exists only in the jsl setting")
        return self.sentence_head(mean_pool(fused, axis=1, mask=mask))

    def forward(self, batch: ModelInput) -> ModelOutput:
        cfg = self.config
        text = self.encode_text(batch.token_ids, batch.mask)
        audio = video = None
        if cfg.use_audio:
            if batch.audio is None or batch.audio_mask is None:
                raise ConfigError("audio features are required by this model")
            audio = self.encode_audio(batch.audio, batch.audio_mask)
        if cfg.use_video:
            if batch.video is None or batch.video_mask is None:
                raise ConfigError("video features are required by this model")
            video = self.encode_video(batch.video, batch.video_mask)
        fused = self.fuse(text, audio, video, batch.mask)
        emissions, alpha = self.self_attend(fused, batch.mask)
        logits = (self.sentence_logits(fused, batch.mask)
                  if self.sentence_head is not None else None)
        return ModelOutput(emissions, fused, alpha, logits)

    __call__ = forward

    def loss(self, batch: ModelInput,
             output: Optional[ModelOutput] = None) -> Losses:
        """
        Sequence labeling loss (CRF negative log-likelihood or softmax
        cross-entropy), plus the sentence cross-entropy in the jsl setting.
        """
        if batch.labels is None:
            raise ValueError("gold labels are required for the loss")
        out = output or self.forward(batch)
        if self.crf is not None:
            sequence = self.crf.nll(out.emissions, batch.labels, batch.mask)
        else:
            sequence = softmax_cross_entropy(out.emissions, batch.labels,
                                             batch.mask)
        sentence = None
        if out.sentence_logits is not None:
            if batch.sentence_labels is None:
                raise ValueError("sentence labels are required in the jsl "
                                 "setting")
            sentence = sentence_cross_entropy(out.sentence_logits,
                                              batch.sentence_labels)
        return Losses(sequence, sentence)

    def predict(self, batch: ModelInput) -> Prediction:
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                out = self.forward(batch)
        finally:
            self.train(was_training)
        if self.crf is not None:
            tags = self.crf.decode(out.emissions.data, batch.mask)
        else:
            _, tags = softmax_decode(out.emissions, None, batch.mask)
        if out.sentence_logits is None:
            return Prediction(tags)
        probabilities = softmax(out.sentence_logits, axis=-1).data
        return Prediction(tags, np.argmax(probabilities, axis=-1).tolist(),
                          probabilities)


def sentence_cross_entropy(logits: Tensor,
                           labels: npt.NDArray[np.int64]) -> Tensor:
    """Mini-batch mean cross-entropy of softmax(logits) against class ids."""
    y = np.asarray(labels, dtype=np.int64)
    batch, classes = logits.shape
    if y.shape != (batch,):
        raise ValueError(f"{y.shape} labels for a batch of {batch}")
    if y.size and (y.min() < 0 or y.max() >= classes):
        raise IndexError(f"sentence label out of range [0, {classes})")
    picked = log_softmax(logits, axis=-1)[np.arange(batch), y]
    return scale(tsum(picked), -1.0 / batch)
