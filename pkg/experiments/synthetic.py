# Copyright (c) mm-opinion-miner contributors
"""
Small, fully determined review corpora with matching subtitles, audio and
video features, for smoke runs and for tests of learnability.

Every sentence mentions one of three aspect phrases and carries one
sentiment, balanced across classes. Its one second of audio is a sine
burst at a class-specific frequency and its video frames scatter around a
class-specific cluster mean. With `modality_only` the words say nothing
about sentiment, so only the media can tell the classes apart.
"""
import logging
import os
from dataclasses import dataclass

import fsspec
import numpy as np
import numpy.typing as npt

from absa.ingest import Sentence, save_dataset
from absa.labels import SENTIMENT_ORDER, SentimentClass, TagSequence
from absa.subalign import SubtitleChunk, emit_srt
from media.features import (
    AudioSignal, FeatureSequence, Modality, write_video_features, write_wav
)

from typing import Dict, List, Tuple

__all__ = ["SyntheticCorpus", "make_corpus", "write_corpus", "MEDIA_REF",
           "ASPECTS"]

MEDIA_REF = "synth"

ASPECTS: Tuple[Tuple[str, ...], ...] = (
    ("battery", "life"),
    ("screen",),
    ("camera", "quality"),
)
_OPENERS = ("honestly", "overall", "so", "well")
_OPINION = {
    SentimentClass.POSITIVE: ("is", "great"),
    SentimentClass.NEGATIVE: ("is", "terrible"),
    SentimentClass.NEUTRAL: ("is", "there"),
}
_NEUTRAL_TAIL = ("is", "here")
# sine frequencies (Hz) per class, far apart at any window of 64+ samples
_TONES = {
    SentimentClass.POSITIVE: 500.0,
    SentimentClass.NEGATIVE: 1500.0,
    SentimentClass.NEUTRAL: 2500.0,
}


@dataclass(frozen=True)
class SyntheticCorpus:
    sentences: List[Sentence]
    chunks: List[SubtitleChunk]
    audio: AudioSignal
    video: FeatureSequence
    fps: float
    embeddings: Dict[str, npt.NDArray[np.float64]]


def _sentence(i: int, rng: np.random.Generator, sentiment: SentimentClass,
              aspect: Tuple[str, ...], modality_only: bool,
              span: Tuple[int, int]) -> Sentence:
    opener = _OPENERS[int(rng.integers(len(_OPENERS)))]
    tail = _NEUTRAL_TAIL if modality_only else _OPINION[sentiment]
    tokens = (opener, "the") + aspect + tail
    tags = (["O", "O", f"B-{sentiment.short}"]
            + [f"I-{sentiment.short}"] * (len(aspect) - 1)
            + ["O"] * len(tail))
    return Sentence(f"s{i:04d}", tokens, TagSequence.infer(tags), sentiment,
                    span, MEDIA_REF, " ".join(tokens))


def make_corpus(seed: int = 0, n: int = 50, *, modality_only: bool = False,
                sample_rate_hz: int = 8000, span_ms: int = 1000,
                video_dim: int = 16, fps: float = 25.0,
                embedding_dim: int = 8,
                noise: float = 0.1, cluster_seed: int = 0) -> SyntheticCorpus:
    """
    `seed` draws the sentences and noise; `cluster_seed` fixes the video
    cluster means, so corpora with different seeds share one media
    vocabulary and can serve as held-out data for each other.
    """
    if n < 3:
        raise ValueError(f"need at least 3 sentences, got {n}")
    rng = np.random.default_rng(seed)
    classes = [SENTIMENT_ORDER[i % 3] for i in range(n)]
    order = rng.permutation(n)
    classes = [classes[int(j)] for j in order]

    sentences: List[Sentence] = []
    chunks: List[SubtitleChunk] = []
    for i, sentiment in enumerate(classes):
        span = (i * span_ms, (i + 1) * span_ms)
        aspect = ASPECTS[(i // 3) % len(ASPECTS)]
        s = _sentence(i, rng, sentiment, aspect, modality_only, span)
        sentences.append(s)
        chunks.append(SubtitleChunk(i + 1, span[0], span[1], s.surface))

    per_span = int(sample_rate_hz * span_ms / 1000)
    t = np.arange(per_span) / sample_rate_hz
    pieces = []
    for sentiment in classes:
        burst = 0.5 * np.sin(2 * np.pi * _TONES[sentiment] * t)
        pieces.append(burst + rng.normal(0.0, 0.01, per_span))
    samples = np.clip(np.concatenate(pieces), -1.0, 1.0 - 2 ** -15)
    audio = AudioSignal(samples, sample_rate_hz)

    centres = np.random.default_rng(cluster_seed)
    means = {c: centres.normal(0.0, 1.0, video_dim) for c in SENTIMENT_ORDER}
    per_span_frames = int(round(fps * span_ms / 1000))
    frames = np.concatenate([
        means[c] + rng.normal(0.0, noise, (per_span_frames, video_dim))
        for c in classes
    ])
    times = np.arange(frames.shape[0]) * 1000.0 / fps
    video = FeatureSequence(Modality.VIDEO, video_dim, frames, times)

    vocab = sorted({tok for s in sentences for tok in s.tokens})
    embeddings = {tok: rng.normal(0.0, 0.3, embedding_dim) for tok in vocab}
    logging.info(f"generated {n:,} synthetic sentences (seed={seed}, "
                 f"modality_only={modality_only})")
    return SyntheticCorpus(sentences, chunks, audio, video, fps, embeddings)


def write_corpus(corpus: SyntheticCorpus, out_dir: str) -> Dict[str, str]:
    """
    Write sentences.jsonl, subtitles.srt, media/<ref>.wav, media/<ref>.feat
    and embeddings.txt. Output bytes depend only on the corpus.
    """
    fs, _, _ = fsspec.get_fs_token_paths(out_dir)
    media_dir = os.path.join(out_dir, "media")
    fs.makedirs(media_dir, exist_ok=True)
    paths = {
        "sentences": os.path.join(out_dir, "sentences.jsonl"),
        "subtitles": os.path.join(out_dir, "subtitles.srt"),
        "wav": os.path.join(media_dir, f"{MEDIA_REF}.wav"),
        "video": os.path.join(media_dir, f"{MEDIA_REF}.feat"),
        "embeddings": os.path.join(out_dir, "embeddings.txt"),
    }
    save_dataset(corpus.sentences, paths["sentences"])
    emit_srt(corpus.chunks, paths["subtitles"])
    write_wav(corpus.audio, paths["wav"])
    write_video_features(corpus.video, paths["video"], fps=corpus.fps)
    with fsspec.open(paths["embeddings"], "wt", encoding="utf-8") as f:
        for token, vec in corpus.embeddings.items():
            f.write(token + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")
    logging.info(f"wrote synthetic corpus of {len(corpus.sentences):,} "
                 f"sentences to {out_dir}")
    return paths
