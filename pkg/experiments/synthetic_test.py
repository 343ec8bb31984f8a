"""
Tests for the synthetic corpus generator.
"""
from collections import Counter
from pathlib import Path

import numpy as np

from absa.ingest import load_dataset
from absa.labels import SentimentClass
from absa.subalign import align, parse_srt
from media.features import load_video_features, read_wav

from .synthetic import ASPECTS, MEDIA_REF, make_corpus, write_corpus


def test_corpus_shape() -> None:
    corpus = make_corpus(seed=7, n=30)
    assert len(corpus.sentences) == 30
    assert Counter(s.sentiment for s in corpus.sentences) == {
        c: 10 for c in SentimentClass}
    for s in corpus.sentences:
        assert s.gold is not None and len(s.chunks()) == 1
        chunk = s.chunks()[0]
        assert s.tokens[chunk.start:chunk.end] in ASPECTS
        assert chunk.sentiment is s.sentiment
        assert s.media_ref == MEDIA_REF
    assert corpus.audio.duration_ms == 30_000
    assert len(corpus.video) == 30 * 25


def test_modality_only_text_is_uninformative() -> None:
    corpus = make_corpus(seed=1, n=12, modality_only=True)
    tails = {s.tokens[-2:] for s in corpus.sentences}
    assert tails == {("is", "here")}


def test_cluster_means_shared_across_seeds() -> None:
    a = make_corpus(seed=0, n=3, noise=0.0)
    b = make_corpus(seed=5, n=3, noise=0.0)
    means_a = {s.sentiment: a.video.frames[25 * i]
               for i, s in enumerate(a.sentences)}
    means_b = {s.sentiment: b.video.frames[25 * i]
               for i, s in enumerate(b.sentences)}
    for c in SentimentClass:
        assert np.allclose(means_a[c], means_b[c])


def test_write_is_byte_identical(tmp_path: Path) -> None:
    first = write_corpus(make_corpus(seed=7), str(tmp_path / "a"))
    second = write_corpus(make_corpus(seed=7), str(tmp_path / "b"))
    for key in first:
        assert Path(first[key]).read_bytes() == Path(second[key]).read_bytes()


def test_written_files_load_back(tmp_path: Path) -> None:
    corpus = make_corpus(seed=2, n=9)
    paths = write_corpus(corpus, str(tmp_path))
    sentences = load_dataset(paths["sentences"])
    assert sentences == corpus.sentences
    signal = read_wav(paths["wav"])
    assert len(signal) == len(corpus.audio)
    video = load_video_features(paths["video"], 16)
    assert np.allclose(video.frames, corpus.video.frames, atol=1e-6)
    # repeated sentences match each other's subtitles too, so spans can only
    # grow beyond the sentence's own second
    for s, r in zip(sentences, align(sentences, parse_srt(paths["subtitles"]))):
        assert r.span is not None and s.time_span is not None
        assert r.span[0] <= s.time_span[0] and s.time_span[1] <= r.span[1]
