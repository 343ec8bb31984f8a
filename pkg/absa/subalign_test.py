"""
Tests for SubRip parsing and sentence alignment.
"""
from pathlib import Path

import pytest

from .errors import FormatError
from .ingest import Sentence
from .subalign import (
    SubtitleChunk, align, apply_alignment, emit_srt, levenshtein, parse_srt,
    parse_srt_text, similarity
)

FIGURE = """168
00:20:41,150 --> 00:20:45,109
- How did he do that?
- Made him an offer he could not refuse.
"""


def sentence(sid: str, text: str) -> Sentence:
    return Sentence(sid, tuple(text.split()), text=text)


def test_parse_figure_chunk() -> None:
    chunks = parse_srt_text(FIGURE)
    assert chunks == [SubtitleChunk(
        168, 1241150, 1245109,
        "- How did he do that? - Made him an offer he could not refuse.",
    )]


def test_parse_srt_file(tmp_path: Path) -> None:
    path = tmp_path / "subs.srt"
    path.write_bytes(
        "﻿1\r\n00:00:00,000 --> 00:00:01,000\r\nhello\r\n\r\n"
        "2\r\n00:00:01,500 --> 00:00:02,000\r\nworld\r\n".encode("utf-8")
    )
    chunks = parse_srt(str(path))
    assert chunks[0] == SubtitleChunk(1, 0, 1000, "hello")
    assert chunks[1].start_ms == 1500

    empty = tmp_path / "empty.srt"
    empty.write_text("")
    assert parse_srt(str(empty)) == []


def test_parse_errors() -> None:
    with pytest.raises(FormatError) as info:
        parse_srt_text("1\n00:00:00,000 00:00:01,000\nhello\n")
    assert "chunk 1" in str(info.value)
    with pytest.raises(FormatError) as info:
        parse_srt_text("1\n00:00:00,000 --> 00:00:01,000\nhi\n\n"
                       "7\n00:00:0x,000 --> 00:00:01,000\nhello\n")
    assert "chunk 7" in str(info.value)
    assert ":6" in str(info.value)


def test_emit_round_trip(tmp_path: Path) -> None:
    chunks = [
        SubtitleChunk(1, 0, 1000, "hello there"),
        SubtitleChunk(2, 3_723_004, 3_725_000, "second line"),
    ]
    path = tmp_path / "out.srt"
    emit_srt(chunks, str(path))
    assert parse_srt(str(path)) == chunks


def test_similarity() -> None:
    assert similarity("abc", "abc") == 1.0
    assert similarity("kitten", "sitting") == pytest.approx(1 - 3 / 7)
    assert similarity("ABC ", "abc") == 1.0
    assert similarity("", "") == 1.0
    assert similarity("abc", "xyz") == similarity("xyz", "abc")
    assert levenshtein("cow", "bowl") == 2


def test_align() -> None:
    chunks = [
        SubtitleChunk(1, 1000, 2000, "the battery lasts all day"),
        SubtitleChunk(2, 2500, 3000, "and the screen is bright"),
        SubtitleChunk(3, 4000, 5000, "honestly I was surprised by"),
        SubtitleChunk(4, 5000, 6000, "how good the camera is"),
        SubtitleChunk(5, 7000, 8000, "something else entirely"),
    ]
    sentences = [
        sentence("exact", "The battery lasts all day."),
        sentence("split", "Honestly, I was surprised by how good the camera is!"),
        sentence("near", "and the screen is brigt"),
        sentence("miss", "a completely unrelated sentence here"),
    ]
    results = {r.sentence_id: r for r in align(sentences, chunks)}

    assert results["exact"].span == (1000, 2000)
    assert results["exact"].best_similarity == 1.0
    assert results["split"].span == (4000, 6000)
    assert results["split"].matched_chunk_counters == (3, 4)
    assert results["near"].span == (2500, 3000)
    assert not results["miss"].matched
    assert results["miss"].span is None
    assert results["miss"].best_similarity < 0.9

    # order of sentences does not matter
    reverse = {r.sentence_id: r for r in align(sentences[::-1], chunks)}
    assert reverse == results

    aligned = apply_alignment(sentences, results.values())
    assert aligned[0].time_span == (1000, 2000)
    assert aligned[3].time_span is None


def test_align_below_threshold() -> None:
    chunks = [SubtitleChunk(1, 0, 1000, "abcdefghij")]
    # two substitutions out of ten characters: similarity 0.8
    result = align([sentence("s", "abcdefghXY")], chunks)[0]
    assert not result.matched
    assert result.best_similarity == pytest.approx(0.8)


def test_two_chunk_span() -> None:
    chunks = [
        SubtitleChunk(1, 1000, 2000, "first part of it"),
        SubtitleChunk(2, 2500, 3000, "first part of it"),
    ]
    result = align([sentence("s", "first part of it")], chunks)[0]
    assert result.span == (1000, 3000)
