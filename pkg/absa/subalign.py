# Copyright (c) mm-opinion-miner contributors
"""
SubRip (.srt) parsing and fuzzy alignment of annotated sentences to subtitle
chunks, giving each sentence a (start, end) time span in milliseconds.
"""
import json
import logging
import re
import unicodedata
from dataclasses import dataclass, replace

import fsspec
import pysrt

from .errors import FormatError
from .ingest import Sentence

from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

__all__ = [
    "SubtitleChunk",
    "AlignmentResult",
    "parse_srt",
    "emit_srt",
    "normalize",
    "levenshtein",
    "similarity",
    "align",
    "apply_alignment",
    "DEFAULT_THRESHOLD",
    "DEFAULT_WINDOW",
]

DEFAULT_THRESHOLD = 0.90
DEFAULT_WINDOW = 4

_TIME = re.compile(r"^(\d{2,}):([0-5]\d):([0-5]\d),(\d{3})$")


@dataclass(frozen=True)
class SubtitleChunk:
    counter: int
    start_ms: int
    end_ms: int
    text: str

    def __post_init__(self) -> None:
        if self.counter < 1:
            raise ValueError(f"chunk counter must be >= 1, got {self.counter}")
        if not self.start_ms < self.end_ms:
            raise ValueError(
                f"chunk {self.counter} ends ({self.end_ms}) before it "
                f"starts ({self.start_ms})"
            )


@dataclass(frozen=True)
class AlignmentResult:
    sentence_id: str
    matched_chunk_counters: Tuple[int, ...]
    start_ms: Optional[int]
    end_ms: Optional[int]
    best_similarity: float

    @property
    def matched(self) -> bool:
        return bool(self.matched_chunk_counters)

    @property
    def span(self) -> Optional[Tuple[int, int]]:
        if self.start_ms is None or self.end_ms is None:
            return None
        return (self.start_ms, self.end_ms)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sentence_id": self.sentence_id,
            "matched_chunk_counters": list(self.matched_chunk_counters),
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "best_similarity": round(self.best_similarity, 6),
        }


def _parse_time(value: str, locator: str) -> int:
    m = _TIME.match(value.strip())
    if not m:
        raise FormatError(f"malformed timestamp {value.strip()!r}; "
                          "expected HH:MM:SS,mmm", locator=locator)
    hours, minutes, seconds, millis = (int(g) for g in m.groups())
    return ((hours * 60 + minutes) * 60 + seconds) * 1000 + millis


def parse_srt_text(content: str, source: str = "<srt>") -> List[SubtitleChunk]:
    """
    Strict SubRip grammar: counter line, "start --> end" line, one or more
    text lines, blank line. Text lines are joined with single spaces.
    """
    if content.startswith("\ufeff"):
        content = content[1:]
    lines = content.splitlines()
    chunks: List[SubtitleChunk] = []
    i, n = 0, len(lines)
    while i < n:
        if not lines[i].strip():
            i += 1
            continue
        counter_line = i + 1
        try:
            counter = int(lines[i].strip())
        except ValueError:
            raise FormatError(f"expected a numeric counter, found "
                              f"{lines[i].strip()!r}",
                              locator=f"{source}:{counter_line}") from None
        i += 1
        locator = f"{source}:{i + 1} (chunk {counter})"
        if i >= n or "-->" not in lines[i]:
            raise FormatError("missing '-->' timing line", locator=locator)
        left, _, right = lines[i].partition("-->")
        right_parts = right.split()
        if not right_parts:
            raise FormatError("missing end timestamp", locator=locator)
        start_ms = _parse_time(left, locator)
        end_ms = _parse_time(right_parts[0], locator)
        i += 1
        text_lines: List[str] = []
        while i < n and lines[i].strip():
            text_lines.append(lines[i].strip())
            i += 1
        try:
            chunks.append(SubtitleChunk(counter, start_ms, end_ms,
                                        " ".join(text_lines)))
        except ValueError as e:
            raise FormatError(str(e), locator=locator) from None
    return chunks


def parse_srt(path: str) -> List[SubtitleChunk]:
    """Read a UTF-8 (optionally BOM-prefixed) .srt file."""
    with fsspec.open(path, "rt", encoding="utf-8-sig") as f:
        chunks = parse_srt_text(f.read(), path)
    logging.info(f"read {len(chunks):,} subtitle chunks from {path}")
    return chunks


def emit_srt(chunks: Iterable[SubtitleChunk], path: str) -> None:
    """Write chunks as a SubRip file."""
    subs = pysrt.SubRipFile(items=[
        pysrt.SubRipItem(
            index=c.counter,
            start=pysrt.SubRipTime.from_ordinal(c.start_ms),
            end=pysrt.SubRipTime.from_ordinal(c.end_ms),
            text=c.text,
        )
        for c in chunks
    ])
    with fsspec.open(path, "wt", encoding="utf-8", newline="\n") as f:
        subs.write_into(f, eol="\n")


def normalize(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace."""
    stripped = "".join(
        ch for ch in text.lower()
        if not unicodedata.category(ch).startswith("P")
    )
    return " ".join(stripped.split())


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert, delete and substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[-1]


def _similarity_normalized(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def similarity(a: str, b: str) -> float:
    """1 - levenshtein / max length, on normalized text."""
    return _similarity_normalized(normalize(a), normalize(b))


def _align_one(sentence: Sentence, texts: Sequence[str],
               chunks: Sequence[SubtitleChunk], threshold: float,
               window: int) -> AlignmentResult:
    target = normalize(sentence.surface)
    best = 0.0
    matched: Dict[int, SubtitleChunk] = {}
    for i in range(len(chunks)):
        for w in range(1, window + 1):
            if i + w > len(chunks):
                break
            candidate = " ".join(t for t in texts[i:i + w] if t)
            longest = max(len(candidate), len(target))
            bound = min(len(candidate), len(target)) / longest if longest else 1.0
            if bound <= threshold and bound <= best:
                continue
            score = _similarity_normalized(target, candidate)
            best = max(best, score)
            if score > threshold or candidate == target:
                for k in range(i, i + w):
                    matched[k] = chunks[k]
    if not matched:
        return AlignmentResult(sentence.id, (), None, None, best)
    hits = sorted(matched.values(), key=lambda c: (c.start_ms, c.counter))
    return AlignmentResult(
        sentence.id,
        tuple(c.counter for c in hits),
        min(c.start_ms for c in hits),
        max(c.end_ms for c in hits),
        best,
    )


def align(sentences: Sequence[Sentence], chunks: Sequence[SubtitleChunk],
          threshold: float = DEFAULT_THRESHOLD,
          window: int = DEFAULT_WINDOW) -> List[AlignmentResult]:
    """
    Associate each sentence with every chunk (or run of up to `window`
    consecutive chunks) it matches exactly or with similarity above
    `threshold`. A matched sentence spans [min start, max end] of its chunks.
    A chunk may be associated with several sentences.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    ordered = sorted(chunks, key=lambda c: (c.start_ms, c.counter))
    texts = [normalize(c.text) for c in ordered]
    results = [_align_one(s, texts, ordered, threshold, window)
               for s in sentences]
    matched = sum(1 for r in results if r.matched)
    logging.info(f"aligned {matched:,} of {len(results):,} sentences "
                 f"(threshold={threshold}, window={window})")
    for r in results:
        if not r.matched:
            logging.warning(f"sentence {r.sentence_id} unmatched "
                            f"(best similarity {r.best_similarity:.3f})")
    return results


def apply_alignment(sentences: Iterable[Sentence],
                    results: Iterable[AlignmentResult]) -> List[Sentence]:
    """Fill in time spans from alignment results, keyed by sentence id."""
    spans = {r.sentence_id: r.span for r in results if r.span is not None}
    return [
        replace(s, time_span=spans[s.id]) if s.id in spans else s
        for s in sentences
    ]


def write_alignment(results: Iterable[AlignmentResult], path: str) -> int:
    cnt = 0
    with fsspec.open(path, "wt", encoding="utf-8") as f:
        for r in results:
            f.write(json.dumps(r.to_dict(), sort_keys=True))
            f.write("\n")
            cnt += 1
    return cnt
