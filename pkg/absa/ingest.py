# Copyright (c) mm-opinion-miner contributors
"""
Tokenization, vocabularies, pre-trained embeddings and dataset files.
"""
import json
import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum

import fsspec
import numpy as np
import numpy.typing as npt

from .errors import FormatError, ValidationError
from .labels import (
    Chunk, Scheme, SentimentClass, Tag, AeTag, TagSequence, as_collapsed,
    decouple, extract_chunks, sentence_sentiment, validate
)

from typing import (
    Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple
)

__all__ = [
    "Token",
    "Sentence",
    "Vocabulary",
    "EmbeddingTable",
    "SpanKind",
    "SpanAnnotation",
    "tokenize",
    "build_vocab",
    "load_embeddings",
    "random_embeddings",
    "assign_polarity_by_overlap",
    "spans_to_tags",
    "filter_single_sentiment",
    "implied_sentiment",
    "sentence_to_record",
    "trim",
    "load_dataset",
    "save_dataset",
    "MAX_LENGTH",
]

MAX_LENGTH = 300

PAD = "<pad>"
UNK = "<unk>"


@dataclass(frozen=True)
class Token:
    surface: str
    index: int
    start: int
    end: int


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> List[Token]:
    """
    Split on whitespace, then detach leading and trailing punctuation as
    single-character tokens. Character offsets into `text` are preserved.
    """
    tokens: List[Token] = []

    def emit(start: int, end: int) -> None:
        tokens.append(Token(text[start:end], len(tokens), start, end))

    pos, n = 0, len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        end = pos
        while end < n and not text[end].isspace():
            end += 1
        lo, hi = pos, end
        while lo < hi and _is_punct(text[lo]):
            emit(lo, lo + 1)
            lo += 1
        trailing: List[int] = []
        while hi > lo and _is_punct(text[hi - 1]):
            hi -= 1
            trailing.append(hi)
        if lo < hi:
            emit(lo, hi)
        for t in reversed(trailing):
            emit(t, t + 1)
        pos = end
    return tokens


@dataclass(frozen=True)
class Sentence:
    """
    A tokenized sentence with optional gold tags, sentence-level sentiment
    and a time span (milliseconds) into its source media.
    """
    id: str
    tokens: Tuple[str, ...]
    gold: Optional[TagSequence] = None
    sentiment: Optional[SentimentClass] = None
    time_span: Optional[Tuple[int, int]] = None
    media_ref: Optional[str] = None
    text: Optional[str] = None

    def __post_init__(self) -> None:
        if self.gold is not None and len(self.gold) != len(self.tokens):
            raise ValidationError(
                f"{len(self.gold)} tags for {len(self.tokens)} tokens",
                sentence_id=self.id,
            )
        if self.time_span is not None:
            start, end = self.time_span
            if not start < end:
                raise ValidationError(
                    f"time span [{start}, {end}) is empty", sentence_id=self.id
                )

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def surface(self) -> str:
        """Text used for subtitle matching."""
        return self.text if self.text is not None else " ".join(self.tokens)

    def chunks(self) -> List[Chunk]:
        if self.gold is None:
            return []
        return extract_chunks(self.gold)


def trim(sentence: Sentence, max_length: int = MAX_LENGTH) -> Sentence:
    """Keep the first `max_length` tokens and their tags."""
    if len(sentence) <= max_length:
        return sentence
    gold = sentence.gold.trimmed(max_length) if sentence.gold else None
    return replace(sentence, tokens=sentence.tokens[:max_length], gold=gold)


class Vocabulary:
    """
    Token to index map built from training data. PAD is index 0 and UNK
    index 1; every other string maps to UNK when unseen.
    """
    def __init__(self, tokens: Sequence[str], min_frequency: int = 1):
        self.min_frequency = min_frequency
        self.itos: List[str] = [PAD, UNK]
        self.itos.extend(t for t in tokens if t not in (PAD, UNK))
        self.stoi: Dict[str, int] = {t: i for i, t in enumerate(self.itos)}

    pad_index = 0
    unk_index = 1

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: object) -> bool:
        return token in self.stoi

    def __str__(self) -> str:
        return f"Vocabulary{{size={len(self):,}, min_frequency={self.min_frequency}}}"

    def lookup(self, token: str) -> int:
        return self.stoi.get(token, self.unk_index)

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.lookup(t) for t in tokens]

    def to_json(self) -> str:
        return json.dumps({"min_frequency": self.min_frequency,
                           "tokens": self.itos[2:]})

    @classmethod
    def from_json(cls, payload: str) -> "Vocabulary":
        data = json.loads(payload)
        return cls(data["tokens"], int(data.get("min_frequency", 1)))


def build_vocab(sentences: Iterable[Sentence],
                min_frequency: int = 1) -> Vocabulary:
    """
    Every training token seen at least `min_frequency` times, ordered by
    descending frequency then lexicographically.
    """
    counts: Counter[str] = Counter()
    n = 0
    for sentence in sentences:
        counts.update(sentence.tokens)
        n += 1
    if n == 0 or not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        (t for t, c in counts.items() if c >= min_frequency),
        key=lambda t: (-counts[t], t),
    )
    vocab = Vocabulary(kept, min_frequency)
    logging.info(f"built vocabulary of {len(vocab):,} entries from {n:,} "
                 f"sentences ({len(counts) - len(kept):,} rare tokens -> UNK)")
    return vocab


@dataclass
class EmbeddingTable:
    dimension: int
    matrix: npt.NDArray[np.float64]
    trainable: bool = True
    found: int = 0
    missing: List[str] = field(default_factory=list)

    @property
    def coverage(self) -> float:
        total = self.found + len(self.missing)
        return self.found / total if total else 0.0


def _init_rows(rng: np.random.Generator, rows: int, dim: int,
               scale: float) -> npt.NDArray[np.float64]:
    return rng.uniform(-scale, scale, size=(rows, dim))


def random_embeddings(vocab: Vocabulary, dimension: int, *, seed: int = 0,
                      scale: float = 0.05) -> EmbeddingTable:
    """Embeddings trained from scratch (no pre-trained file)."""
    rng = np.random.default_rng(seed)
    matrix = _init_rows(rng, len(vocab), dimension, scale)
    matrix[vocab.pad_index] = 0.0
    return EmbeddingTable(dimension, matrix, True, 0, list(vocab.itos[2:]))


def load_embeddings(path: str, vocab: Vocabulary, *, seed: int = 0,
                    scale: float = 0.05,
                    trainable: bool = True) -> EmbeddingTable:
    """
    Read a GloVe-style text file ("token v1 v2 ... vD" per line). Rows for
    vocabulary tokens found in the file are copied verbatim; the rest are
    sampled uniformly from [-scale, scale] with the given seed.
    """
    rows: Dict[int, npt.NDArray[np.float64]] = {}
    dim: Optional[int] = None
    with fsspec.open(path, "rt", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise FormatError("expected a token followed by numbers",
                                  locator=f"{path}:{lineno}")
            if dim is None:
                dim = len(parts) - 1
            elif len(parts) - 1 != dim:
                raise FormatError(
                    f"expected {dim} values, found {len(parts) - 1}",
                    locator=f"{path}:{lineno}",
                )
            try:
                values = np.array([float(x) for x in parts[1:]],
                                  dtype=np.float64)
            except ValueError as e:
                raise FormatError(f"unparseable number ({e})",
                                  locator=f"{path}:{lineno}") from None
            idx = vocab.stoi.get(parts[0])
            if idx is not None and idx not in rows:
                rows[idx] = values
    if dim is None:
        raise FormatError("no vectors found", locator=path)

    rng = np.random.default_rng(seed)
    matrix = _init_rows(rng, len(vocab), dim, scale)
    matrix[vocab.pad_index] = 0.0
    missing: List[str] = []
    for i, token in enumerate(vocab.itos):
        if i == vocab.pad_index:
            continue
        if i in rows:
            matrix[i] = rows[i]
        else:
            missing.append(token)
    table = EmbeddingTable(dim, matrix, trainable, len(rows), missing)
    logging.info(f"loaded {table.found:,} of {len(vocab) - 1:,} vectors "
                 f"(dim={dim}, coverage={table.coverage:.1%}) from {path}")
    if missing:
        logging.warning(f"{len(missing):,} vocabulary entries have no "
                        f"pre-trained vector, e.g. {missing[:5]}")
    return table


class SpanKind(str, Enum):
    TARGET = "target"
    POLARITY = "polarity"


@dataclass(frozen=True)
class SpanAnnotation:
    """Character span [start_char, end_char) into the raw sentence text."""
    start_char: int
    end_char: int
    kind: SpanKind
    polarity: Optional[SentimentClass] = None

    def __post_init__(self) -> None:
        if not 0 <= self.start_char < self.end_char:
            raise ValidationError(
                f"invalid span [{self.start_char}, {self.end_char})"
            )
        if self.kind is SpanKind.POLARITY and self.polarity is None:
            raise ValidationError("polarity span without a polarity value")

    def overlap(self, other: "SpanAnnotation") -> int:
        return max(0, min(self.end_char, other.end_char)
                   - max(self.start_char, other.start_char))


def assign_polarity_by_overlap(
        targets: Sequence[SpanAnnotation],
        polarities: Sequence[SpanAnnotation]) -> List[SentimentClass]:
    """
    Each target takes the polarity of the polarity span it overlaps most;
    ties go to the earliest polarity span (by start, then end) and targets
    with no overlap are neutral.
    """
    ordered = sorted(polarities, key=lambda p: (p.start_char, p.end_char))
    result: List[SentimentClass] = []
    for target in targets:
        best, best_overlap = SentimentClass.NEUTRAL, 0
        for p in ordered:
            amount = target.overlap(p)
            if amount > best_overlap and p.polarity is not None:
                best, best_overlap = p.polarity, amount
        result.append(best)
    return result


def spans_to_tags(tokens: Sequence[Token], targets: Sequence[SpanAnnotation],
                  polarities: Sequence[SpanAnnotation]) -> TagSequence:
    """
    Convert span-style annotations into collapsed tags: tokens overlapping a
    target become B/I with the target's overlap-assigned polarity.
    """
    tags = [Tag(AeTag.O)] * len(tokens)
    sentiments = assign_polarity_by_overlap(targets, polarities)
    for target, sentiment in sorted(zip(targets, sentiments),
                                    key=lambda x: x[0].start_char):
        first = True
        for tok in tokens:
            if tok.end <= target.start_char or tok.start >= target.end_char:
                continue
            if not tags[tok.index].is_outside:
                continue
            position = AeTag.B if first else AeTag.I
            tags[tok.index] = Tag(position, sentiment)
            first = False
    return TagSequence(Scheme.COLLAPSED, tuple(tags))


def filter_single_sentiment(sentences: Iterable[Sentence]) -> List[Sentence]:
    """
    Keep sentences whose aspects share a single sentiment (or that have no
    aspect at all), filling in the sentence sentiment when missing:
    the shared sentiment, or neutral for aspect-free sentences.
    """
    kept: List[Sentence] = []
    dropped = 0
    for sentence in sentences:
        gold = (as_collapsed(sentence.gold)
                if sentence.gold is not None else None)
        if gold is None:
            raise ValidationError("sentiment-bearing gold tags required",
                                  sentence_id=sentence.id)
        distinct = {t.sentiment for t in gold.tags if t.sentiment is not None}
        if len(distinct) > 1:
            dropped += 1
            continue
        sentiment = sentence.sentiment
        if sentiment is None:
            sentiment = distinct.pop() if distinct else SentimentClass.NEUTRAL
        sentence = replace(sentence, gold=gold, sentiment=sentiment)
        kept.append(sentence)
    logging.info(f"kept {len(kept):,} single-sentiment sentences, "
                 f"dropped {dropped:,}")
    return kept


def implied_sentiment(sentence: Sentence) -> Optional[SentimentClass]:
    """Sentence sentiment, falling back to what its collapsed tags imply."""
    if sentence.sentiment is not None:
        return sentence.sentiment
    gold = (as_collapsed(sentence.gold)
            if sentence.gold is not None else None)
    if gold is not None:
        return sentence_sentiment(decouple(gold)[1])
    return None


# -- dataset files ----------------------------------------------------------

def _sentence_from_record(record: Mapping[str, Any], locator: str,
                          strict: bool) -> Sentence:
    if not isinstance(record, dict):
        raise FormatError("expected a JSON object", locator=locator)
    sid = record.get("id")
    if sid is None:
        raise FormatError("missing field 'id'", locator=locator)
    sid = str(sid)

    text = record.get("text")
    raw_tokens = record.get("tokens")
    token_objs: List[Token] = []
    if raw_tokens is None:
        if text is None:
            raise FormatError("record needs 'tokens' or 'text'",
                              locator=locator)
        token_objs = tokenize(str(text))
        tokens = tuple(t.surface for t in token_objs)
    else:
        if not isinstance(raw_tokens, list):
            raise FormatError("'tokens' must be an array", locator=locator)
        tokens = tuple(str(t) for t in raw_tokens)

    gold: Optional[TagSequence] = None
    try:
        if record.get("tags") is not None:
            gold = TagSequence.infer(record["tags"])
        elif record.get("spans") is not None:
            if not token_objs:
                raise FormatError("span annotations need raw 'text'",
                                  locator=locator)
            spans = [
                SpanAnnotation(
                    int(s["start"]), int(s["end"]), SpanKind(s["kind"]),
                    SentimentClass.parse(s["polarity"])
                    if s.get("polarity") else None,
                )
                for s in record["spans"]
            ]
            gold = spans_to_tags(
                token_objs,
                [s for s in spans if s.kind is SpanKind.TARGET],
                [s for s in spans if s.kind is SpanKind.POLARITY],
            )
        sentiment = (SentimentClass.parse(record["sentiment"])
                     if record.get("sentiment") else None)
    except (KeyError, TypeError) as e:
        raise FormatError(f"malformed field ({e})", locator=locator) from None
    except FormatError:
        raise
    except ValidationError as e:
        raise ValidationError(str(e), sentence_id=sid, index=e.index) from None
    except ValueError as e:
        raise FormatError(str(e), locator=locator) from None

    span: Optional[Tuple[int, int]] = None
    if record.get("start_ms") is not None and record.get("end_ms") is not None:
        span = (int(record["start_ms"]), int(record["end_ms"]))

    if gold is not None and strict:
        validate(gold, sentence_id=sid)
    media = record.get("media_ref")
    return Sentence(sid, tokens, gold, sentiment, span,
                    str(media) if media is not None else None,
                    str(text) if text is not None else None)


def _read_jsonl(path: str, strict: bool) -> List[Sentence]:
    sentences: List[Sentence] = []
    with fsspec.open(path, "rt", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            locator = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"invalid JSON ({e.msg})",
                                  locator=locator) from None
            sentences.append(_sentence_from_record(record, locator, strict))
    return sentences


def _read_conll(path: str, strict: bool) -> List[Sentence]:
    sentences: List[Sentence] = []
    tokens: List[str] = []
    tags: List[str] = []
    header: Dict[str, str] = {}
    start_line = 1

    def flush() -> None:
        nonlocal tokens, tags, header
        if tokens:
            sid = header.get("id", str(len(sentences)))
            record: Dict[str, Any] = {"id": sid, "tokens": tokens}
            if all(tags):
                record["tags"] = tags
            elif any(tags):
                raise FormatError("some tokens have tags and some do not",
                                  locator=f"{path}:{start_line}")
            if "sentiment" in header:
                record["sentiment"] = header["sentiment"]
            if "media_ref" in header:
                record["media_ref"] = header["media_ref"]
            sentences.append(
                _sentence_from_record(record, f"{path}:{start_line}", strict)
            )
        tokens, tags, header = [], [], {}

    with fsspec.open(path, "rt", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                flush()
                start_line = lineno + 1
                continue
            if line.startswith("#") and not tokens:
                key, _, value = line[1:].strip().partition(":")
                header[key.strip()] = value.strip()
                continue
            parts = line.split(" ")
            if len(parts) == 1:
                tokens.append(parts[0])
                tags.append("")
            elif len(parts) == 2:
                tokens.append(parts[0])
                tags.append(parts[1])
            else:
                raise FormatError(
                    f"expected 'TOKEN TAG', found {len(parts)} columns",
                    locator=f"{path}:{lineno}",
                )
        flush()
    return sentences


def load_dataset(path: str, format: Optional[str] = None, *,
                 strict: bool = True,
                 max_length: int = MAX_LENGTH) -> List[Sentence]:
    """
    Read a CoNLL or JSONL dataset (format inferred from the extension when not
    given). Gold tags are validated strictly unless `strict` is False;
    sentences longer than `max_length` are trimmed.
    """
    fmt = (format or ("conll" if path.endswith((".conll", ".txt"))
                      else "jsonl")).lower()
    if fmt == "jsonl":
        sentences = _read_jsonl(path, strict)
    elif fmt == "conll":
        sentences = _read_conll(path, strict)
    else:
        raise ValueError(f"invalid dataset format {fmt!r}; "
                         "expected 'conll' or 'jsonl'")
    ids = set()
    for s in sentences:
        if s.id in ids:
            raise ValidationError("duplicate sentence id", sentence_id=s.id)
        ids.add(s.id)
    trimmed = [trim(s, max_length) for s in sentences]
    n_trimmed = sum(1 for a, b in zip(sentences, trimmed) if a is not b)
    if n_trimmed:
        logging.info(f"trimmed {n_trimmed:,} sentences to {max_length} tokens")
    logging.info(f"read {len(trimmed):,} sentences from {path}")
    return trimmed


def sentence_to_record(sentence: Sentence) -> Dict[str, Any]:
    """Canonical JSONL form."""
    record: Dict[str, Any] = {"id": sentence.id,
                              "tokens": list(sentence.tokens)}
    if sentence.text is not None:
        record["text"] = sentence.text
    if sentence.gold is not None:
        record["tags"] = sentence.gold.strings()
    if sentence.sentiment is not None:
        record["sentiment"] = sentence.sentiment.value
    if sentence.time_span is not None:
        record["start_ms"], record["end_ms"] = sentence.time_span
    if sentence.media_ref is not None:
        record["media_ref"] = sentence.media_ref
    return record


def save_dataset(sentences: Iterable[Sentence], path: str) -> int:
    """Write sentences as canonical JSONL. Returns the number written."""
    cnt = 0
    with fsspec.open(path, "wt", encoding="utf-8") as f:
        for sentence in sentences:
            f.write(json.dumps(sentence_to_record(sentence),
                               ensure_ascii=False, sort_keys=True))
            f.write("\n")
            cnt += 1
    return cnt
