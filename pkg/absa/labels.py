# Copyright (c) mm-opinion-miner contributors
"""
Tagging schemes for aspect extraction (AE), token-level sentiment (SC) and the
collapsed scheme that fuses both into a single tag, plus chunk extraction.

Labels serialize as the ASCII strings used in CoNLL files: "O", "B", "I",
"B-POS", "I-NEG", "B-NEU", ...
"""
from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .errors import ValidationError

from typing import (
    Dict, Iterable, List, Optional, Sequence, Tuple, Union
)

__all__ = [
    "SentimentClass",
    "AeTag",
    "Tag",
    "CollapsedTag",
    "Scheme",
    "TagSequence",
    "SentimentSequence",
    "Chunk",
    "TagSet",
    "parse_tag",
    "collapse",
    "decouple",
    "extract_chunks",
    "tagset",
    "validate",
    "repair",
    "to_ae",
    "as_collapsed",
    "sentence_sentiment",
]


class SentimentClass(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"

    @property
    def short(self) -> str:
        """Three letter code used inside tag strings."""
        return _SHORT[self]

    @property
    def symbol(self) -> str:
        return _SYMBOL[self]

    @classmethod
    def parse(cls, value: str) -> "SentimentClass":
        """
        Accepts the full name, the three letter code or the +/-/0 symbol
        (case-insensitive).
        """
        key = value.strip().lower()
        found = _ALIASES.get(key)
        if found is None:
            raise ValueError(f"unknown sentiment class {value!r}")
        return found

    def __str__(self) -> str:
        return self.value


_SHORT = {
    SentimentClass.POSITIVE: "POS",
    SentimentClass.NEGATIVE: "NEG",
    SentimentClass.NEUTRAL: "NEU",
}
_SYMBOL = {
    SentimentClass.POSITIVE: "+",
    SentimentClass.NEGATIVE: "-",
    SentimentClass.NEUTRAL: "0",
}
_ALIASES: Dict[str, SentimentClass] = {}
for _s in SentimentClass:
    _ALIASES[_s.value] = _s
    _ALIASES[_SHORT[_s].lower()] = _s
    _ALIASES[_SYMBOL[_s]] = _s
_ALIASES["−"] = SentimentClass.NEGATIVE  # unicode minus

# Canonical ordering used wherever sentiments are enumerated.
SENTIMENT_ORDER: Tuple[SentimentClass, ...] = (
    SentimentClass.POSITIVE, SentimentClass.NEGATIVE, SentimentClass.NEUTRAL,
)


class AeTag(str, Enum):
    O = "O"
    B = "B"
    I = "I"

    def __str__(self) -> str:
        return self.value


class Scheme(str, Enum):
    AE = "ae"
    SC = "sc"
    COLLAPSED = "collapsed"


@dataclass(frozen=True)
class Tag:
    """
    A single IOB tag, optionally carrying a sentiment. With a sentiment it is
    a collapsed tag (B+, I-, ...); without one it is a plain AE tag.
    """
    position: AeTag
    sentiment: Optional[SentimentClass] = None

    def __post_init__(self) -> None:
        if self.position is AeTag.O and self.sentiment is not None:
            raise ValidationError("outside tag cannot carry a sentiment")

    @property
    def is_outside(self) -> bool:
        return self.position is AeTag.O

    def plain(self) -> "Tag":
        """Drop the sentiment."""
        if self.sentiment is None:
            return self
        return Tag(self.position)

    def __str__(self) -> str:
        if self.sentiment is None:
            return self.position.value
        return f"{self.position.value}-{self.sentiment.short}"


CollapsedTag = Tag

OUTSIDE = Tag(AeTag.O)
BEGIN = Tag(AeTag.B)
INSIDE = Tag(AeTag.I)


def parse_tag(value: str) -> Tag:
    """
    Parse "O", "B", "I", "B-POS", "I-negative", "B+" or "I-" style strings.
    """
    text = value.strip()
    if not text:
        raise ValueError("empty tag")
    head, rest = text[0].upper(), text[1:]
    try:
        position = AeTag(head)
    except ValueError:
        raise ValueError(f"invalid tag {value!r}") from None
    if not rest:
        return Tag(position)
    if rest in ("+", "-", "−"):
        return Tag(position, SentimentClass.parse(rest))
    if rest[0] not in "-_":
        raise ValueError(f"invalid tag {value!r}")
    try:
        return Tag(position, SentimentClass.parse(rest[1:]))
    except ValueError:
        raise ValueError(f"invalid tag {value!r}") from None


@dataclass(frozen=True)
class TagSequence:
    """
    Per-token labels under the AE or collapsed scheme.
    """
    scheme: Scheme
    tags: Tuple[Tag, ...]

    def __post_init__(self) -> None:
        if self.scheme is Scheme.SC:
            raise ValueError("use SentimentSequence for the SC scheme")
        for i, tag in enumerate(self.tags):
            has_sentiment = tag.sentiment is not None
            if self.scheme is Scheme.AE and has_sentiment:
                raise ValidationError("AE tag carries a sentiment", index=i)
            if (self.scheme is Scheme.COLLAPSED and not tag.is_outside
                    and not has_sentiment):
                raise ValidationError("collapsed tag lacks a sentiment",
                                      index=i)

    @classmethod
    def of(cls, scheme: Scheme,
           tags: Iterable[Union[str, Tag]]) -> "TagSequence":
        parsed = tuple(t if isinstance(t, Tag) else parse_tag(t) for t in tags)
        return cls(scheme, parsed)

    @classmethod
    def infer(cls, tags: Iterable[Union[str, Tag]]) -> "TagSequence":
        """Collapsed when any tag carries a sentiment, AE otherwise."""
        parsed = tuple(t if isinstance(t, Tag) else parse_tag(t) for t in tags)
        if any(t.sentiment is not None for t in parsed):
            return cls(Scheme.COLLAPSED, parsed)
        return cls(Scheme.AE, parsed)

    def __len__(self) -> int:
        return len(self.tags)

    def __getitem__(self, i: int) -> Tag:
        return self.tags[i]

    def strings(self) -> List[str]:
        return [str(t) for t in self.tags]

    def trimmed(self, length: int) -> "TagSequence":
        return TagSequence(self.scheme, self.tags[:length])


@dataclass(frozen=True)
class SentimentSequence:
    """
    Token-level sentiment tags (the SC scheme); None stands for "no sentiment".
    """
    tags: Tuple[Optional[SentimentClass], ...]

    scheme = Scheme.SC

    @classmethod
    def of(cls, tags: Iterable[Optional[Union[str, SentimentClass]]]
           ) -> "SentimentSequence":
        out: List[Optional[SentimentClass]] = []
        for t in tags:
            if t is None or t in ("", "_", "O", "φ", "phi"):
                out.append(None)
            elif isinstance(t, SentimentClass):
                out.append(t)
            else:
                out.append(SentimentClass.parse(t))
        return cls(tuple(out))

    def __len__(self) -> int:
        return len(self.tags)


@dataclass(frozen=True, order=True)
class Chunk:
    """A [start, end) token span, optionally carrying a sentiment."""
    start: int
    end: int
    sentiment: Optional[SentimentClass] = None

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError(f"invalid chunk bounds [{self.start}, {self.end})")

    @property
    def span(self) -> Tuple[int, int]:
        return (self.start, self.end)


def validate(seq: TagSequence, *, sentence_id: Optional[str] = None) -> None:
    """
    Strict IOB check used for gold data: an I tag may not follow O or the
    start of the sequence.
    """
    previous = OUTSIDE
    for i, tag in enumerate(seq.tags):
        if tag.position is AeTag.I and previous.is_outside:
            where = "start of sentence" if i == 0 else "O"
            raise ValidationError(f"I tag follows {where}",
                                  sentence_id=sentence_id, index=i)
        previous = tag


def repair(seq: TagSequence) -> TagSequence:
    """
    Lenient (conlleval) repair for predictions: a stray I, or an I whose
    sentiment differs from the running chunk, is turned into a B.
    """
    fixed: List[Tag] = []
    previous = OUTSIDE
    for tag in seq.tags:
        if tag.position is AeTag.I and (
                previous.is_outside or previous.sentiment != tag.sentiment):
            tag = Tag(AeTag.B, tag.sentiment)
        fixed.append(tag)
        previous = tag
    return TagSequence(seq.scheme, tuple(fixed))


def collapse(ae: TagSequence, sc: SentimentSequence) -> TagSequence:
    """
    Fuse aspect membership and token sentiment into collapsed tags.
    """
    if ae.scheme is not Scheme.AE:
        raise ValueError("collapse expects an AE sequence")
    if len(ae) != len(sc):
        raise ValidationError(
            f"length mismatch: {len(ae)} AE tags vs {len(sc)} SC tags"
        )
    out: List[Tag] = []
    for i, (tag, sentiment) in enumerate(zip(ae.tags, sc.tags)):
        if tag.is_outside:
            if sentiment is not None:
                raise ValidationError(
                    f"token outside any aspect carries sentiment {sentiment}",
                    index=i,
                )
            out.append(OUTSIDE)
        else:
            if sentiment is None:
                raise ValidationError(
                    f"aspect token tagged {tag} has no sentiment", index=i
                )
            out.append(Tag(tag.position, sentiment))
    return TagSequence(Scheme.COLLAPSED, tuple(out))


def to_ae(seq: TagSequence) -> TagSequence:
    """Drop sentiments, keeping boundaries."""
    if seq.scheme is Scheme.AE:
        return seq
    return TagSequence(Scheme.AE, tuple(t.plain() for t in seq.tags))


def as_collapsed(seq: TagSequence) -> Optional[TagSequence]:
    """
    The sequence under the collapsed scheme. Aspect-free sequences carry no
    sentiment either way and convert; sequences with plain aspect tags give
    None.
    """
    if seq.scheme is Scheme.COLLAPSED:
        return seq
    if all(t.is_outside for t in seq.tags):
        return TagSequence(Scheme.COLLAPSED, seq.tags)
    return None


def _majority(sentiments: Sequence[SentimentClass]) -> SentimentClass:
    counts = Counter(sentiments)
    best = max(counts.values())
    # earliest member wins ties, so the first tag wins whenever it is tied
    return next(s for s in sentiments if counts[s] == best)


def decouple(collapsed: TagSequence) -> Tuple[TagSequence, List[Chunk]]:
    """
    Split collapsed tags into an AE sequence and sentiment-bearing chunks.
    Chunk boundaries come from the AE view (after lenient repair); each
    chunk's sentiment is the majority over its member tags, ties going to
    the sentiment of the chunk's first tag.
    """
    ae = repair(to_ae(collapsed))
    chunks: List[Chunk] = []
    for chunk in extract_chunks(ae):
        members = [
            s for s in (collapsed.tags[i].sentiment
                        for i in range(chunk.start, chunk.end))
            if s is not None
        ]
        sentiment = _majority(members) if members else None
        chunks.append(Chunk(chunk.start, chunk.end, sentiment))
    return ae, chunks


def extract_chunks(tags: TagSequence) -> List[Chunk]:
    """
    Maximal B I* runs, with conlleval conventions: an I after O (or at the
    start) opens a chunk, as does an I whose sentiment differs from the
    running chunk.
    """
    chunks: List[Chunk] = []
    start: Optional[int] = None
    current: Optional[SentimentClass] = None

    for i, tag in enumerate(tags.tags):
        if tag.is_outside:
            if start is not None:
                chunks.append(Chunk(start, i, current))
            start = None
            continue
        opens = (
            tag.position is AeTag.B
            or start is None
            or tag.sentiment != current
        )
        if opens:
            if start is not None:
                chunks.append(Chunk(start, i, current))
            start, current = i, tag.sentiment
    if start is not None:
        chunks.append(Chunk(start, len(tags.tags), current))
    return chunks


def sentence_sentiment(chunks: Sequence[Chunk]) -> SentimentClass:
    """
    Sentence-level sentiment implied by chunk sentiments: majority vote,
    first chunk breaking ties, neutral when there is no sentiment-bearing
    chunk.
    """
    sentiments = [c.sentiment for c in chunks if c.sentiment is not None]
    if not sentiments:
        return SentimentClass.NEUTRAL
    return _majority(sentiments)


class TagSet:
    """
    An ordered label vocabulary; a bijection between tags and indices.
    """
    def __init__(self, scheme: Scheme, labels: Sequence[Tag]):
        self.scheme = scheme
        self.labels: Tuple[Tag, ...] = tuple(labels)
        self._index: Dict[Tag, int] = {t: i for i, t in enumerate(self.labels)}
        if len(self._index) != len(self.labels):
            raise ValueError("duplicate labels in tag set")

    def __len__(self) -> int:
        return len(self.labels)

    def __str__(self) -> str:
        return f"TagSet{{{self.scheme.value}: {', '.join(map(str, self.labels))}}}"

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, TagSet) and other.scheme is self.scheme
                and other.labels == self.labels)

    def __hash__(self) -> int:
        return hash((self.scheme, self.labels))

    def index(self, tag: Tag) -> int:
        try:
            return self._index[tag]
        except KeyError:
            raise ValidationError(f"tag {tag} not in {self}") from None

    def label(self, index: int) -> Tag:
        if not 0 <= index < len(self.labels):
            raise IndexError(f"label index {index} out of range")
        return self.labels[index]

    def encode(self, seq: TagSequence) -> List[int]:
        # an aspect-free sentence reads as AE whatever scheme it came from
        all_outside = all(t.is_outside for t in seq.tags)
        if seq.scheme is not self.scheme and not all_outside:
            raise ValueError(
                f"cannot encode {seq.scheme.value} tags with a "
                f"{self.scheme.value} tag set"
            )
        return [self.index(t) for t in seq.tags]

    def decode(self, indices: Iterable[int]) -> TagSequence:
        return TagSequence(self.scheme, tuple(self.label(i) for i in indices))

    @property
    def sentiments(self) -> Tuple[SentimentClass, ...]:
        seen: List[SentimentClass] = []
        for t in self.labels:
            if t.sentiment is not None and t.sentiment not in seen:
                seen.append(t.sentiment)
        return tuple(seen)


def tagset(scheme: Scheme,
           sentiments: Iterable[SentimentClass] = ()) -> TagSet:
    """
    AE: [O, B, I]. Collapsed: O followed by B/I for each sentiment, in the
    canonical positive, negative, neutral order.
    """
    if scheme is Scheme.AE:
        return TagSet(scheme, (OUTSIDE, BEGIN, INSIDE))
    if scheme is Scheme.COLLAPSED:
        wanted = set(sentiments)
        if not wanted:
            raise ValueError("collapsed tag set needs at least one sentiment")
        labels = [OUTSIDE]
        for s in SENTIMENT_ORDER:
            if s in wanted:
                labels.extend((Tag(AeTag.B, s), Tag(AeTag.I, s)))
        return TagSet(scheme, labels)
    raise ValueError(f"no tag set for scheme {scheme.value}")
