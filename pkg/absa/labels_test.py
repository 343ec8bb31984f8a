"""
Tests for the tag schemes and chunk extraction.
"""
import random

import pytest

from .errors import ValidationError
from .labels import (
    AeTag, Chunk, Scheme, SentimentClass, SentimentSequence, Tag,
    TagSequence, as_collapsed, collapse, decouple, extract_chunks, parse_tag,
    repair, sentence_sentiment, tagset, validate
)

from typing import List, Optional, Tuple

POS, NEG, NEU = (SentimentClass.POSITIVE, SentimentClass.NEGATIVE,
                 SentimentClass.NEUTRAL)


def ae(*tags: str) -> TagSequence:
    return TagSequence.of(Scheme.AE, tags)


def collapsed(*tags: str) -> TagSequence:
    return TagSequence.of(Scheme.COLLAPSED, tags)


def test_tag_strings() -> None:
    assert str(parse_tag("B-POS")) == "B-POS"
    assert parse_tag("I+") == Tag(AeTag.I, POS)
    assert parse_tag("B-negative") == Tag(AeTag.B, NEG)
    assert str(Tag(AeTag.B, NEU)) == "B-NEU"
    assert str(Tag(AeTag.O)) == "O"
    for s in SentimentClass:
        assert SentimentClass.parse(s.value) is s
        assert SentimentClass.parse(s.short) is s
    with pytest.raises(ValueError):
        parse_tag("X")
    with pytest.raises(ValidationError):
        Tag(AeTag.O, POS)


def test_collapse_table_example() -> None:
    """I love the saturated colors !"""
    out = collapse(ae("O", "O", "O", "B", "I", "O"),
                   SentimentSequence.of([None, None, None, "+", "+", None]))
    assert out.strings() == ["O", "O", "O", "B-POS", "I-POS", "O"]

    assert collapse(ae("O", "O"), SentimentSequence.of([None, None])) \
        .strings() == ["O", "O"]
    assert collapse(ae("B", "I", "I"), SentimentSequence.of(["-", "-", "-"])) \
        .strings() == ["B-NEG", "I-NEG", "I-NEG"]


def test_collapse_errors() -> None:
    with pytest.raises(ValidationError):
        collapse(ae("O", "B"), SentimentSequence.of([None]))
    with pytest.raises(ValidationError) as info:
        collapse(ae("O", "B"), SentimentSequence.of([None, None]))
    assert info.value.index == 1


def test_decouple() -> None:
    seq, chunks = decouple(collapsed("O", "B+", "I+", "O"))
    assert seq.strings() == ["O", "B", "I", "O"]
    assert chunks == [Chunk(1, 3, POS)]

    # majority vote over member tags
    seq, chunks = decouple(collapsed("B+", "I-", "I+"))
    assert seq.strings() == ["B", "I", "I"]
    assert chunks == [Chunk(0, 3, POS)]

    # tie goes to the first tag
    seq, chunks = decouple(collapsed("B+", "I-"))
    assert chunks == [Chunk(0, 2, POS)]
    seq, chunks = decouple(collapsed("B-", "I+"))
    assert chunks == [Chunk(0, 2, NEG)]


def test_extract_chunks() -> None:
    assert extract_chunks(ae("O", "B", "I", "O", "B")) == \
        [Chunk(1, 3), Chunk(4, 5)]
    assert extract_chunks(ae("O", "O", "O")) == []
    assert extract_chunks(ae("I", "I")) == [Chunk(0, 2)]
    assert extract_chunks(ae("B", "B", "I")) == [Chunk(0, 1), Chunk(1, 3)]
    # a sentiment change inside a run opens a new chunk
    assert extract_chunks(collapsed("B+", "I+", "I-")) == \
        [Chunk(0, 2, POS), Chunk(2, 3, NEG)]


def test_strict_and_lenient() -> None:
    with pytest.raises(ValidationError) as info:
        validate(ae("O", "I"), sentence_id="s1")
    assert info.value.index == 1
    assert info.value.sentence_id == "s1"
    with pytest.raises(ValidationError):
        validate(ae("I"))
    validate(ae("B", "I", "O", "B"))
    assert repair(ae("O", "I", "I")).strings() == ["O", "B", "I"]
    assert repair(collapsed("B+", "I-")).strings() == ["B-POS", "B-NEG"]


def test_tagset() -> None:
    assert [str(t) for t in tagset(Scheme.AE).labels] == ["O", "B", "I"]
    assert len(tagset(Scheme.COLLAPSED, {POS, NEG})) == 5
    full = tagset(Scheme.COLLAPSED, {NEU, NEG, POS})
    assert len(full) == 7
    assert [str(t) for t in full.labels] == \
        ["O", "B-POS", "I-POS", "B-NEG", "I-NEG", "B-NEU", "I-NEU"]
    for i, label in enumerate(full.labels):
        assert full.index(label) == i
        assert full.label(i) == label
    with pytest.raises(ValueError):
        tagset(Scheme.COLLAPSED, set())


def test_sentence_sentiment() -> None:
    assert sentence_sentiment([]) is NEU
    assert sentence_sentiment([Chunk(0, 1, NEG), Chunk(2, 3, POS)]) is NEG
    assert sentence_sentiment(
        [Chunk(0, 1, NEG), Chunk(2, 3, POS), Chunk(4, 5, POS)]) is POS


def test_as_collapsed() -> None:
    free = TagSequence.infer(["O", "O"])
    assert free.scheme is Scheme.AE
    converted = as_collapsed(free)
    assert converted is not None and converted.scheme is Scheme.COLLAPSED
    assert converted.strings() == ["O", "O"]
    tagged = TagSequence.infer(["B-POS", "O"])
    assert as_collapsed(tagged) is tagged
    assert as_collapsed(TagSequence.infer(["B", "O"])) is None


def _random_pair(rng: random.Random,
                 n: int) -> Tuple[TagSequence, SentimentSequence]:
    tags: List[str] = []
    sentiments: List[Optional[SentimentClass]] = []
    inside = False
    current: Optional[SentimentClass] = None
    for _ in range(n):
        choice = rng.choice("OBI" if inside else "OB")
        if choice == "O":
            inside, current = False, None
        elif choice == "B":
            inside, current = True, rng.choice(list(SentimentClass))
        tags.append(choice)
        sentiments.append(current)
    return ae(*tags), SentimentSequence(tuple(sentiments))


def test_round_trip_property() -> None:
    """decouple(collapse(ae, sc)) recovers ae; chunks cover the B/I tokens."""
    rng = random.Random(13)
    for _ in range(10_000):
        seq, sc = _random_pair(rng, rng.randint(0, 12))
        out, chunks = decouple(collapse(seq, sc))
        assert out == seq
        covered = [i for c in chunks for i in range(c.start, c.end)]
        assert covered == [i for i, t in enumerate(seq.tags)
                           if not t.is_outside]
        assert chunks == sorted(chunks)
