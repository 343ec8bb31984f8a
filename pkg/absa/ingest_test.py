"""
Tests for tokenization, vocabularies, embeddings and dataset files.
"""
import json
from pathlib import Path

import numpy as np
import pytest

from .errors import FormatError, ValidationError
from .ingest import (
    Sentence, SpanAnnotation, SpanKind, assign_polarity_by_overlap,
    build_vocab, filter_single_sentiment, load_dataset, load_embeddings,
    save_dataset, spans_to_tags, tokenize, trim
)
from .labels import Scheme, SentimentClass, TagSequence

POS, NEG, NEU = (SentimentClass.POSITIVE, SentimentClass.NEGATIVE,
                 SentimentClass.NEUTRAL)


def surfaces(text: str) -> list:
    return [t.surface for t in tokenize(text)]


def test_tokenize() -> None:
    assert surfaces("I love the saturated colors!") == \
        ["I", "love", "the", "saturated", "colors", "!"]
    assert surfaces("") == []
    assert surfaces("it's great.") == ["it's", "great", "."]
    assert surfaces('("quoted")') == ["(", '"', "quoted", '"', ")"]

    text = "  Nice   phone, really."
    for tok in tokenize(text):
        assert text[tok.start:tok.end] == tok.surface


def test_tokenize_idempotent() -> None:
    for text in ["I love the saturated colors!", "well... ok?!", "(a) b, c"]:
        once = surfaces(text)
        assert surfaces(" ".join(once)) == once


def test_build_vocab() -> None:
    corpus = [Sentence("1", ("a", "a", "b"))]
    vocab = build_vocab(corpus, min_frequency=1)
    assert len(vocab) == 4
    assert vocab.itos[2:] == ["a", "b"]

    vocab = build_vocab(corpus, min_frequency=2)
    assert len(vocab) == 3
    assert vocab.lookup("b") == vocab.unk_index
    assert vocab.lookup("never-seen") == vocab.unk_index
    assert vocab.lookup("a") == 2

    with pytest.raises(ValueError):
        build_vocab([])


def test_load_embeddings(tmp_path: Path) -> None:
    path = tmp_path / "vectors.txt"
    path.write_text("the 0.1 0.2\nzebra 1.0 2.0\ncat -0.5 3.25\n")
    vocab = build_vocab([Sentence("1", ("the", "cat", "dog"))])
    table = load_embeddings(str(path), vocab, seed=3)
    assert table.dimension == 2
    assert table.matrix[vocab.lookup("the")].tolist() == [0.1, 0.2]
    assert table.matrix[vocab.lookup("cat")].tolist() == [-0.5, 3.25]
    assert table.found == 2
    assert "dog" in table.missing
    dog = table.matrix[vocab.lookup("dog")]
    assert np.all(np.abs(dog) <= 0.05)
    assert np.all(table.matrix[vocab.pad_index] == 0.0)


def test_load_embeddings_errors(tmp_path: Path) -> None:
    vocab = build_vocab([Sentence("1", ("the",))])
    bad = tmp_path / "bad.txt"
    bad.write_text("a 0.1 0.2\nthe 0.1 x\n")
    with pytest.raises(FormatError) as info:
        load_embeddings(str(bad), vocab)
    assert ":2" in str(info.value)

    ragged = tmp_path / "ragged.txt"
    ragged.write_text("a 0.1 0.2\nthe 0.1\n")
    with pytest.raises(FormatError):
        load_embeddings(str(ragged), vocab)

    # numbers are checked on lines the vocabulary never asks for too
    unused = tmp_path / "unused.txt"
    unused.write_text("the 0.1 0.2\nzebra 0.3 nan?\n")
    with pytest.raises(FormatError) as info:
        load_embeddings(str(unused), vocab)
    assert ":2" in str(info.value)


def test_load_embeddings_splits_on_whitespace(tmp_path: Path) -> None:
    path = tmp_path / "vectors.txt"
    path.write_text("the\t0.5  0.25 \n\nzebra 1 2\n")
    vocab = build_vocab([Sentence("1", ("the",))])
    table = load_embeddings(str(path), vocab)
    assert table.dimension == 2
    assert table.matrix[vocab.lookup("the")].tolist() == [0.5, 0.25]


def test_assign_polarity_by_overlap() -> None:
    target = SpanAnnotation(10, 20, SpanKind.TARGET)
    plus = SpanAnnotation(15, 25, SpanKind.POLARITY, POS)
    assert assign_polarity_by_overlap([target], [plus]) == [POS]

    lone = SpanAnnotation(0, 5, SpanKind.TARGET)
    assert assign_polarity_by_overlap([lone], []) == [NEU]

    a = SpanAnnotation(0, 2, SpanKind.POLARITY, POS)
    b = SpanAnnotation(3, 5, SpanKind.POLARITY, NEG)
    assert assign_polarity_by_overlap([lone], [a, b]) == [POS]
    assert assign_polarity_by_overlap([lone], [b, a]) == [POS]

    bigger = SpanAnnotation(1, 5, SpanKind.POLARITY, NEG)
    assert assign_polarity_by_overlap([lone], [a, bigger]) == [NEG]


def test_spans_to_tags() -> None:
    text = "the battery life is great"
    tokens = tokenize(text)
    target = SpanAnnotation(4, 16, SpanKind.TARGET)
    polarity = SpanAnnotation(4, 25, SpanKind.POLARITY, POS)
    tags = spans_to_tags(tokens, [target], [polarity])
    assert tags.strings() == ["O", "B-POS", "I-POS", "O", "O"]


def test_filter_single_sentiment() -> None:
    def s(sid: str, *tags: str) -> Sentence:
        return Sentence(sid, tuple("x" * len(tags)),
                        TagSequence.of(Scheme.COLLAPSED, tags))

    kept = filter_single_sentiment([
        s("a", "B+", "I+", "O"),
        s("b", "B+", "O", "B-"),
        s("c", "O", "O"),
    ])
    assert [x.id for x in kept] == ["a", "c"]
    assert kept[0].sentiment is POS
    assert kept[1].sentiment is NEU


def test_filter_keeps_plain_aspect_free_sentences() -> None:
    plain = Sentence("p", ("x", "y"), TagSequence.infer(["O", "O"]))
    assert plain.gold is not None and plain.gold.scheme is Scheme.AE
    kept = filter_single_sentiment([plain])
    assert kept[0].sentiment is NEU
    assert kept[0].gold is not None
    assert kept[0].gold.scheme is Scheme.COLLAPSED
    with pytest.raises(ValidationError):
        filter_single_sentiment(
            [Sentence("q", ("x",), TagSequence.infer(["B"]))])


def test_trim() -> None:
    sentence = Sentence("long", tuple(str(i) for i in range(305)),
                        TagSequence.of(Scheme.AE, ["O"] * 304 + ["B"]))
    out = trim(sentence)
    assert len(out) == 300
    assert out.gold is not None and len(out.gold) == 300


def test_conll_dataset(tmp_path: Path) -> None:
    path = tmp_path / "data.conll"
    path.write_text(
        "# id:s1\n# sentiment:positive\n"
        "I O\nlove O\nthe O\nsaturated B-POS\ncolors I-POS\n! O\n\n"
        "# id:s2\nok O\n\n"
    )
    sentences = load_dataset(str(path), "conll")
    assert [s.id for s in sentences] == ["s1", "s2"]
    assert sentences[0].sentiment is POS
    assert sentences[0].gold is not None
    assert sentences[0].gold.scheme is Scheme.COLLAPSED
    assert sentences[1].gold is not None
    assert sentences[1].gold.scheme is Scheme.AE


def test_strict_loading(tmp_path: Path) -> None:
    path = tmp_path / "bad.conll"
    path.write_text("# id:broken\na O\nb I\n\n")
    with pytest.raises(ValidationError) as info:
        load_dataset(str(path), "conll")
    assert info.value.sentence_id == "broken"
    assert info.value.index == 1
    assert len(load_dataset(str(path), "conll", strict=False)) == 1


def test_jsonl_round_trip(tmp_path: Path) -> None:
    path = tmp_path / "data.jsonl"
    records = [
        {"id": "a", "tokens": ["great", "screen"], "tags": ["O", "B-POS"],
         "sentiment": "positive", "start_ms": 100, "end_ms": 900,
         "media_ref": "video1"},
        {"id": "b", "tokens": ["meh"]},
    ]
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    first = load_dataset(str(path), "jsonl")
    assert first[0].time_span == (100, 900)
    out = tmp_path / "copy.jsonl"
    save_dataset(first, str(out))
    assert load_dataset(str(out)) == first
    save_dataset(load_dataset(str(out)), str(tmp_path / "again.jsonl"))
    assert (tmp_path / "again.jsonl").read_text() == out.read_text()


def test_jsonl_errors(tmp_path: Path) -> None:
    path = tmp_path / "data.jsonl"
    path.write_text('{"id": "a", "tokens": ["x"]}\n{"tokens": ["y"]}\n')
    with pytest.raises(FormatError) as info:
        load_dataset(str(path))
    assert ":2" in str(info.value)

    path.write_text('{"id": "a", "text": "the screen", '
                    '"spans": [{"start": 4, "end": 10, "kind": "target"}]}\n')
    sentences = load_dataset(str(path))
    assert sentences[0].gold is not None
    assert sentences[0].gold.strings() == ["O", "B-NEU"]
