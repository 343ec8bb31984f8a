"""
Tests for the "TOKEN GOLD PRED" prediction files.
"""
from pathlib import Path

import pytest

from absa.errors import FormatError
from absa.labels import Scheme, TagSequence

from .conll import ScoredSentence, read_predictions, write_predictions


def test_write_then_read(tmp_path: Path) -> None:
    rows = [
        ScoredSentence(("great", "battery", "life"),
                       TagSequence.infer(["O", "B-POS", "I-POS"]),
                       TagSequence.infer(["O", "B-POS", "O"])),
        ScoredSentence(("the", "screen"),
                       TagSequence.infer(["O", "B"]),
                       TagSequence.infer(["O", "O"])),
    ]
    path = str(tmp_path / "predictions.conll")
    assert write_predictions(rows, path) == 2
    text = (tmp_path / "predictions.conll").read_text()
    assert text.splitlines()[:4] == ["great O O", "battery B-POS B-POS",
                                     "life I-POS O", ""]
    assert read_predictions(path) == rows


def test_whitespace_in_tokens(tmp_path: Path) -> None:
    path = str(tmp_path / "p.conll")
    write_predictions([ScoredSentence(("new york",),
                                      TagSequence.of(Scheme.AE, ["B"]),
                                      TagSequence.of(Scheme.AE, ["B"]))], path)
    assert read_predictions(path)[0].tokens == ("new_york",)


def test_length_mismatch() -> None:
    with pytest.raises(ValueError):
        ScoredSentence(("a", "b"), TagSequence.of(Scheme.AE, ["O"]),
                       TagSequence.of(Scheme.AE, ["O", "O"]))


def test_bad_lines(tmp_path: Path) -> None:
    path = tmp_path / "bad.conll"
    path.write_text("a O O\nb O\n")
    with pytest.raises(FormatError, match=r"bad.conll:2"):
        read_predictions(str(path))
    path.write_text("a O O\n\nb X O\n")
    with pytest.raises(FormatError, match=r"bad.conll:3"):
        read_predictions(str(path))
