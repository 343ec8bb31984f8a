# Copyright (c) mm-opinion-miner contributors
"""
"TOKEN GOLD PRED" files, one token per line and a blank line between
sentences, as read by the conlleval script.
"""
import logging
from dataclasses import dataclass

import fsspec

from absa.errors import FormatError
from absa.labels import TagSequence

from typing import Iterable, List, Sequence

__all__ = ["ScoredSentence", "write_predictions", "read_predictions"]


@dataclass(frozen=True)
class ScoredSentence:
    tokens: Sequence[str]
    gold: TagSequence
    pred: TagSequence

    def __post_init__(self) -> None:
        if not len(self.tokens) == len(self.gold) == len(self.pred):
            raise ValueError(
                f"{len(self.tokens)} tokens, {len(self.gold)} gold tags and "
                f"{len(self.pred)} predicted tags")


def write_predictions(rows: Iterable[ScoredSentence], path: str) -> int:
    """Returns the number of sentences written."""
    cnt = 0
    with fsspec.open(path, "wt", encoding="utf-8") as f:
        for row in rows:
            for token, g, p in zip(row.tokens, row.gold.strings(),
                                   row.pred.strings()):
                # conlleval splits on whitespace
                f.write(f"{'_'.join(token.split()) or '_'} {g} {p}\n")
            f.write("\n")
            cnt += 1
    logging.info(f"wrote {cnt:,} scored sentences to {path}")
    return cnt


def read_predictions(path: str) -> List[ScoredSentence]:
    rows: List[ScoredSentence] = []
    tokens: List[str] = []
    gold: List[str] = []
    pred: List[str] = []
    start = 1

    def flush() -> None:
        if not tokens:
            return
        try:
            rows.append(ScoredSentence(tuple(tokens), TagSequence.infer(gold),
                                       TagSequence.infer(pred)))
        except ValueError as e:
            raise FormatError(str(e), locator=f"{path}:{start}") from None
        tokens.clear()
        gold.clear()
        pred.clear()

    with fsspec.open(path, "rt", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            fields = line.split()
            if not fields:
                flush()
                start = lineno + 1
                continue
            if len(fields) != 3:
                raise FormatError(
                    f"expected 'TOKEN GOLD PRED', found {len(fields)} columns",
                    locator=f"{path}:{lineno}")
            tokens.append(fields[0])
            gold.append(fields[1])
            pred.append(fields[2])
        flush()
    return rows
