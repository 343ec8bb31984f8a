# Copyright (c) mm-opinion-miner contributors
"""
Seeded partitions of a dataset: k-fold cross-validation plans, validation
hold-outs and fixed train/valid/test splits.
"""
from dataclasses import dataclass

import numpy as np

from absa.errors import ConfigError

from typing import Callable, Dict, Iterator, List, Sequence, Tuple, TypeVar

__all__ = ["FoldPlan", "Split", "validation_split", "fixed_split"]

T = TypeVar("T")


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of sentence ids to k folds; fold sizes differ by at most 1."""
    k: int
    seed: int
    assignment: Dict[str, int]

    @classmethod
    def make(cls, ids: Sequence[str], k: int = 5, seed: int = 0) -> "FoldPlan":
        if k < 2:
            raise ConfigError(f"cross-validation needs k >= 2, got {k}")
        if len(ids) < k:
            raise ConfigError(f"cannot split {len(ids):,} sentences into "
                              f"{k} folds")
        if len(set(ids)) != len(ids):
            raise ValueError("sentence ids must be unique")
        order = np.random.default_rng(seed).permutation(len(ids))
        assignment = {ids[j]: i % k for i, j in enumerate(order)}
        return cls(k, seed, assignment)

    def test_ids(self, fold: int) -> List[str]:
        return [sid for sid, f in self.assignment.items() if f == fold]

    def sizes(self) -> List[int]:
        counts = [0] * self.k
        for f in self.assignment.values():
            counts[f] += 1
        return counts

    def splits(self, items: Sequence[T], key: Callable[[T], str]
               ) -> Iterator[Tuple[int, List[T], List[T]]]:
        """(fold, training items, test items) for every fold, input order kept."""
        for fold in range(self.k):
            train = [x for x in items if self.assignment[key(x)] != fold]
            test = [x for x in items if self.assignment[key(x)] == fold]
            yield fold, train, test


@dataclass(frozen=True)
class Split:
    train: List[str]
    valid: List[str]
    test: List[str]


def validation_split(ids: Sequence[str], fraction: float = 0.1,
                     seed: int = 0) -> Tuple[List[str], List[str]]:
    """
    Hold out `fraction` of the ids (at least one when there are two or
    more) for early stopping.
    """
    if not 0.0 <= fraction < 1.0:
        raise ConfigError(f"validation fraction must be in [0, 1), "
                          f"got {fraction}")
    n = len(ids)
    n_valid = int(round(n * fraction))
    if fraction > 0 and n >= 2:
        n_valid = max(n_valid, 1)
    n_valid = min(n_valid, n - 1) if n else 0
    order = np.random.default_rng(seed).permutation(n)
    held = set(int(i) for i in order[:n_valid])
    train = [ids[i] for i in range(n) if i not in held]
    valid = [ids[i] for i in range(n) if i in held]
    return train, valid


def fixed_split(ids: Sequence[str], seed: int = 0,
                fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1)
                ) -> Split:
    """Seeded train/valid/test partition, 80/10/10 by default."""
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 \
            or min(fractions) < 0:
        raise ConfigError(f"split fractions must be three non-negative "
                          f"numbers summing to 1, got {fractions}")
    n = len(ids)
    if n < 3:
        raise ConfigError(f"cannot split {n} sentences three ways")
    order = np.random.default_rng(seed).permutation(n)
    n_valid = max(1, int(round(n * fractions[1])))
    n_test = max(1, int(round(n * fractions[2])))
    part = {int(i): 0 for i in order[:n - n_valid - n_test]}
    part.update({int(i): 1 for i in order[n - n_valid - n_test:n - n_test]})
    part.update({int(i): 2 for i in order[n - n_test:]})
    return Split(
        [ids[i] for i in range(n) if part[i] == 0],
        [ids[i] for i in range(n) if part[i] == 1],
        [ids[i] for i in range(n) if part[i] == 2],
    )

