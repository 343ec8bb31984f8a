"""
Tests for fold plans and train/valid/test splits.
"""
import pytest

from absa.errors import ConfigError

from .folds import FoldPlan, fixed_split, validation_split


def test_folds_partition() -> None:
    ids = [f"s{i}" for i in range(23)]
    plan = FoldPlan.make(ids, k=5, seed=3)
    tests = [plan.test_ids(f) for f in range(5)]
    seen = [i for fold in tests for i in fold]
    assert sorted(seen) == sorted(ids)
    assert len(seen) == len(set(seen))
    assert max(plan.sizes()) - min(plan.sizes()) <= 1
    assert sum(plan.sizes()) == 23


def test_folds_deterministic() -> None:
    ids = [f"s{i}" for i in range(10)]
    assert FoldPlan.make(ids, 3, 1) == FoldPlan.make(ids, 3, 1)
    assert FoldPlan.make(ids, 3, 1) != FoldPlan.make(ids, 3, 2)


def test_splits_keep_input_order() -> None:
    items = [f"s{i}" for i in range(6)]
    plan = FoldPlan.make(items, k=2)
    for fold, train, test in plan.splits(items, key=lambda x: x):
        assert sorted(train + test) == items
        assert train == sorted(train, key=items.index)
        assert set(test) == set(plan.test_ids(fold))


def test_fold_errors() -> None:
    with pytest.raises(ConfigError):
        FoldPlan.make(["a", "b"], k=1)
    with pytest.raises(ConfigError):
        FoldPlan.make(["a", "b"], k=3)
    with pytest.raises(ValueError):
        FoldPlan.make(["a", "a", "b"], k=2)


def test_validation_split() -> None:
    ids = [f"s{i}" for i in range(40)]
    train, valid = validation_split(ids, 0.1, seed=0)
    assert len(valid) == 4
    assert sorted(train + valid) == sorted(ids)
    _, small = validation_split(ids[:3], 0.1)
    assert len(small) == 1
    _, none = validation_split(ids, 0.0)
    assert none == []


def test_fixed_split() -> None:
    ids = [f"s{i}" for i in range(50)]
    split = fixed_split(ids, seed=4)
    assert (len(split.train), len(split.valid), len(split.test)) == (40, 5, 5)
    assert sorted(split.train + split.valid + split.test) == sorted(ids)
    assert fixed_split(ids, seed=4) == split
    with pytest.raises(ConfigError):
        fixed_split(ids, fractions=(0.5, 0.5, 0.5))
