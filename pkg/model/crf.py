# Copyright (c) mm-opinion-miner contributors
"""
Linear-chain CRF over per-token emission scores, plus the independent
softmax head used by the baseline.

Transitions form an (L + 2) x (L + 2) matrix whose last two rows/columns
are the virtual START and STOP states.
"""
import numpy as np
import numpy.typing as npt

from .autodiff import (
    Tensor, expand, expand_to, log_softmax, logsumexp, mul, parameter, scale,
    tsum
)
from .layers import Module

from typing import List, Optional, Sequence, Tuple, Union

__all__ = [
    "Crf",
    "crf_score",
    "log_partition",
    "crf_nll",
    "viterbi",
    "softmax_cross_entropy",
    "softmax_decode",
]

Array = npt.NDArray[np.float64]
Labels = Union[Sequence[Sequence[int]], npt.NDArray[np.int64]]


def _batched(emissions: Tensor, labels: Optional[Labels] = None,
             mask: Optional[Array] = None
             ) -> Tuple[Tensor, Optional[npt.NDArray[np.int64]], Array]:
    e = emissions
    if e.ndim == 2:
        e = e.reshape(1, *e.shape)
    if e.ndim != 3:
        raise ValueError(f"emissions must be (steps, labels) or "
                         f"(batch, steps, labels), got {emissions.shape}")
    batch, steps, n_labels = e.shape
    m = np.ones((batch, steps)) if mask is None else np.asarray(mask, float)
    if m.shape != (batch, steps):
        raise ValueError(f"mask {m.shape} does not match emissions {e.shape}")
    if not np.all(m[:, 0] > 0):
        raise ValueError("every sequence needs at least one step")
    y: Optional[npt.NDArray[np.int64]] = None
    if labels is not None:
        y = np.asarray(labels, dtype=np.int64).reshape(batch, steps)
        real = y[m > 0]
        if real.size and (real.min() < 0 or real.max() >= n_labels):
            raise IndexError(f"label index out of range [0, {n_labels})")
        y = np.where(m > 0, y, 0)
    return e, y, m


def crf_score(emissions: Tensor, labels: Labels, transitions: Tensor,
              mask: Optional[Array] = None) -> Tensor:
    """
    Φ = Σ_i emission(i, y_i) + transition(y_{i-1}, y_i), with START before
    the first step and STOP after the last. One score per sequence.
    """
    e, y, m = _batched(emissions, labels, mask)
    assert y is not None
    batch, steps, n_labels = e.shape
    start, stop = n_labels, n_labels + 1
    rows = np.repeat(np.arange(batch)[:, None], steps, axis=1)
    cols = np.repeat(np.arange(steps)[None, :], batch, axis=0)
    emitted = e[rows, cols, y]
    previous = np.concatenate([np.full((batch, 1), start), y[:, :-1]], axis=1)
    moved = transitions[previous, y]
    lengths = m.sum(axis=1).astype(np.int64)
    last = y[np.arange(batch), lengths - 1]
    ending = transitions[last, np.full(batch, stop)]
    return tsum(mul(emitted + moved, Tensor(m)), axis=1) + ending


def log_partition(emissions: Tensor, transitions: Tensor,
                  mask: Optional[Array] = None) -> Tensor:
    """logZ per sequence by the forward algorithm in log space."""
    e, _, m = _batched(emissions, None, mask)
    batch, steps, n_labels = e.shape
    start, stop = n_labels, n_labels + 1
    alpha = expand_to(transitions[start, :n_labels], (batch, n_labels)) \
        + e[:, 0, :]
    inner = expand_to(transitions[:n_labels, :n_labels],
                      (batch, n_labels, n_labels))
    for t in range(1, steps):
        scores = expand(alpha, 2, n_labels) + inner \
            + expand(e[:, t, :], 1, n_labels)
        updated = logsumexp(scores, axis=1)
        keep = m[:, t]
        if keep.all():
            alpha = updated
        else:
            gate = Tensor(np.repeat(keep[:, None], n_labels, axis=1))
            alpha = alpha + mul(gate, updated - alpha)
    final = alpha + expand_to(transitions[:n_labels, stop], (batch, n_labels))
    return logsumexp(final, axis=1)


def crf_nll(emissions: Tensor, labels: Labels, transitions: Tensor,
            mask: Optional[Array] = None) -> Tensor:
    """Mean over the batch of logZ − Φ(gold)."""
    per_sequence = log_partition(emissions, transitions, mask) \
        - crf_score(emissions, labels, transitions, mask)
    return scale(tsum(per_sequence), 1.0 / per_sequence.shape[0])


def viterbi(emissions: Array, transitions: Array) -> List[int]:
    """
    Highest-scoring label sequence for one (steps, labels) emission matrix,
    START and STOP transitions included. Backpointer ties go to the lowest
    label index.
    """
    e = np.asarray(emissions, dtype=np.float64)
    steps, n_labels = e.shape
    if steps == 0:
        return []
    start, stop = n_labels, n_labels + 1
    inner = transitions[:n_labels, :n_labels]
    delta = transitions[start, :n_labels] + e[0]
    pointers = np.zeros((steps, n_labels), dtype=np.int64)
    for t in range(1, steps):
        candidates = delta[:, None] + inner
        pointers[t] = np.argmax(candidates, axis=0)
        delta = candidates[pointers[t], np.arange(n_labels)] + e[t]
    delta = delta + transitions[:n_labels, stop]
    best = int(np.argmax(delta))
    path = [best]
    for t in range(steps - 1, 0, -1):
        best = int(pointers[t, best])
        path.append(best)
    return path[::-1]


class Crf(Module):
    def __init__(self, rng: np.random.Generator, n_labels: int):
        self.n_labels = n_labels
        self.transitions = parameter(
            rng.uniform(-0.1, 0.1, size=(n_labels + 2, n_labels + 2)))

    @property
    def start(self) -> int:
        return self.n_labels

    @property
    def stop(self) -> int:
        return self.n_labels + 1

    def score(self, emissions: Tensor, labels: Labels,
              mask: Optional[Array] = None) -> Tensor:
        return crf_score(emissions, labels, self.transitions, mask)

    def nll(self, emissions: Tensor, labels: Labels,
            mask: Optional[Array] = None) -> Tensor:
        return crf_nll(emissions, labels, self.transitions, mask)

    def decode(self, emissions: Array, mask: Array) -> List[List[int]]:
        lengths = np.asarray(mask).sum(axis=1).astype(np.int64)
        return [viterbi(emissions[b, :n], self.transitions.data)
                for b, n in enumerate(lengths)]


def softmax_cross_entropy(emissions: Tensor, labels: Labels,
                          mask: Optional[Array] = None) -> Tensor:
    """
    Per-token cross-entropy of softmax(emissions), averaged over each
    sequence's tokens and then over the batch.
    """
    e, y, m = _batched(emissions, labels, mask)
    assert y is not None
    batch, steps, _ = e.shape
    rows = np.repeat(np.arange(batch)[:, None], steps, axis=1)
    cols = np.repeat(np.arange(steps)[None, :], batch, axis=0)
    picked = log_softmax(e, axis=-1)[rows, cols, y]
    weights = m / m.sum(axis=1, keepdims=True) / batch
    return scale(tsum(mul(picked, Tensor(weights))), -1.0)


def softmax_decode(emissions: Tensor, labels: Optional[Labels] = None,
                   mask: Optional[Array] = None
                   ) -> Tuple[Optional[Tensor], List[List[int]]]:
    """Loss (when gold labels are given) and per-token argmax labels."""
    e, _, m = _batched(emissions, None, mask)
    lengths = m.sum(axis=1).astype(np.int64)
    best = np.argmax(e.data, axis=-1)
    predictions = [best[b, :n].tolist() for b, n in enumerate(lengths)]
    loss = (softmax_cross_entropy(emissions, labels, mask)
            if labels is not None else None)
    return loss, predictions
