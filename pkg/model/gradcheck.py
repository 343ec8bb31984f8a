# Copyright (c) mm-opinion-miner contributors
"""
Central finite-difference checks of analytic gradients.
"""
import numpy as np

from .autodiff import Tensor, backward, no_grad

from typing import Callable, Dict, Sequence

__all__ = ["check_gradients", "relative_error"]


def relative_error(analytic: float, numeric: float,
                   floor: float = 1e-2) -> float:
    """
    |a - n| relative to the larger magnitude. Below `floor` the error is
    measured absolutely, so near-zero gradients are not judged on the
    O(h^2) truncation error of the central difference.
    """
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def check_gradients(loss_fn: Callable[[], Tensor], params: Sequence[Tensor],
                    rng: np.random.Generator, *, coordinates: int = 32,
                    h: float = 1e-3) -> Dict[int, float]:
    """
    Compare backward() against (f(x + h) - f(x - h)) / 2h on up to
    `coordinates` randomly chosen entries of each parameter. `loss_fn` must
    be deterministic. Returns the worst relative error per parameter index.
    """
    for p in params:
        p.zero_grad()
    backward(loss_fn())
    analytic = [np.array(p.grad) if p.grad is not None
                else np.zeros_like(p.data) for p in params]

    worst: Dict[int, float] = {}
    with no_grad():
        for i, p in enumerate(params):
            flat = p.data.reshape(-1)
            n = min(coordinates, flat.size)
            picks = rng.choice(flat.size, size=n, replace=False)
            errors = []
            for j in picks:
                original = flat[j]
                flat[j] = original + h
                plus = loss_fn().item()
                flat[j] = original - h
                minus = loss_fn().item()
                flat[j] = original
                numeric = (plus - minus) / (2 * h)
                errors.append(relative_error(
                    float(analytic[i].reshape(-1)[j]), numeric))
            worst[i] = max(errors) if errors else 0.0
    return worst
