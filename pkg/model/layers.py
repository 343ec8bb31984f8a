# Copyright (c) mm-opinion-miner contributors
"""
Trainable building blocks: affine layers, embeddings, GRU cells, masked
bi-directional GRUs, token self-attention and small MLPs.
"""
import numpy as np
import numpy.typing as npt

from .autodiff import (
    Tensor, additive_scores, concat, embedding_lookup, expand_to, matmul,
    mul, parameter, sigmoid, softmax, stack, tanh
)

from typing import Any, Dict, List, Optional, Sequence, Tuple

__all__ = [
    "Module",
    "Linear",
    "Embedding",
    "GruCell",
    "BiGru",
    "SelfAttention",
    "Mlp",
    "MASK_PENALTY",
]

Array = npt.NDArray[np.float64]

MASK_PENALTY = -1e9


def _uniform(rng: np.random.Generator, shape: Tuple[int, ...],
             limit: float) -> Array:
    return rng.uniform(-limit, limit, size=shape)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> Array:
    return _uniform(rng, (fan_in, fan_out), np.sqrt(6.0 / (fan_in + fan_out)))


def _blend(old: Tensor, new: Tensor, keep: Array) -> Tensor:
    """new where keep is 1, old where it is 0 (keep has one value per row)."""
    if keep.all():
        return new
    gate = Tensor(np.repeat(keep[:, None], old.shape[1], axis=1))
    return old + mul(gate, new - old)


class Module:
    """
    Parameters are the `requires_grad` tensors reachable through attributes,
    named by attribute path in definition order.
    """
    training = True

    def named_parameters(self, prefix: str = "") -> List[Tuple[str, Tensor]]:
        found: List[Tuple[str, Tensor]] = []
        for key, value in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(value, Tensor):
                if value.requires_grad:
                    found.append((name, value))
            elif isinstance(value, Module):
                found.extend(value.named_parameters(f"{name}."))
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        found.extend(item.named_parameters(f"{name}.{i}."))
        return found

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def named_tensors(self) -> List[Tuple[str, Tensor]]:
        """Parameters plus frozen tensors (e.g. fixed embeddings)."""
        found: List[Tuple[str, Tensor]] = []
        for key, value in vars(self).items():
            if isinstance(value, Tensor):
                found.append((key, value))
            elif isinstance(value, Module):
                found.extend((f"{key}.{n}", t) for n, t in value.named_tensors())
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        found.extend((f"{key}.{i}.{n}", t)
                                     for n, t in item.named_tensors())
        return found

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def train(self, mode: bool = True) -> "Module":
        self.training = mode
        for value in vars(self).values():
            if isinstance(value, Module):
                value.train(mode)
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        item.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def state_dict(self) -> Dict[str, Array]:
        return {name: t.data.copy() for name, t in self.named_tensors()}

    def load_state_dict(self, state: Dict[str, Array]) -> None:
        tensors = dict(self.named_tensors())
        missing = sorted(set(tensors) - set(state))
        unexpected = sorted(set(state) - set(tensors))
        if missing or unexpected:
            raise KeyError(f"state mismatch: missing {missing}, "
                           f"unexpected {unexpected}")
        for name, t in tensors.items():
            if state[name].shape != t.shape:
                raise ValueError(f"{name}: shape {state[name].shape} does not "
                                 f"match {t.shape}")
            t.data = np.array(state[name], dtype=np.float64)


class Linear(Module):
    def __init__(self, rng: np.random.Generator, in_dim: int, out_dim: int):
        self.weight = parameter(_glorot(rng, in_dim, out_dim))
        self.bias = parameter(np.zeros(out_dim))

    def __call__(self, x: Tensor) -> Tensor:
        out = matmul(x, self.weight)
        return out + expand_to(self.bias, out.shape)


class Embedding(Module):
    def __init__(self, table: Array, trainable: bool = True):
        self.table = Tensor(np.array(table, dtype=np.float64), trainable)

    @property
    def dim(self) -> int:
        return int(self.table.shape[1])

    def __call__(self, indices: npt.NDArray[np.int64]) -> Tensor:
        return embedding_lookup(self.table, indices)


class GruCell(Module):
    """
    z = σ(W_z x + U_z h + b_z), r = σ(W_r x + U_r h + b_r),
    h̃ = tanh(W_h x + U_h (r ∘ h) + b_h), h' = (1 − z) ∘ h + z ∘ h̃.

    Input weights for the three gates are stored side by side so the input
    projection of a whole sequence is one product.
    """
    def __init__(self, rng: np.random.Generator, in_dim: int, hidden: int):
        self.in_dim = in_dim
        self.hidden = hidden
        limit = 1.0 / np.sqrt(hidden)
        self.w = parameter(_uniform(rng, (in_dim, 3 * hidden), limit))
        self.u_zr = parameter(_uniform(rng, (hidden, 2 * hidden), limit))
        self.u_h = parameter(_uniform(rng, (hidden, hidden), limit))
        self.b = parameter(np.zeros(3 * hidden))

    def project(self, x: Tensor) -> Tensor:
        """x @ W + b for every step at once: (..., in) -> (..., 3H)."""
        out = matmul(x, self.w)
        return out + expand_to(self.b, out.shape)

    def step(self, xp: Tensor, h: Tensor) -> Tensor:
        """One step from a projected input (B, 3H) and state (B, H)."""
        hid = self.hidden
        zr = matmul(h, self.u_zr)
        z = sigmoid(xp[:, :hid] + zr[:, :hid])
        r = sigmoid(xp[:, hid:2 * hid] + zr[:, hid:])
        candidate = tanh(xp[:, 2 * hid:] + matmul(mul(r, h), self.u_h))
        return h + mul(z, candidate - h)

    def __call__(self, x: Tensor, h: Tensor) -> Tensor:
        return self.step(self.project(x), h)


class BiGru(Module):
    """
    Forward and backward GRUs over (B, T, D) inputs with a (B, T) mask.
    Output step i is [fwd_i ; bwd_i]. Padded steps leave the state
    unchanged, so the backward pass starts at each sequence's last real
    token.
    """
    def __init__(self, rng: np.random.Generator, in_dim: int, hidden: int):
        self.hidden = hidden
        self.fwd = GruCell(rng, in_dim, hidden)
        self.bwd = GruCell(rng, in_dim, hidden)

    @property
    def out_dim(self) -> int:
        return 2 * self.hidden

    def _run(self, cell: GruCell, x: Tensor, mask: Array,
             reverse: bool) -> Tensor:
        batch, steps = mask.shape
        xp = cell.project(x)
        h = Tensor(np.zeros((batch, self.hidden)))
        outputs: List[Optional[Tensor]] = [None] * steps
        order = range(steps - 1, -1, -1) if reverse else range(steps)
        for t in order:
            h = _blend(h, cell.step(xp[:, t, :], h), mask[:, t])
            outputs[t] = h
        return stack([o for o in outputs if o is not None], axis=1)

    def __call__(self, x: Tensor, mask: Optional[Array] = None) -> Tensor:
        if x.ndim != 3:
            raise ValueError(f"BiGru expects (batch, steps, dim), got {x.shape}")
        if mask is None:
            mask = np.ones(x.shape[:2])
        if x.shape[1] == 0:
            raise ValueError("BiGru over an empty sequence")
        return concat([self._run(self.fwd, x, mask, False),
                       self._run(self.bwd, x, mask, True)], axis=-1)


class SelfAttention(Module):
    """
    u_ij = v·tanh(W[h_i; h_j] + b), α_i = softmax_j(u_i), t_i = Σ_j α_ij h_j,
    o_i = W_l [h_i; t_i] + b_l. Padded keys receive no attention.
    """
    def __init__(self, rng: np.random.Generator, dim: int, attention_dim: int,
                 out_dim: int):
        self.dim = dim
        self.attention_dim = attention_dim
        self.w_alpha = parameter(_glorot(rng, 2 * dim, attention_dim))
        self.b_alpha = parameter(np.zeros(attention_dim))
        self.v_alpha = parameter(
            _uniform(rng, (attention_dim,), 1.0 / np.sqrt(attention_dim)))
        self.output = Linear(rng, 2 * dim, out_dim)

    def weights(self, h: Tensor, mask: Array) -> Tensor:
        """Attention matrix (B, T, T); rows are queries."""
        steps = h.shape[1]
        query = matmul(h, self.w_alpha[:self.dim])
        key = matmul(h, self.w_alpha[self.dim:])
        scores = additive_scores(query, key, self.b_alpha, self.v_alpha)
        penalty = np.where(mask[:, None, :] > 0, 0.0, MASK_PENALTY)
        penalty = np.repeat(penalty, steps, axis=1)
        return softmax(scores + Tensor(penalty), axis=-1)

    def __call__(self, h: Tensor, mask: Optional[Array] = None
                 ) -> Tuple[Tensor, Tensor]:
        if mask is None:
            mask = np.ones(h.shape[:2])
        alpha = self.weights(h, mask)
        context = matmul(alpha, h)
        return self.output(concat([h, context], axis=-1)), alpha


class Mlp(Module):
    """Affine layers with tanh between them (none after the last)."""
    def __init__(self, rng: np.random.Generator, sizes: Sequence[int]):
        if len(sizes) < 2:
            raise ValueError("an MLP needs input and output sizes")
        self.layers = [Linear(rng, a, b) for a, b in zip(sizes, sizes[1:])]

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = tanh(x)
        return x


def describe(module: Module) -> Dict[str, Any]:
    """Parameter count and shapes, for logging."""
    named = module.named_parameters()
    return {
        "parameters": int(sum(p.size for _, p in named)),
        "shapes": {n: list(p.shape) for n, p in named},
    }
