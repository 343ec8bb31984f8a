# Copyright (c) mm-opinion-miner contributors
"""
A small reverse-mode differentiation engine over float64 numpy arrays.

Every operation records its parents and a backward rule; `backward(loss)`
walks the recorded graph once in reverse execution order. Shapes never
broadcast implicitly: use `expand` or `expand_to` to align them.
"""
import contextlib
import logging
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
from scipy.special import expit

from typing import (
    Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union
)

__all__ = [
    "Tensor",
    "ShapeError",
    "NumericError",
    "AdamState",
    "Adam",
    "adam_step",
    "backward",
    "no_grad",
    "tensor",
    "parameter",
    "add",
    "sub",
    "mul",
    "scale",
    "matmul",
    "concat",
    "stack",
    "reshape",
    "expand",
    "expand_to",
    "tsum",
    "tanh",
    "sigmoid",
    "relu",
    "softmax",
    "log_softmax",
    "logsumexp",
    "mean_pool",
    "dropout",
    "embedding_lookup",
    "additive_scores",
]

Array = npt.NDArray[np.float64]
Operand = Union["Tensor", Array, float, int]


class ShapeError(ValueError):
    """Operands have incompatible shapes."""
    def __init__(self, op: str, *shapes: Tuple[int, ...]):
        joined = " and ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {joined}")
        self.shapes = shapes


class NumericError(ArithmeticError):
    """An operation produced NaN or infinity."""


_grad_enabled = True


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording a graph (inference)."""
    global _grad_enabled
    previous, _grad_enabled = _grad_enabled, False
    try:
        yield
    finally:
        _grad_enabled = previous


class _Scatter:
    """A gradient that is non-zero only at `index` of a `shape` array."""
    __slots__ = ("shape", "index", "value", "advanced")

    def __init__(self, shape: Tuple[int, ...], index: Any, value: Array,
                 advanced: bool):
        self.shape = shape
        self.index = index
        self.value = value
        self.advanced = advanced

    def add_into(self, target: Array) -> None:
        if self.advanced:
            np.add.at(target, self.index, self.value)
        else:
            target[self.index] += self.value


Grad = Union[Array, _Scatter, None]
BackwardFn = Callable[[Array], Sequence[Grad]]


class Tensor:
    """
    A float64 array that may take part in a recorded computation.
    """
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward",
                 "name")

    def __init__(self, data: Any, requires_grad: bool = False, *,
                 name: Optional[str] = None):
        self.data: Array = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[Array] = None
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        return float(self.data.item())

    def numpy(self) -> Array:
        return self.data

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return (f"Tensor{label}(shape={self.shape}, "
                f"requires_grad={self.requires_grad})")

    def __add__(self, other: Operand) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Operand) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: Operand) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Operand) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: Operand) -> "Tensor":
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other: Operand) -> "Tensor":
        return self.__mul__(other)

    def __neg__(self) -> "Tensor":
        return scale(self, -1.0)

    def __matmul__(self, other: Operand) -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        return _getitem(self, index)

    def sum(self, axis: Optional[int] = None) -> "Tensor":
        return tsum(self, axis)

    def reshape(self, *shape: int) -> "Tensor":
        return reshape(self, shape)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)


def tensor(data: Any) -> Tensor:
    """A constant."""
    return Tensor(data)


def parameter(data: Any, name: Optional[str] = None) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), True, name=name)


def _lift(x: Operand) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check(op: str, data: Array) -> None:
    if not np.all(np.isfinite(data)):
        raise NumericError(f"{op} produced non-finite values")


def _result(op: str, data: Array, parents: Sequence[Tensor],
            backward_fn: BackwardFn) -> Tensor:
    _check(op, data)
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(op, a.shape, b.shape)


def add(a: Operand, b: Operand) -> Tensor:
    x, y = _lift(a), _lift(b)
    _same_shape("add", x, y)
    return _result("add", x.data + y.data, (x, y), lambda g: (g, g))


def sub(a: Operand, b: Operand) -> Tensor:
    x, y = _lift(a), _lift(b)
    _same_shape("sub", x, y)
    return _result("sub", x.data - y.data, (x, y), lambda g: (g, -g))


def mul(a: Operand, b: Operand) -> Tensor:
    """Elementwise product."""
    x, y = _lift(a), _lift(b)
    _same_shape("mul", x, y)
    return _result("mul", x.data * y.data, (x, y),
                   lambda g: (g * y.data, g * x.data))


def scale(a: Operand, c: float) -> Tensor:
    x = _lift(a)
    return _result("scale", x.data * c, (x,), lambda g: (g * c,))


def matmul(a: Operand, b: Operand) -> Tensor:
    """
    (n, k) @ (k, m), (..., n, k) @ (k, m) for a shared weight, or batched
    (B, n, k) @ (B, k, m).
    """
    x, y = _lift(a), _lift(b)
    if x.ndim < 2 or y.ndim not in (2, x.ndim) or x.shape[-1] != y.shape[-2]:
        raise ShapeError("matmul", x.shape, y.shape)
    if y.ndim == x.ndim and x.shape[:-2] != y.shape[:-2]:
        raise ShapeError("matmul", x.shape, y.shape)
    shared = y.ndim == 2 and x.ndim > 2

    def backward_fn(g: Array) -> Sequence[Grad]:
        gx = g @ np.swapaxes(y.data, -1, -2)
        if shared:
            k = x.shape[-1]
            gy = x.data.reshape(-1, k).T @ g.reshape(-1, g.shape[-1])
        else:
            gy = np.swapaxes(x.data, -1, -2) @ g
        return gx, gy

    return _result("matmul", x.data @ y.data, (x, y), backward_fn)


def concat(tensors: Sequence[Operand], axis: int = -1) -> Tensor:
    parts = [_lift(t) for t in tensors]
    if not parts:
        raise ValueError("concat of nothing")
    nd = parts[0].ndim
    ax = axis % nd
    for p in parts[1:]:
        if p.ndim != nd or any(p.shape[i] != parts[0].shape[i]
                               for i in range(nd) if i != ax):
            raise ShapeError("concat", parts[0].shape, p.shape)
    bounds = np.cumsum([p.shape[ax] for p in parts])[:-1]

    def backward_fn(g: Array) -> Sequence[Grad]:
        return np.split(g, bounds, axis=ax)

    return _result("concat", np.concatenate([p.data for p in parts], axis=ax),
                   parts, backward_fn)


def stack(tensors: Sequence[Operand], axis: int = 0) -> Tensor:
    parts = [_lift(t) for t in tensors]
    if not parts:
        raise ValueError("stack of nothing")
    for p in parts[1:]:
        if p.shape != parts[0].shape:
            raise ShapeError("stack", parts[0].shape, p.shape)
    ax = axis % (parts[0].ndim + 1)

    def backward_fn(g: Array) -> Sequence[Grad]:
        return [np.take(g, i, axis=ax) for i in range(len(parts))]

    return _result("stack", np.stack([p.data for p in parts], axis=ax),
                   parts, backward_fn)


def _is_advanced(index: Any) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return any(isinstance(i, (list, np.ndarray)) for i in items)


def _getitem(x: Tensor, index: Any) -> Tensor:
    """Basic slicing or integer-array indexing (slice/gather)."""
    advanced = _is_advanced(index)
    try:
        data = x.data[index]
    except IndexError as e:
        raise ShapeError(f"index ({e})", x.shape) from None
    shape = x.shape
    return _result(
        "slice", np.array(data, dtype=np.float64), (x,),
        lambda g: (_Scatter(shape, index, g, advanced),),
    )


def reshape(x: Operand, shape: Sequence[int]) -> Tensor:
    t = _lift(x)
    try:
        data = t.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError("reshape", t.shape, tuple(shape)) from None
    original = t.shape
    return _result("reshape", data, (t,), lambda g: (g.reshape(original),))


def expand(x: Operand, axis: int, n: int) -> Tensor:
    """Insert a new axis of length `n` by repetition."""
    t = _lift(x)
    ax = axis % (t.ndim + 1)
    data = np.repeat(np.expand_dims(t.data, ax), n, axis=ax)
    return _result("expand", data, (t,), lambda g: (g.sum(axis=ax),))


def expand_to(x: Operand, shape: Sequence[int]) -> Tensor:
    """
    Repeat `x` to `shape`; x's shape must equal the trailing axes of `shape`.
    """
    t = _lift(x)
    target = tuple(shape)
    lead = len(target) - t.ndim
    if lead < 0 or target[lead:] != t.shape:
        raise ShapeError("expand_to", t.shape, target)
    data = np.array(np.broadcast_to(t.data, target))
    axes = tuple(range(lead))
    return _result("expand_to", data, (t,), lambda g: (g.sum(axis=axes),))


def tsum(x: Operand, axis: Optional[int] = None) -> Tensor:
    t = _lift(x)
    shape = t.shape
    if axis is None:
        return _result("sum", np.array(t.data.sum()), (t,),
                       lambda g: (np.full(shape, float(g)),))
    ax = axis % t.ndim
    return _result(
        "sum", t.data.sum(axis=ax), (t,),
        lambda g: (np.repeat(np.expand_dims(g, ax), shape[ax], axis=ax),),
    )


def tanh(x: Operand) -> Tensor:
    t = _lift(x)
    out = np.tanh(t.data)
    return _result("tanh", out, (t,), lambda g: (g * (1.0 - out * out),))


def sigmoid(x: Operand) -> Tensor:
    t = _lift(x)
    out = expit(t.data)
    return _result("sigmoid", out, (t,), lambda g: (g * out * (1.0 - out),))


def relu(x: Operand) -> Tensor:
    t = _lift(x)
    positive = t.data > 0
    return _result("relu", np.where(positive, t.data, 0.0), (t,),
                   lambda g: (g * positive,))


def _logsumexp(data: Array, axis: int) -> Array:
    peak = data.max(axis=axis, keepdims=True)
    return peak + np.log(np.exp(data - peak).sum(axis=axis, keepdims=True))


def softmax(x: Operand, axis: int = -1) -> Tensor:
    t = _lift(x)
    out = np.exp(t.data - _logsumexp(t.data, axis))

    def backward_fn(g: Array) -> Sequence[Grad]:
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _result("softmax", out, (t,), backward_fn)


def log_softmax(x: Operand, axis: int = -1) -> Tensor:
    t = _lift(x)
    out = t.data - _logsumexp(t.data, axis)

    def backward_fn(g: Array) -> Sequence[Grad]:
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return _result("log_softmax", out, (t,), backward_fn)


def logsumexp(x: Operand, axis: int = -1) -> Tensor:
    """log(sum(exp(x))) along `axis`, shifted by the maximum."""
    t = _lift(x)
    full = _logsumexp(t.data, axis)
    weights = np.exp(t.data - full)

    def backward_fn(g: Array) -> Sequence[Grad]:
        return (np.expand_dims(g, axis) * weights,)

    return _result("logsumexp", np.squeeze(full, axis=axis), (t,),
                   backward_fn)


def mean_pool(x: Operand, axis: int = 0,
              mask: Optional[npt.NDArray[Any]] = None) -> Tensor:
    """
    Mean along `axis`. With a mask of shape x.shape[:axis + 1], only
    positions where the mask is non-zero are averaged; every row needs at
    least one.
    """
    t = _lift(x)
    ax = axis % t.ndim
    if mask is None:
        weights = np.full(t.shape[:ax + 1], 1.0 / t.shape[ax])
    else:
        m = np.asarray(mask, dtype=np.float64)
        if m.shape != t.shape[:ax + 1]:
            raise ShapeError("mean_pool mask", t.shape, m.shape)
        counts = m.sum(axis=ax, keepdims=True)
        if np.any(counts == 0):
            raise ValueError("mean_pool over an empty (fully masked) row")
        weights = m / counts
    w = weights.reshape(weights.shape + (1,) * (t.ndim - ax - 1))
    out = (t.data * w).sum(axis=ax)
    return _result(
        "mean_pool", out, (t,),
        lambda g: (np.expand_dims(g, ax) * w,),
    )


def dropout(x: Operand, p: float, train: bool,
            rng: Optional[np.random.Generator] = None) -> Tensor:
    """Inverted dropout: identity unless training."""
    t = _lift(x)
    if not train or p == 0.0:
        return t
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {p}")
    generator = rng if rng is not None else np.random.default_rng()
    keep = (generator.random(t.shape) >= p) / (1.0 - p)
    return _result("dropout", t.data * keep, (t,), lambda g: (g * keep,))


def embedding_lookup(table: Tensor, indices: npt.NDArray[np.int64]) -> Tensor:
    """Rows of `table` for each index; the result has shape indices.shape + (D,)."""
    idx = np.asarray(indices, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeError("embedding_lookup", table.shape, idx.shape)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise IndexError(f"embedding index out of range [0, {table.shape[0]})")
    shape = table.shape
    return _result(
        "embedding_lookup", table.data[idx], (table,),
        lambda g: (_Scatter(shape, idx, g, True),),
    )


def additive_scores(query: Operand, key: Operand, bias: Operand, v: Operand,
                    *, block: int = 16) -> Tensor:
    """
    s[b, i, j] = v · tanh(query[b, i] + key[b, j] + bias) for (B, T, A)
    queries and keys. Query rows are processed `block` at a time and the
    tanh activations are recomputed during backward, so no (B, T, T, A)
    array is ever held.
    """
    q, k, c, w = _lift(query), _lift(key), _lift(bias), _lift(v)
    if q.ndim != 3 or q.shape != k.shape:
        raise ShapeError("additive_scores", q.shape, k.shape)
    a = q.shape[-1]
    if c.shape != (a,) or w.shape != (a,):
        raise ShapeError("additive_scores", q.shape, c.shape, w.shape)
    if block < 1:
        raise ValueError(f"block must be positive, got {block}")
    batch, steps, _ = q.shape
    keys = k.data[:, None, :, :] + c.data

    def activations(start: int) -> Array:
        return np.tanh(q.data[:, start:start + block, None, :] + keys)

    scores = np.empty((batch, steps, steps))
    for start in range(0, steps, block):
        scores[:, start:start + block] = activations(start) @ w.data

    def backward_fn(g: Array) -> Sequence[Grad]:
        dq = np.zeros_like(q.data)
        dk = np.zeros_like(k.data)
        dc = np.zeros(a)
        dv = np.zeros(a)
        for start in range(0, steps, block):
            act = activations(start)
            gs = g[:, start:start + block]
            dv += np.einsum("bija,bij->a", act, gs)
            dpre = gs[..., None] * w.data * (1.0 - act * act)
            dq[:, start:start + block] = dpre.sum(axis=2)
            dk += dpre.sum(axis=1)
            dc += dpre.sum(axis=(0, 1, 2))
        return dq, dk, dc, dv

    return _result("additive_scores", scores, (q, k, c, w), backward_fn)


def _accumulate(store: Dict[int, Array], node: Tensor, g: Grad) -> None:
    if g is None:
        return
    key = id(node)
    current = store.get(key)
    if isinstance(g, _Scatter):
        if current is None:
            current = np.zeros(g.shape)
            store[key] = current
        g.add_into(current)
    elif current is None:
        # copied so later in-place accumulation never aliases an op's buffer
        store[key] = np.array(g, dtype=np.float64)
    else:
        current += g


def _topological(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    seen = {id(root)}
    stack: List[Tuple[Tensor, int]] = [(root, 0)]
    while stack:
        node, i = stack.pop()
        if i < len(node._parents):
            stack.append((node, i + 1))
            parent = node._parents[i]
            if parent.requires_grad and id(parent) not in seen:
                seen.add(id(parent))
                stack.append((parent, 0))
        else:
            order.append(node)
    return order


def backward(loss: Tensor) -> None:
    """
    Accumulate d loss / d t into `t.grad` for every tensor of the graph that
    requires a gradient, then release the graph.
    """
    if loss.size != 1:
        raise ShapeError("backward needs a scalar loss", loss.shape)
    if not loss.requires_grad:
        logging.debug("backward on a loss that depends on no parameters")
        return
    order = _topological(loss)
    grads: Dict[int, Array] = {id(loss): np.ones(loss.shape)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.grad is None:
            node.grad = g
        else:
            node.grad = node.grad + g
        if node._backward is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if parent.requires_grad:
                _accumulate(grads, parent, pg)
    for node in order:
        node._parents = ()
        node._backward = None


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: List[Array] = field(default_factory=list)
    v: List[Array] = field(default_factory=list)


def adam_step(params: Sequence[Array], grads: Sequence[Optional[Array]],
              state: AdamState) -> List[Array]:
    """
    One bias-corrected Adam update. Returns new parameter arrays; missing
    gradients count as zero.
    """
    if len(params) != len(grads):
        raise ValueError(f"{len(params)} parameters but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    updated: List[Array] = []
    for i, (p, g) in enumerate(zip(params, grads)):
        grad = np.zeros_like(p) if g is None else g
        if grad.shape != p.shape:
            raise ShapeError("adam_step", p.shape, grad.shape)
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad * grad
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        updated.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon))
    return updated


class Adam:
    """Adam over a fixed list of parameter tensors, updated in place."""
    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8):
        self.params = list(params)
        self.state = AdamState(lr, beta1, beta2, epsilon)

    def step(self) -> None:
        new = adam_step([p.data for p in self.params],
                        [p.grad for p in self.params], self.state)
        for p, data in zip(self.params, new):
            p.data = data

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
