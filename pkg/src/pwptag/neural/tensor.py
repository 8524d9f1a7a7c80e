"""Minimal reverse-mode autodiff over dense numpy arrays.

Just enough machinery for the MLP and the convolutional sentence
classifier: embedding lookup, a 1-D convolution bank, masked global
max-pooling, affine maps, elementwise nonlinearities, dropout, and
concatenation. Gradients accumulate into `Tensor.grad` on `backward`.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        data = np.asarray(data)
        if data.dtype.kind != "f":
            data = data.astype(np.float64)
        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def add_grad(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def parameter(data, rng=None) -> Tensor:
    return Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)


def _from_op(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor(data)
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = parents
        out._backward = backward
    return out


def backward(root: Tensor) -> None:
    """Reverse-accumulate gradients of `root` (seeded with ones) into every
    reachable tensor with requires_grad."""
    topo: list[Tensor] = []
    visited: set[int] = set()

    def visit(t: Tensor) -> None:
        if id(t) in visited or not t.requires_grad:
            return
        visited.add(id(t))
        for p in t._parents:
            visit(p)
        topo.append(t)

    visit(root)
    root.add_grad(np.ones_like(root.data))
    for t in reversed(topo):
        if t._backward is not None:
            t._backward(t.grad)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data

    def bwd(grad):
        if a.requires_grad:
            a.add_grad(_unbroadcast(grad, a.data.shape))
        if b.requires_grad:
            b.add_grad(_unbroadcast(grad, b.data.shape))

    return _from_op(data, (a, b), bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data @ b.data

    def bwd(grad):
        if a.requires_grad:
            a.add_grad(grad @ b.data.T)
        if b.requires_grad:
            b.add_grad(a.data.T @ grad)

    return _from_op(data, (a, b), bwd)


def affine(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """x @ weight + bias for a batch of row vectors."""
    return add(matmul(x, weight), bias)


def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0.0)

    def bwd(grad):
        if x.requires_grad:
            # subgradient 0 at exactly zero
            x.add_grad(grad * (x.data > 0.0))

    return _from_op(data, (x,), bwd)


def stable_sigmoid(x: np.ndarray) -> np.ndarray:
    """1/(1+e^-x) computed branch-wise so large |x| never overflows."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(x: Tensor) -> Tensor:
    data = stable_sigmoid(x.data)

    def bwd(grad):
        if x.requires_grad:
            x.add_grad(grad * data * (1.0 - data))

    return _from_op(data, (x,), bwd)


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of `table` by integer ids; shape ids + (dim,)."""
    ids = np.asarray(ids, dtype=np.int64)
    data = table.data[ids]

    def bwd(grad):
        if table.requires_grad:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, ids.ravel(), grad.reshape(-1, table.data.shape[1]))

    return _from_op(data, (table,), bwd)


def conv1d_bank(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Valid 1-D convolution of a (B, L, d) batch with (F, w, d) filters.

    Returns (B, L-w+1, F) activations: out[b,t,f] = sum over the window of
    x[b, t:t+w, :] * weight[f] plus bias[f].
    """
    B, L, d = x.data.shape
    F, w, d2 = weight.data.shape
    if d != d2:
        raise ParameterError(f"filter depth {d2} does not match embedding dim {d}")
    if L < w:
        raise ParameterError(f"sequence length {L} shorter than filter width {w}")
    T = L - w + 1
    # windows view (B, T, w, d) flattened for one big matmul
    win = np.lib.stride_tricks.sliding_window_view(x.data, (w, d), axis=(1, 2))[:, :, 0]
    win2d = win.reshape(B * T, w * d)
    wmat = weight.data.reshape(F, w * d).T  # (w*d, F)
    data = (win2d @ wmat).reshape(B, T, F) + bias.data

    def bwd(grad):
        g2d = grad.reshape(B * T, F)
        if weight.requires_grad:
            weight.add_grad((win2d.T @ g2d).T.reshape(F, w, d))
        if bias.requires_grad:
            bias.add_grad(g2d.sum(axis=0))
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            for i in range(w):
                # each window offset scatters back one shifted slab
                gx[:, i : i + T, :] += grad @ weight.data[:, i, :]
            x.add_grad(gx)

    return _from_op(data, (x, weight, bias), bwd)


def masked_max_pool(x: Tensor, valid: np.ndarray) -> Tensor:
    """Global max over axis 1 of (B, T, F), restricted per item to the
    first `valid[b]` positions (at least one). The gradient routes
    entirely to the argmax position of each (item, filter) pair."""
    B, T, F = x.data.shape
    valid = np.asarray(valid, dtype=np.int64)
    if valid.shape != (B,):
        raise ParameterError("valid-count vector must have one entry per item")
    if np.any(valid < 1) or np.any(valid > T):
        raise ParameterError("valid counts must lie in [1, T]")
    masked = np.where(np.arange(T)[None, :, None] < valid[:, None, None], x.data, -np.inf)
    arg = masked.argmax(axis=1)  # (B, F)
    rows = np.arange(B)[:, None]
    cols = np.arange(F)[None, :]
    data = x.data[rows, arg, cols]

    def bwd(grad):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            np.add.at(gx, (rows, arg, cols), grad)
            x.add_grad(gx)

    return _from_op(data, (x,), bwd)


def concat(tensors: list[Tensor], axis: int = 1) -> Tensor:
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(grad):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                index = [slice(None)] * grad.ndim
                index[axis] = slice(lo, hi)
                t.add_grad(grad[tuple(index)])

    return _from_op(data, tuple(tensors), bwd)


def dropout(x: Tensor, rate: float, rng: np.random.Generator, train: bool) -> Tensor:
    """Inverted dropout; identity when not training or rate is zero."""
    if not train or rate == 0.0:
        return x
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    mask = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    data = x.data * mask

    def bwd(grad):
        if x.requires_grad:
            x.add_grad(grad * mask)

    return _from_op(data, (x,), bwd)
