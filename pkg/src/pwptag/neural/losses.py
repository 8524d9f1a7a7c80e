"""Training losses with fused analytic gradients w.r.t. the activations.

Every loss reduces to a mean-over-elements scalar; multiclass targets are
one-hot rows, multilabel targets are 0/1 rows.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from .tensor import Tensor, _from_op, stable_sigmoid

CROSS_ENTROPY_SOFTMAX = "cross_entropy_softmax"
BCE_SIGMOID = "bce_sigmoid"
MSE_SIGMOID = "mse_sigmoid"

LOSS_KINDS = (CROSS_ENTROPY_SOFTMAX, BCE_SIGMOID, MSE_SIGMOID)


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=axis, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=axis, keepdims=True)


def _check(activations: Tensor, targets: np.ndarray) -> np.ndarray:
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != activations.data.shape:
        raise ParameterError(
            f"targets shape {targets.shape} does not match activations "
            f"{activations.data.shape}"
        )
    return targets


def cross_entropy_softmax(activations: Tensor, targets: np.ndarray) -> Tensor:
    """Mean softmax cross-entropy over the batch; targets one-hot."""
    targets = _check(activations, targets)
    z = activations.data
    batch = z.shape[0]
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    data = float(np.mean(lse - (z * targets).sum(axis=1)))
    probs = softmax(z, axis=1)

    def bwd(grad):
        if activations.requires_grad:
            activations.add_grad(grad * (probs - targets) / batch)

    return _from_op(np.asarray(data), (activations,), bwd)


def bce_sigmoid(activations: Tensor, targets: np.ndarray) -> Tensor:
    """Mean elementwise binary cross-entropy on sigmoid outputs, computed
    in the overflow-safe logit form."""
    targets = _check(activations, targets)
    z = activations.data
    raw = np.maximum(z, 0.0) - z * targets + np.log1p(np.exp(-np.abs(z)))
    data = float(raw.mean())
    sig = stable_sigmoid(z)

    def bwd(grad):
        if activations.requires_grad:
            activations.add_grad(grad * (sig - targets) / z.size)

    return _from_op(np.asarray(data), (activations,), bwd)


def mse_sigmoid(activations: Tensor, targets: np.ndarray) -> Tensor:
    """Mean squared error between sigmoid outputs and targets."""
    targets = _check(activations, targets)
    sig = stable_sigmoid(activations.data)
    diff = sig - targets
    data = float(np.mean(diff * diff))

    def bwd(grad):
        if activations.requires_grad:
            activations.add_grad(
                grad * 2.0 * diff * sig * (1.0 - sig) / activations.data.size
            )

    return _from_op(np.asarray(data), (activations,), bwd)


_LOSSES = {
    CROSS_ENTROPY_SOFTMAX: cross_entropy_softmax,
    BCE_SIGMOID: bce_sigmoid,
    MSE_SIGMOID: mse_sigmoid,
}


def loss(kind: str, activations: Tensor, targets: np.ndarray) -> Tensor:
    try:
        fn = _LOSSES[kind]
    except KeyError:
        raise ParameterError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")
    return fn(activations, targets)
