"""Parameter initialization and the Adam update rule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from .tensor import Tensor


def _fans(shape: tuple[int, ...]) -> tuple[int, int]:
    if len(shape) == 2:
        return shape[0], shape[1]
    if len(shape) == 3:
        # convolution bank (filters, width, depth): receptive field feeds in
        filters, width, depth = shape
        return width * depth, filters
    raise ParameterError(f"xavier init needs a 2-D or 3-D shape, got {shape}")


def xavier_init(shape: tuple[int, ...], seed_or_rng, dtype=np.float64) -> Tensor:
    """Uniform init on +-sqrt(6 / (fan_in + fan_out))."""
    fan_in, fan_out = _fans(tuple(shape))
    if fan_in == 0 or fan_out == 0:
        raise ParameterError(f"zero fan in shape {shape}")
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype), requires_grad=True)


@dataclass
class AdamState:
    """First/second moment estimates per parameter plus the step count."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def create(
        cls,
        params: list[Tensor],
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> "AdamState":
        return cls(
            learning_rate=learning_rate,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            t=0,
            m=[np.zeros_like(p.data) for p in params],
            v=[np.zeros_like(p.data) for p in params],
        )


def adam_step(
    state: AdamState, params: list[Tensor], grads: list[np.ndarray] | None = None
) -> None:
    """One bias-corrected Adam update, in place.

    p -= lr * m_hat / (sqrt(v_hat) + eps), with m_hat = m/(1-beta1^t) and
    v_hat = v/(1-beta2^t).
    """
    if len(params) != len(state.m):
        raise ParameterError("parameter list does not match optimizer state")
    if grads is None:
        grads = [p.grad for p in params]
    if len(grads) != len(params):
        raise ParameterError("gradient list does not match parameter list")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** state.t
    bias2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ParameterError(
                f"gradient shape {g.shape} does not match parameter {p.data.shape}"
            )
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= state.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
