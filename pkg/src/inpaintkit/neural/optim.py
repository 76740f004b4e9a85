"""Root-mean-square-propagation update."""

from __future__ import annotations

import numpy as np

from inpaintkit.neural.tensor import Tensor


def rmsprop_update(
    values: np.ndarray,
    grad: np.ndarray,
    state: np.ndarray,
    lr: float,
    alpha: float = 0.99,
    eps: float = 1e-8,
) -> None:
    """In place: v <- alpha v + (1 - alpha) g^2; theta <- theta - lr g / (sqrt(v) + eps)."""
    if values.shape != grad.shape or values.shape != state.shape:
        raise ValueError("values, grad, and state shapes must agree")
    state *= alpha
    state += (1.0 - alpha) * grad * grad
    values -= lr * grad / (np.sqrt(state) + eps)


def rmsprop_step(
    tensors: list[Tensor],
    states: list[np.ndarray],
    lr: float,
    alpha: float = 0.99,
    eps: float = 1e-8,
) -> None:
    for t, v in zip(tensors, states):
        rmsprop_update(t.values, t.grad, v, lr, alpha, eps)


def rmsprop_init(tensors: list[Tensor]) -> list[np.ndarray]:
    return [np.zeros_like(t.values) for t in tensors]
