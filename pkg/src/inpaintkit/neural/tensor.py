"""Value array with paired gradient storage."""

from __future__ import annotations

import numpy as np


class Tensor:
    """N-dimensional float64 values with a same-shaped gradient buffer."""

    __slots__ = ("values", "grad")

    def __init__(self, values) -> None:
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = np.zeros_like(self.values)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.values.shape})"
