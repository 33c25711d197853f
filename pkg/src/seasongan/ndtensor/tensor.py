"""Parameter container and convolution geometry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Raised when array shapes are inconsistent with an operation."""


class Tensor:
    """A named array with an optional gradient buffer of identical shape.

    Layers keep their trainable weights and running statistics in these;
    activations flowing between layers are plain numpy arrays.
    """

    __slots__ = ("data", "grad", "name")

    def __init__(self, data, name: str = ""):
        self.data = np.ascontiguousarray(data)
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, g: np.ndarray) -> None:
        if g.shape != self.data.shape:
            raise ShapeError(
                f"gradient for {self.name or 'tensor'} has shape {g.shape}, expected {self.data.shape}"
            )
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def __repr__(self) -> str:
        return f"Tensor(name={self.name!r}, shape={self.shape}, dtype={self.data.dtype})"


@dataclass(frozen=True)
class ConvSpec:
    in_channels: int
    out_channels: int
    kernel: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        for field in ("in_channels", "out_channels", "kernel", "stride"):
            if getattr(self, field) < 1:
                raise ValueError(f"ConvSpec.{field} must be positive, got {getattr(self, field)}")
        if self.padding < 0:
            raise ValueError(f"ConvSpec.padding must be non-negative, got {self.padding}")

    def output_size(self, n: int) -> int:
        """Spatial size of a strided convolution over an input of size ``n``."""
        out = (n + 2 * self.padding - self.kernel) // self.stride + 1
        if n + 2 * self.padding < self.kernel or out < 1:
            raise ShapeError(
                f"input size {n} too small for kernel {self.kernel} with padding {self.padding}"
            )
        return out

    def transposed_output_size(self, n: int) -> int:
        out = (n - 1) * self.stride - 2 * self.padding + self.kernel
        if out < 1:
            raise ShapeError(f"transposed convolution of size {n} yields empty output")
        return out
