"""Stateless-forward layer objects.

``forward`` returns the output together with an opaque cache, and
``backward(cache, grad_out)`` accumulates parameter gradients into the
layer's tensors and returns the gradient with respect to the input. Keeping
activations in the cache rather than on the layer lets one network be applied
several times within a single training step.
"""

from __future__ import annotations

import numpy as np

from . import ops
from .tensor import ConvSpec, Tensor


class Layer:
    def parameters(self) -> list[Tensor]:
        return []

    def buffers(self) -> list[Tensor]:
        return []


class Conv2d(Layer):
    def __init__(self, spec: ConvSpec, bias: bool = True, dtype=np.float64, name: str = "conv"):
        self.spec = spec
        k = spec.kernel
        self.weight = Tensor(np.zeros((spec.out_channels, spec.in_channels, k, k), dtype), f"{name}.weight")
        self.bias = Tensor(np.zeros(spec.out_channels, dtype), f"{name}.bias") if bias else None

    def forward(self, x):
        b = self.bias.data if self.bias is not None else None
        return ops.conv2d(x, self.weight.data, b, self.spec), x

    def backward(self, cache, grad_out, input_grad: bool = True):
        grad_x, grad_w, grad_b = ops.conv2d_backward(grad_out, cache, self.weight.data, self.spec, input_grad)
        self.weight.accumulate(grad_w)
        if self.bias is not None:
            self.bias.accumulate(grad_b)
        return grad_x

    def parameters(self):
        return [self.weight] + ([self.bias] if self.bias is not None else [])


class ConvTranspose2d(Conv2d):
    def __init__(self, spec: ConvSpec, bias: bool = True, dtype=np.float64, name: str = "deconv"):
        self.spec = spec
        k = spec.kernel
        self.weight = Tensor(np.zeros((spec.in_channels, spec.out_channels, k, k), dtype), f"{name}.weight")
        self.bias = Tensor(np.zeros(spec.out_channels, dtype), f"{name}.bias") if bias else None

    def forward(self, x):
        b = self.bias.data if self.bias is not None else None
        return ops.transposed_conv2d(x, self.weight.data, b, self.spec), x

    def backward(self, cache, grad_out):
        grad_x, grad_w, grad_b = ops.transposed_conv2d_backward(grad_out, cache, self.weight.data, self.spec)
        self.weight.accumulate(grad_w)
        if self.bias is not None:
            self.bias.accumulate(grad_b)
        return grad_x


class BatchNorm(Layer):
    def __init__(self, channels: int, dtype=np.float64, name: str = "bn"):
        self.gamma = Tensor(np.ones(channels, dtype), f"{name}.gamma")
        self.beta = Tensor(np.zeros(channels, dtype), f"{name}.beta")
        self.running_mean = Tensor(np.zeros(channels, dtype), f"{name}.running_mean")
        self.running_var = Tensor(np.ones(channels, dtype), f"{name}.running_var")

    def forward(self, x, train: bool):
        return ops.batchnorm(x, self.gamma.data, self.beta.data, "train" if train else "eval",
                             self.running_mean.data, self.running_var.data)

    def backward(self, cache, grad_out):
        grad_x, grad_gamma, grad_beta = ops.batchnorm_backward(grad_out, cache)
        self.gamma.accumulate(grad_gamma)
        self.beta.accumulate(grad_beta)
        return grad_x

    def parameters(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [self.running_mean, self.running_var]


class Linear(Layer):
    def __init__(self, in_features: int, out_features: int, dtype=np.float64, name: str = "fc"):
        self.weight = Tensor(np.zeros((in_features, out_features), dtype), f"{name}.weight")
        self.bias = Tensor(np.zeros(out_features, dtype), f"{name}.bias")

    def forward(self, x):
        return ops.fully_connected(x, self.weight.data, self.bias.data), x

    def backward(self, cache, grad_out):
        grad_x, grad_w, grad_b = ops.fully_connected_backward(grad_out, cache, self.weight.data)
        self.weight.accumulate(grad_w)
        self.bias.accumulate(grad_b)
        return grad_x

    def parameters(self):
        return [self.weight, self.bias]
