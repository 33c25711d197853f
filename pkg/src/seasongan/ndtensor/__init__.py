"""Minimal differentiable numeric core for the translation networks."""

from .gradcheck import grad_check, numerical_gradient, relative_error
from .layers import BatchNorm, Conv2d, ConvTranspose2d, Layer, Linear
from .losses import BCE_EPS, bce_logit_grad, bce_loss, mse_loss, mse_loss_grad
from .ops import (
    batchnorm,
    batchnorm_backward,
    conv2d,
    conv2d_backward,
    fully_connected,
    fully_connected_backward,
    leaky_relu,
    leaky_relu_backward,
    relu,
    relu_backward,
    sigmoid,
    sigmoid_backward,
    tanh,
    tanh_backward,
    transposed_conv2d,
    transposed_conv2d_backward,
)
from .optim import Adam, OptimizerState, adam_step
from .tensor import ConvSpec, ShapeError, Tensor

__all__ = [
    "Adam", "BCE_EPS", "BatchNorm", "Conv2d", "ConvSpec", "ConvTranspose2d", "Layer", "Linear",
    "OptimizerState", "ShapeError", "Tensor", "adam_step", "batchnorm", "batchnorm_backward",
    "bce_logit_grad", "bce_loss", "conv2d", "conv2d_backward", "fully_connected",
    "fully_connected_backward", "grad_check", "leaky_relu", "leaky_relu_backward",
    "mse_loss", "mse_loss_grad", "numerical_gradient", "relative_error", "relu",
    "relu_backward", "sigmoid", "sigmoid_backward", "tanh", "tanh_backward",
    "transposed_conv2d", "transposed_conv2d_backward",
]
