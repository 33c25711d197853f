"""Encoder-decoder generator and feature-producing discriminator.

Both networks share the same strided encoder shape: ``len(encoder_channels)``
convolutions with kernel 4 and stride 2, each halving the resolution. The
generator mirrors the encoder with transposed convolutions and adds every
encoder activation onto the decoder activation of matching resolution. The
discriminator flattens the encoder output into a fully connected feature
layer and maps that to a single realness probability.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .ndtensor import BatchNorm, Conv2d, ConvSpec, ConvTranspose2d, Linear, ShapeError, Tensor
from .ndtensor import ops

INIT_STD = 0.02


@dataclass
class GeneratorConfig:
    input_size: int = 64
    input_channels: int = 3
    encoder_channels: list[int] = field(default_factory=lambda: [64, 128, 256, 512])
    kernel: int = 4
    stride: int = 2
    leaky_slope: float = 0.2
    skip_connections: bool = True
    # adds the input image to the pre-tanh output; lets a zeroed head act as tanh(x)
    input_skip: bool = False

    def validate(self) -> None:
        _validate_encoder(self.input_size, self.input_channels, self.encoder_channels,
                          self.kernel, self.stride, self.leaky_slope)

    @property
    def padding(self) -> int:
        return (self.kernel - self.stride) // 2


@dataclass
class DiscriminatorConfig:
    input_size: int = 64
    input_channels: int = 3
    encoder_channels: list[int] = field(default_factory=lambda: [64, 128, 256, 512])
    feature_dim: int = 512
    kernel: int = 4
    stride: int = 2
    leaky_slope: float = 0.2

    def validate(self) -> None:
        _validate_encoder(self.input_size, self.input_channels, self.encoder_channels,
                          self.kernel, self.stride, self.leaky_slope)
        if self.feature_dim < 1:
            raise ValueError(f"feature_dim must be positive, got {self.feature_dim}")

    @property
    def padding(self) -> int:
        return (self.kernel - self.stride) // 2

    @property
    def bottleneck_size(self) -> int:
        return self.input_size // self.stride ** len(self.encoder_channels)


def _validate_encoder(size, channels, enc, kernel, stride, slope):
    if not enc or any(c < 1 for c in enc):
        raise ValueError(f"encoder_channels must be a non-empty list of positive ints, got {enc}")
    if channels < 1:
        raise ValueError(f"input_channels must be positive, got {channels}")
    if stride < 1 or kernel < stride or (kernel - stride) % 2:
        raise ValueError(f"kernel {kernel} and stride {stride} cannot halve resolution exactly")
    if size % stride ** len(enc):
        raise ValueError(f"input_size {size} is not divisible by {stride}**{len(enc)}")
    if not 0.0 < slope < 1.0:
        raise ValueError(f"leaky_slope must lie in (0, 1), got {slope}")


def _check_batch(x: np.ndarray, channels: int, size: int) -> None:
    if x.ndim != 4 or x.shape[1:] != (channels, size, size):
        raise ShapeError(f"expected a batch of shape (N, {channels}, {size}, {size}), got {x.shape}")


class _Network:
    def named_parameters(self) -> dict[str, Tensor]:
        return {t.name: t for layer in self._layers() for t in layer.parameters()}

    def named_buffers(self) -> dict[str, Tensor]:
        return {t.name: t for layer in self._layers() for t in layer.buffers()}

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def state_dict(self) -> dict[str, np.ndarray]:
        out = {n: t.data for n, t in self.named_parameters().items()}
        out.update({n: t.data for n, t in self.named_buffers().items()})
        return out

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        tensors = {**self.named_parameters(), **self.named_buffers()}
        missing = sorted(set(tensors) - set(state))
        unexpected = sorted(set(state) - set(tensors))
        if missing or unexpected:
            raise KeyError(f"state mismatch: missing {missing}, unexpected {unexpected}")
        for name, t in tensors.items():
            if state[name].shape != t.shape:
                raise ShapeError(f"{name}: stored shape {state[name].shape}, network expects {t.shape}")
            t.data = np.array(state[name], dtype=t.data.dtype, copy=True)

    @property
    def dtype(self) -> np.dtype:
        return self.parameters()[0].data.dtype

    def num_parameters(self) -> int:
        return sum(t.size for t in self.parameters())

    def zero_grad(self) -> None:
        for t in self.parameters():
            t.zero_grad()

    def init_weights(self, rng: np.random.Generator) -> None:
        """Zero-mean Gaussian weights (std 0.02), zero biases, unit BN scale."""
        for layer in self._layers():
            if isinstance(layer, BatchNorm):
                continue
            layer.weight.data[...] = rng.normal(0.0, INIT_STD, layer.weight.shape)


class Generator(_Network):
    def __init__(self, config: GeneratorConfig | None = None, dtype=np.float64):
        self.config = config = config or GeneratorConfig()
        config.validate()
        k, s, p = config.kernel, config.stride, config.padding
        enc = config.encoder_channels
        self.encoder: list[tuple[Conv2d, BatchNorm | None]] = []
        c_in = config.input_channels
        for i, c in enumerate(enc):
            # batchnorm follows every layer but the first, so only that one needs a bias
            conv = Conv2d(ConvSpec(c_in, c, k, s, p), bias=i == 0, dtype=dtype, name=f"enc{i}.conv")
            bn = BatchNorm(c, dtype, f"enc{i}.bn") if i > 0 else None
            self.encoder.append((conv, bn))
            c_in = c
        self.decoder: list[tuple[ConvTranspose2d, BatchNorm | None]] = []
        outs = list(reversed(enc[:-1])) + [config.input_channels]
        for i, c in enumerate(outs):
            last = i == len(outs) - 1
            deconv = ConvTranspose2d(ConvSpec(c_in, c, k, s, p), bias=last, dtype=dtype, name=f"dec{i}.deconv")
            bn = None if last else BatchNorm(c, dtype, f"dec{i}.bn")
            self.decoder.append((deconv, bn))
            c_in = c

    def _layers(self):
        for pair in self.encoder + self.decoder:
            yield from (layer for layer in pair if layer is not None)

    def forward(self, x: np.ndarray, train: bool = True):
        """Translate a batch; returns ``(images, cache)`` for ``backward``."""
        cfg = self.config
        _check_batch(x, cfg.input_channels, cfg.input_size)
        slope = cfg.leaky_slope
        enc_caches, skips = [], []
        h = x
        for conv, bn in self.encoder:
            z, c_conv = conv.forward(h)
            c_bn = None
            if bn is not None:
                z, c_bn = bn.forward(z, train)
            h = ops.leaky_relu(z, slope)
            enc_caches.append((c_conv, c_bn, z))
            skips.append(h)
        dec_caches = []
        n_dec = len(self.decoder)
        for i, (deconv, bn) in enumerate(self.decoder):
            z, c_conv = deconv.forward(h)
            if bn is not None:
                z, c_bn = bn.forward(z, train)
                h = ops.relu(z)
                if cfg.skip_connections:
                    h = h + skips[n_dec - 2 - i]
            else:
                c_bn = None
                if cfg.input_skip:
                    z = z + x
                h = ops.tanh(z)
            dec_caches.append((c_conv, c_bn, z))
        return h, (enc_caches, dec_caches, h)

    def backward(self, cache, grad_out: np.ndarray, input_grad: bool = True) -> np.ndarray | None:
        """Accumulate parameter gradients; return the gradient w.r.t. the input batch.

        ``input_grad=False`` skips that last gradient and returns None.
        """
        cfg = self.config
        enc_caches, dec_caches, out = cache
        n_dec = len(self.decoder)
        skip_grads = [None] * len(self.encoder)
        grad_x = None
        g = grad_out
        for i in reversed(range(n_dec)):
            deconv, bn = self.decoder[i]
            c_conv, c_bn, z = dec_caches[i]
            if bn is None:
                g = ops.tanh_backward(g, out)
                if cfg.input_skip:
                    grad_x = g
            else:
                if cfg.skip_connections:
                    skip_grads[n_dec - 2 - i] = g
                g = ops.relu_backward(g, z)
                g = bn.backward(c_bn, g)
            g = deconv.backward(c_conv, g)
        for i in reversed(range(len(self.encoder))):
            conv, bn = self.encoder[i]
            c_conv, c_bn, z = enc_caches[i]
            if skip_grads[i] is not None:
                g = g + skip_grads[i]
            g = ops.leaky_relu_backward(g, z, cfg.leaky_slope)
            if bn is not None:
                g = bn.backward(c_bn, g)
            g = conv.backward(c_conv, g, input_grad or i > 0)
        if not input_grad:
            return None
        return g if grad_x is None else g + grad_x

    def __call__(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        return self.forward(x, train)[0]

    def activation_pattern(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        """Signs of every (leaky) ReLU input, flattened; the tanh head is smooth."""
        _, (enc, dec, _) = self.forward(x, train)
        return np.concatenate([(z > 0).ravel() for _, _, z in enc + dec[:-1]])


class Discriminator(_Network):
    def __init__(self, config: DiscriminatorConfig | None = None, dtype=np.float64):
        self.config = config = config or DiscriminatorConfig()
        config.validate()
        k, s, p = config.kernel, config.stride, config.padding
        self.encoder: list[tuple[Conv2d, BatchNorm | None]] = []
        c_in = config.input_channels
        for i, c in enumerate(config.encoder_channels):
            conv = Conv2d(ConvSpec(c_in, c, k, s, p), bias=i == 0, dtype=dtype, name=f"enc{i}.conv")
            bn = BatchNorm(c, dtype, f"enc{i}.bn") if i > 0 else None
            self.encoder.append((conv, bn))
            c_in = c
        flat = c_in * config.bottleneck_size ** 2
        self.feature = Linear(flat, config.feature_dim, dtype, "feature")
        self.head = Linear(config.feature_dim, 1, dtype, "head")

    def _layers(self):
        for pair in self.encoder:
            yield from (layer for layer in pair if layer is not None)
        yield self.feature
        yield self.head

    def forward(self, x: np.ndarray, train: bool = True):
        """Returns ``(features, realness, logits, cache)``.

        ``features`` are the fully connected layer outputs; the realness head
        reads them through a leaky ReLU, a linear map and a sigmoid.
        """
        cfg = self.config
        _check_batch(x, cfg.input_channels, cfg.input_size)
        caches = []
        h = x
        for conv, bn in self.encoder:
            z, c_conv = conv.forward(h)
            c_bn = None
            if bn is not None:
                z, c_bn = bn.forward(z, train)
            h = ops.leaky_relu(z, cfg.leaky_slope)
            caches.append((c_conv, c_bn, z))
        enc_shape = h.shape
        features, c_feat = self.feature.forward(h.reshape(len(h), -1))
        a = ops.leaky_relu(features, cfg.leaky_slope)
        logits, c_head = self.head.forward(a)
        logits = logits[:, 0]
        realness = ops.sigmoid(logits)
        return features, realness, logits, (caches, enc_shape, c_feat, features, c_head)

    def backward(self, cache, grad_logits: np.ndarray | None = None,
                 grad_features: np.ndarray | None = None, input_grad: bool = True) -> np.ndarray | None:
        """Backpropagate gradients w.r.t. the logits and/or the features."""
        cfg = self.config
        caches, enc_shape, c_feat, features, c_head = cache
        g_feat = np.zeros_like(features) if grad_features is None else np.array(grad_features, copy=True)
        if grad_logits is not None:
            g = self.head.backward(c_head, grad_logits.reshape(-1, 1))
            g_feat += ops.leaky_relu_backward(g, features, cfg.leaky_slope)
        g = self.feature.backward(c_feat, g_feat).reshape(enc_shape)
        for i in reversed(range(len(self.encoder))):
            conv, bn = self.encoder[i]
            c_conv, c_bn, z = caches[i]
            g = ops.leaky_relu_backward(g, z, cfg.leaky_slope)
            if bn is not None:
                g = bn.backward(c_bn, g)
            g = conv.backward(c_conv, g)
        return g

    def __call__(self, x: np.ndarray, train: bool = False):
        features, realness, _, _ = self.forward(x, train)
        return features, realness

    def activation_pattern(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        """Signs of every leaky ReLU input, flattened."""
        features, _, _, (caches, _, _, _, _) = self.forward(x, train)
        return np.concatenate([(z > 0).ravel() for _, _, z in caches] + [(features > 0).ravel()])


def generator_forward(g: Generator, batch: np.ndarray, train: bool = False) -> np.ndarray:
    return g(batch, train)


def discriminator_forward(d: Discriminator, batch: np.ndarray, train: bool = False):
    """Features (N, feature_dim) and realness (N,) for a batch; eval-mode by default."""
    return d(batch, train)


def init_networks(gen_cfg: GeneratorConfig, disc_cfg: DiscriminatorConfig, seed: int, dtype=np.float64):
    """Build ``(G_A, G_B, D_A, D_B)`` with weights drawn from one seeded stream."""
    if (gen_cfg.input_size, gen_cfg.input_channels) != (disc_cfg.input_size, disc_cfg.input_channels):
        raise ValueError(
            f"generator images are {gen_cfg.input_channels}x{gen_cfg.input_size}^2 but the "
            f"discriminator expects {disc_cfg.input_channels}x{disc_cfg.input_size}^2"
        )
    rng = np.random.default_rng(seed)
    nets = (Generator(gen_cfg, dtype), Generator(gen_cfg, dtype),
            Discriminator(disc_cfg, dtype), Discriminator(disc_cfg, dtype))
    for net in nets:
        net.init_weights(rng)
    return nets


def config_dict(config) -> dict:
    return asdict(config)
