"""Hourglass generator: strided-conv encoder, bilinear-upsampling decoder,
optional skip branches, final 3-channel projection.

The layer inventory is a pure function of the configuration, so parameter
shapes, counts, and the serialization order are all derivable without
instantiating weights. Per level k:

  encoder  stride-2 conv -> conv -> LeakyReLU
  decoder  bilinear 2x -> concat(skip branch, features) -> conv -> conv
           -> LeakyReLU

The skip branch at level k is a 3x3 conv applied to the activation
*entering* encoder level k (the network input for k = 0), which lives at
the decoder-level-k resolution. A final 3x3 conv maps to 3 channels,
followed by a sigmoid when configured.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from inpaintkit.neural.layers import (
    LayerError,
    concat_channels,
    concat_channels_backward,
    conv2d,
    conv2d_backward,
    leaky_relu,
    leaky_relu_backward,
    sigmoid,
    sigmoid_backward,
    upsample_bilinear2x,
    upsample_bilinear2x_backward,
)
from inpaintkit.neural.tensor import Tensor
from inpaintkit.rng import SplitMix64


class NetError(Exception):
    pass


@dataclass
class NetConfig:
    levels: int = 3
    channels_per_level: tuple[int, ...] = (16, 32, 64)
    skip_channels_per_level: tuple[int, ...] = (4, 4, 4)
    leaky_slope: float = 0.2
    use_sigmoid_output: bool = True
    z_channels: int = 8

    def __post_init__(self) -> None:
        self.channels_per_level = tuple(self.channels_per_level)
        self.skip_channels_per_level = tuple(self.skip_channels_per_level)
        if self.levels < 1:
            raise NetError("levels must be >= 1")
        if len(self.channels_per_level) != self.levels:
            raise NetError("channels_per_level length must equal levels")
        if len(self.skip_channels_per_level) != self.levels:
            raise NetError("skip_channels_per_level length must equal levels")
        if min(self.channels_per_level) < 1 or self.z_channels < 1:
            raise NetError("channel counts must be >= 1")
        if min(self.skip_channels_per_level) < 0:
            raise NetError("skip channel counts must be >= 0")
        if not 0.0 < self.leaky_slope < 1.0:
            raise NetError("leaky_slope must lie in (0, 1)")


@dataclass
class ConvSpec:
    name: str
    out_channels: int
    in_channels: int
    stride: int

    @property
    def parameter_count(self) -> int:
        return self.out_channels * self.in_channels * 9 + self.out_channels


def layer_specs(config: NetConfig) -> list[ConvSpec]:
    """Every convolution in the net, in the canonical storage order:
    encoder pairs, skip branches, decoder pairs (deepest first), output."""
    ch = config.channels_per_level
    sk = config.skip_channels_per_level
    enc_inputs = [config.z_channels] + list(ch[:-1])
    specs = []
    for k in range(config.levels):
        specs.append(ConvSpec(f"enc{k}a", ch[k], enc_inputs[k], 2))
        specs.append(ConvSpec(f"enc{k}b", ch[k], ch[k], 1))
    for k in range(config.levels):
        if sk[k] > 0:
            specs.append(ConvSpec(f"skip{k}", sk[k], enc_inputs[k], 1))
    for k in reversed(range(config.levels)):
        dec_in = ch[k + 1] if k < config.levels - 1 else ch[config.levels - 1]
        specs.append(ConvSpec(f"dec{k}a", ch[k], dec_in + sk[k], 1))
        specs.append(ConvSpec(f"dec{k}b", ch[k], ch[k], 1))
    specs.append(ConvSpec("out", 3, ch[0], 1))
    return specs


def parameter_count(config: NetConfig) -> int:
    return sum(spec.parameter_count for spec in layer_specs(config))


@dataclass
class NetParams:
    """Kernels and biases matching a configuration, in spec order."""

    specs: list[ConvSpec]
    kernels: list[Tensor]
    biases: list[Tensor]
    index: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.index = {spec.name: i for i, spec in enumerate(self.specs)}

    @classmethod
    def initialize(cls, config: NetConfig, rng: SplitMix64) -> "NetParams":
        """Kernels uniform in [-b, b] with b = sqrt(1 / (fan_in * 9));
        biases zero. Draw order follows :func:`layer_specs`."""
        specs = layer_specs(config)
        kernels, biases = [], []
        for spec in specs:
            bound = np.sqrt(1.0 / (spec.in_channels * 9))
            u = rng.uniform_array((spec.out_channels, spec.in_channels, 3, 3))
            kernels.append(Tensor((2.0 * u - 1.0) * bound))
            biases.append(Tensor(np.zeros(spec.out_channels)))
        return cls(specs, kernels, biases)

    @classmethod
    def from_flat(cls, config: NetConfig, flat: np.ndarray) -> "NetParams":
        specs = layer_specs(config)
        expected = sum(s.parameter_count for s in specs)
        if flat.size != expected:
            raise NetError(f"expected {expected} parameters, got {flat.size}")
        kernels, biases = [], []
        pos = 0
        for spec in specs:
            n_k = spec.out_channels * spec.in_channels * 9
            kernels.append(
                Tensor(flat[pos : pos + n_k].reshape(spec.out_channels, spec.in_channels, 3, 3))
            )
            pos += n_k
            biases.append(Tensor(flat[pos : pos + spec.out_channels]))
            pos += spec.out_channels
        return cls(specs, kernels, biases)

    def to_flat(self) -> np.ndarray:
        parts = []
        for k, b in zip(self.kernels, self.biases):
            parts.append(k.values.ravel())
            parts.append(b.values.ravel())
        return np.concatenate(parts)

    def tensors(self) -> list[Tensor]:
        out = []
        for k, b in zip(self.kernels, self.biases):
            out.append(k)
            out.append(b)
        return out

    def zero_grads(self) -> None:
        for t in self.tensors():
            t.zero_grad()

    def _apply(self, name: str, x: np.ndarray):
        i = self.index[name]
        y, cache = conv2d(x, self.kernels[i].values, self.biases[i].values, self.specs[i].stride)
        return y, (i, cache)

    def _apply_backward(self, conv_cache, gy: np.ndarray) -> np.ndarray:
        i, cache = conv_cache
        gx, gk, gb = conv2d_backward(cache, gy)
        self.kernels[i].grad += gk
        self.biases[i].grad += gb
        return gx


def net_forward(config: NetConfig, params: NetParams, z: np.ndarray):
    """Run the generator; returns (output, cache) with the cache holding
    everything the backward pass needs."""
    if z.ndim != 3 or z.shape[0] != config.z_channels:
        raise NetError(f"z must be ({config.z_channels}, H, W), got {z.shape}")
    div = 1 << config.levels
    if z.shape[1] % div or z.shape[2] % div:
        raise NetError(f"spatial dims {z.shape[1:]} must be divisible by {div}")

    slope = config.leaky_slope
    sk = config.skip_channels_per_level
    enc_caches = []
    a = z
    enc_inputs = []
    for k in range(config.levels):
        enc_inputs.append(a)
        a, c1 = params._apply(f"enc{k}a", a)
        a, c2 = params._apply(f"enc{k}b", a)
        a, gate = leaky_relu(a, slope)
        enc_caches.append((c1, c2, gate))

    dec_caches = []
    for k in reversed(range(config.levels)):
        a, up_cache = upsample_bilinear2x(a)
        if sk[k] > 0:
            s, skip_cache = params._apply(f"skip{k}", enc_inputs[k])
            a, sizes = concat_channels([s, a])
        else:
            skip_cache, sizes = None, None
        a, c1 = params._apply(f"dec{k}a", a)
        a, c2 = params._apply(f"dec{k}b", a)
        a, gate = leaky_relu(a, slope)
        dec_caches.append((k, up_cache, skip_cache, sizes, c1, c2, gate))

    a, out_cache = params._apply("out", a)
    sig_cache = None
    if config.use_sigmoid_output:
        a, sig_cache = sigmoid(a)
    return a, (enc_caches, dec_caches, out_cache, sig_cache)


def net_backward(config: NetConfig, params: NetParams, cache, g_out: np.ndarray) -> np.ndarray:
    """Accumulate parameter gradients for an upstream output gradient;
    returns the gradient w.r.t. the network input."""
    enc_caches, dec_caches, out_cache, sig_cache = cache
    g = g_out
    if sig_cache is not None:
        g = sigmoid_backward(sig_cache, g)
    g = params._apply_backward(out_cache, g)

    skip_grads: dict[int, np.ndarray] = {}
    for k, up_cache, skip_cache, sizes, c1, c2, gate in reversed(dec_caches):
        g = leaky_relu_backward(gate, g)
        g = params._apply_backward(c2, g)
        g = params._apply_backward(c1, g)
        if skip_cache is not None:
            g_skip, g = concat_channels_backward(sizes, g)
            skip_grads[k] = params._apply_backward(skip_cache, g_skip)
        g = upsample_bilinear2x_backward(up_cache, g)

    for k in reversed(range(config.levels)):
        c1, c2, gate = enc_caches[k]
        g = leaky_relu_backward(gate, g)
        g = params._apply_backward(c2, g)
        g = params._apply_backward(c1, g)
        if k in skip_grads:
            g = g + skip_grads[k]
    return g
