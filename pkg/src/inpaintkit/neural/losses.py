"""Training losses for the per-image generator.

``masked_mse`` is the plain masked data term: the sum (not mean) of
squared differences over all channels and pixels, with the mask broadcast
across channels. ``dip_loss`` optionally adds the smoothed total
variation of the output, weighting the data term by lambda.

The style loss matches Gram matrices of feature maps between the
generator output and a style source. Features come from a small fixed
convolutional stack whose weights are drawn once from a seed and never
trained, so the loss is self-contained and reproducible.
"""

from __future__ import annotations

import numpy as np

from inpaintkit.image import Image
from inpaintkit.masking import Mask
from inpaintkit.neural.layers import (
    conv2d,
    conv2d_backward,
    leaky_relu,
    leaky_relu_backward,
)
from inpaintkit.rng import SplitMix64
from inpaintkit.variational import tv_gradient_array, tv_value_array


class LossError(Exception):
    pass


def _target_array(target) -> np.ndarray:
    return target.data if isinstance(target, Image) else np.asarray(target, dtype=np.float64)


def masked_mse(output: np.ndarray, target, mask: Mask):
    """||m (output - target)||^2 summed over channels and pixels, with its
    gradient 2 m (output - target)."""
    targ = _target_array(target)
    if output.shape != targ.shape:
        raise LossError(f"output {output.shape} vs target {targ.shape}")
    if output.shape[1:] != mask.bits.shape:
        raise LossError(f"output {output.shape} vs mask {mask.bits.shape}")
    m = mask.bits.astype(np.float64)[None, :, :]
    diff = m * (output - targ)
    loss = float(np.sum(diff * diff))
    return loss, 2.0 * diff


def dip_loss(
    output: np.ndarray,
    target,
    mask: Mask,
    lambd: float = 10.0,
    use_tv: bool = False,
    tv_epsilon: float = 1e-3,
):
    """Masked data term, optionally lambda-weighted plus smoothed TV."""
    data_loss, data_grad = masked_mse(output, target, mask)
    if not use_tv:
        return data_loss, data_grad
    loss = lambd * data_loss + tv_value_array(output, tv_epsilon)
    grad = lambd * data_grad + tv_gradient_array(output, tv_epsilon)
    return loss, grad


def gram_matrix(features: np.ndarray) -> np.ndarray:
    """Channel-by-channel inner products of a (C, H, W) feature map."""
    flat = features.reshape(features.shape[0], -1)
    return flat @ flat.T


class StyleFeatures:
    """Fixed-weight feature extractor: three conv + LeakyReLU stages.

    Weights are drawn once from the seed with the same bounded-uniform
    scheme as the generator and are never updated.
    """

    CHANNELS = (16, 32, 64)
    SLOPE = 0.2

    def __init__(self, feature_seed: int) -> None:
        rng = SplitMix64(feature_seed)
        self.kernels = []
        self.biases = []
        in_ch = 3
        for out_ch in self.CHANNELS:
            bound = np.sqrt(1.0 / (in_ch * 9))
            u = rng.uniform_array((out_ch, in_ch, 3, 3))
            self.kernels.append((2.0 * u - 1.0) * bound)
            self.biases.append(np.zeros(out_ch))
            in_ch = out_ch

    @property
    def stages(self) -> int:
        return len(self.CHANNELS)

    def forward(self, x: np.ndarray):
        """Feature maps of every stage plus caches for the input adjoint."""
        feats, caches = [], []
        a = x
        for kernel, bias in zip(self.kernels, self.biases):
            a, conv_cache = conv2d(a, kernel, bias, stride=1)
            a, gate = leaky_relu(a, self.SLOPE)
            feats.append(a)
            caches.append((conv_cache, gate))
        return feats, caches

    def backward_to_input(self, caches, feat_grads: dict[int, np.ndarray]) -> np.ndarray:
        """Propagate per-stage feature gradients back to the input."""
        g = None
        for stage in reversed(range(self.stages)):
            own = feat_grads.get(stage)
            if g is None and own is None:
                continue
            g = own if g is None else (g + own if own is not None else g)
            conv_cache, gate = caches[stage]
            g = leaky_relu_backward(gate, g)
            g, _, _ = conv2d_backward(conv_cache, g)
        if g is None:
            raise LossError("no feature gradients supplied")
        return g


def style_grams(features: StyleFeatures, image_data: np.ndarray, layer_indices):
    """Normalized Gram matrix per requested stage: G / (C * H * W)."""
    feats, _ = features.forward(image_data)
    grams = {}
    for idx in layer_indices:
        f = feats[idx]
        grams[idx] = gram_matrix(f) / f.size
    return grams


def style_loss(
    features: StyleFeatures,
    output: np.ndarray,
    reference_grams: dict[int, np.ndarray],
    beta: float,
):
    """beta * sum over stages of the squared Frobenius distance between
    normalized Gram matrices; gradient is w.r.t. ``output``."""
    feats, caches = features.forward(output)
    loss = 0.0
    feat_grads: dict[int, np.ndarray] = {}
    for idx, g_ref in reference_grams.items():
        f = feats[idx]
        flat = f.reshape(f.shape[0], -1)
        g = (flat @ flat.T) / f.size
        diff = g - g_ref
        loss += beta * float(np.sum(diff * diff))
        # d/dF of ||G - G_ref||^2 with G = F F^T / n: 2 (D + D^T) F / n
        h = 2.0 * beta * diff
        feat_grads[idx] = (((h + h.T) @ flat) / f.size).reshape(f.shape)
    grad = features.backward_to_input(caches, feat_grads)
    return loss, grad
