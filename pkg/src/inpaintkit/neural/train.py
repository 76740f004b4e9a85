"""Per-image training loops.

``dip_train`` fits the untrained generator to the reliable pixels of one
degraded image: a noise input drawn once and held fixed, forward pass,
masked loss (optionally with a TV term), backward pass, RMSProp update.
Nothing is learned from any other image.

The returned image is the network output at the lowest loss seen, which
sidesteps late-iteration overfitting of the reliable region without
inventing a stopping rule; an optional plateau detector can end the run
early. Fixed seeds make runs bit-deterministic.

``dipst_train`` swaps the TV term for a style-consistency term: Gram
matrices of fixed random features of the output are matched against a
well-preserved reference image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from inpaintkit.image import Image
from inpaintkit.masking import Mask
from inpaintkit import metrics
from inpaintkit.neural.losses import (
    LossError,
    StyleFeatures,
    dip_loss,
    masked_mse,
    style_grams,
    style_loss,
)
from inpaintkit.neural.net import NetConfig, NetParams, net_backward, net_forward
from inpaintkit.neural.optim import rmsprop_init, rmsprop_step
from inpaintkit.rng import SplitMix64

Z_SCALE = 0.1  # noise input is uniform [0, 1] scaled down for conditioning


class TrainError(Exception):
    pass


@dataclass
class EarlyStop:
    window: int
    min_improvement: float


@dataclass
class DipParams:
    learning_rate: float = 0.01
    iterations: int = 3000
    lambd: float = 10.0
    use_tv: bool = False
    tv_epsilon: float = 1e-3
    rmsprop_alpha: float = 0.99
    rmsprop_eps: float = 1e-8
    rng_seed: int = 1234
    log_interval: int = 50
    early_stop: Optional[EarlyStop] = None

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.iterations < 1:
            raise TrainError("learning_rate must be positive and iterations >= 1")
        if self.lambd <= 0:
            raise TrainError("lambd must be positive")
        if self.log_interval < 1:
            raise TrainError("log_interval must be >= 1")


@dataclass
class StyleParams:
    alpha: float = 1.0
    beta: float = 1e-2
    layer_indices: tuple[int, ...] = (0, 1, 2)
    feature_seed: int = 77

    def __post_init__(self) -> None:
        self.layer_indices = tuple(self.layer_indices)
        if not self.layer_indices:
            raise TrainError("at least one feature layer index is required")
        if self.alpha < 0 or self.beta < 0:
            raise TrainError("alpha and beta must be non-negative")


@dataclass
class TrainPoint:
    iteration: int
    loss: float
    ssim: Optional[float] = None


@dataclass
class TrainHistory:
    points: list[TrainPoint] = field(default_factory=list)

    def append(self, point: TrainPoint) -> None:
        if self.points and point.iteration <= self.points[-1].iteration:
            raise TrainError("history iterations must strictly increase")
        self.points.append(point)


@dataclass
class TrainResult:
    image: Image
    history: TrainHistory
    final_loss: float
    best_loss: float
    stopped_at: int


ProgressCallback = Callable[[TrainPoint], Optional[bool]]


def _prepare(observed: Image, mask: Mask, config: NetConfig):
    if (observed.height, observed.width) != (mask.height, mask.width):
        raise TrainError(
            f"image {observed.height}x{observed.width} vs mask {mask.height}x{mask.width}"
        )
    div = 1 << config.levels
    if observed.height % div or observed.width % div:
        raise TrainError(
            f"image dims {observed.height}x{observed.width} must be divisible by {div}; "
            "resize first"
        )
    if observed.channels == 3:
        return observed.data, False
    return np.repeat(observed.data, 3, axis=0), True


def _as_result_image(output: np.ndarray, gray: bool) -> Image:
    data = output.mean(axis=0, keepdims=True) if gray else output
    return Image(np.clip(data, 0.0, 1.0))


def _ssim_against(reference: Optional[Image], candidate: Image) -> Optional[float]:
    if reference is None:
        return None
    return metrics.ssim(reference, candidate)


def _run_loop(
    observed: Image,
    mask: Mask,
    config: NetConfig,
    params: DipParams,
    loss_fn,
    reference: Optional[Image],
    progress: Optional[ProgressCallback],
) -> TrainResult:
    target, gray = _prepare(observed, mask, config)
    if reference is not None and reference.data.shape[0] != observed.channels:
        raise TrainError("reference channel count must match the observed image")

    rng = SplitMix64(params.rng_seed)
    z = rng.uniform_array((config.z_channels, observed.height, observed.width)) * Z_SCALE
    net = NetParams.initialize(config, rng)
    opt_state = rmsprop_init(net.tensors())

    history = TrainHistory()
    best_loss = math.inf
    best_output = None
    stop_anchor = math.inf
    last_improvement = 0
    stopped_at = params.iterations

    for it in range(1, params.iterations + 1):
        output, cache = net_forward(config, net, z)
        loss, g_out = loss_fn(output, target, mask)
        if not math.isfinite(loss):
            raise TrainError(f"non-finite loss at iteration {it}; lower the learning rate")
        if loss < best_loss:
            best_loss = loss
            best_output = output.copy()
        if params.early_stop is not None and loss < stop_anchor - params.early_stop.min_improvement:
            stop_anchor = loss
            last_improvement = it
        net.zero_grads()
        net_backward(config, net, cache, g_out)
        rmsprop_step(
            net.tensors(), opt_state, params.learning_rate, params.rmsprop_alpha, params.rmsprop_eps
        )

        if it % params.log_interval == 0 or it == params.iterations:
            point = TrainPoint(
                iteration=it,
                loss=loss,
                ssim=_ssim_against(reference, _as_result_image(output, gray)),
            )
            history.append(point)
            if progress is not None and progress(point) is False:
                stopped_at = it
                break
        if params.early_stop is not None and it - last_improvement >= params.early_stop.window:
            stopped_at = it
            break

    final_loss = history.points[-1].loss if history.points else best_loss
    return TrainResult(
        image=_as_result_image(best_output, gray),
        history=history,
        final_loss=final_loss,
        best_loss=best_loss,
        stopped_at=stopped_at,
    )


def dip_train(
    observed: Image,
    mask: Mask,
    config: NetConfig | None = None,
    params: DipParams | None = None,
    reference: Optional[Image] = None,
    progress: Optional[ProgressCallback] = None,
) -> TrainResult:
    """Fit the generator to one degraded image under the masked loss.

    ``reference`` (a clean ground truth, when one exists) only adds SSIM
    values to the history; it never influences training.
    """
    config = config or NetConfig()
    params = params or DipParams()

    def loss_fn(output, target, m):
        return dip_loss(output, target, m, params.lambd, params.use_tv, params.tv_epsilon)

    return _run_loop(observed, mask, config, params, loss_fn, reference, progress)


def dipst_train(
    observed: Image,
    mask: Mask,
    style: Image,
    config: NetConfig | None = None,
    params: DipParams | None = None,
    st: StyleParams | None = None,
    reference: Optional[Image] = None,
    progress: Optional[ProgressCallback] = None,
) -> TrainResult:
    """Masked fit plus Gram-matrix style consistency with a reference work.

    With beta = 0 the style machinery is skipped entirely and the run is
    bit-identical to ``dip_train`` with lambda = alpha and no TV term.
    """
    config = config or NetConfig()
    params = params or DipParams()
    st = st or StyleParams()
    if (style.height, style.width) != (observed.height, observed.width):
        raise TrainError(
            f"style image {style.height}x{style.width} must match observed "
            f"{observed.height}x{observed.width}; resize first"
        )
    if max(st.layer_indices) >= len(StyleFeatures.CHANNELS):
        raise TrainError(f"layer indices must lie in [0, {len(StyleFeatures.CHANNELS)})")

    if st.beta == 0.0:
        features = None
        reference_grams = None
    else:
        features = StyleFeatures(st.feature_seed)
        style_data = style.data if style.channels == 3 else np.repeat(style.data, 3, axis=0)
        reference_grams = style_grams(features, style_data, st.layer_indices)

    def loss_fn(output, target, m):
        loss, grad = masked_mse(output, target, m)
        loss *= st.alpha
        grad = st.alpha * grad
        if features is not None:
            s_loss, s_grad = style_loss(features, output, reference_grams, st.beta)
            loss += s_loss
            grad += s_grad
        return loss, grad

    return _run_loop(observed, mask, config, params, loss_fn, reference, progress)
