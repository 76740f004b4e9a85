"""Variational and PDE inpainting solvers.

Two classical baselines over the shared masked data-fidelity model
``lambda * ||m (x - observed)||^2 + R(x)``:

- ``tv_inpaint``: explicit gradient descent with R = total variation,
  smoothed as sqrt(dy^2 + dx^2 + eps^2) so the descent direction is
  everywhere defined.
- ``ns_inpaint``: an evolution scheme in the fluid-dynamics family:
  smoothness (the image Laplacian) is transported along isophotes inside
  the hole, interleaved with a few steps of edge-preserving diffusion.

The total variation of an image sums sqrt(dy^2 + dx^2) over channels and
over all pixels that have both a lower and a right neighbor (forward
differences; the last row and column contribute no terms).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from inpaintkit.image import Image
from inpaintkit.masking import Mask


class SolverError(Exception):
    """Raised on unusable solver inputs, e.g. an all-occluded mask."""


@dataclass
class TvSolveParams:
    lambd: float = 10.0
    step: float = 1e-3
    iterations: int = 2000
    epsilon: float = 1e-3

    def __post_init__(self) -> None:
        if min(self.lambd, self.step, self.epsilon) <= 0 or self.iterations < 1:
            raise SolverError("TV parameters must be positive with iterations >= 1")


@dataclass
class NsSolveParams:
    transport_steps: int = 300
    diffusion_interval: int = 15
    diffusion_steps: int = 2
    dt: float = 0.1

    def __post_init__(self) -> None:
        counts = (self.transport_steps, self.diffusion_interval, self.diffusion_steps)
        if min(counts) < 1 or self.dt <= 0:
            raise SolverError("NS counts must be >= 1 and dt > 0")


def _forward_diffs(chan: np.ndarray):
    """dy, dx on the (H-1) x (W-1) grid of pixels owning both differences."""
    dy = chan[1:, :-1] - chan[:-1, :-1]
    dx = chan[:-1, 1:] - chan[:-1, :-1]
    return dy, dx


def tv_value(image: Image) -> float:
    """Total variation of the image (unsmoothed)."""
    return tv_value_array(image.data, 0.0)


def tv_value_array(data: np.ndarray, epsilon: float) -> float:
    """TV of a raw (C, H, W) array, optionally epsilon-smoothed.

    Accepts arrays outside [0, 1]; used directly by training losses.
    """
    if data.shape[1] < 2 or data.shape[2] < 2:
        raise SolverError("TV requires height and width >= 2")
    total = 0.0
    for chan in data:
        dy, dx = _forward_diffs(chan)
        total += float(np.sum(np.sqrt(dy * dy + dx * dx + epsilon * epsilon)))
    return total


def tv_gradient(image: Image, epsilon: float) -> np.ndarray:
    """Gradient of the epsilon-smoothed TV w.r.t. every pixel, (C, H, W)."""
    return tv_gradient_array(image.data, epsilon)


def tv_gradient_array(data: np.ndarray, epsilon: float) -> np.ndarray:
    if epsilon <= 0:
        raise SolverError("epsilon must be positive")
    grad = np.zeros_like(data)
    for c, chan in enumerate(data):
        dy, dx = _forward_diffs(chan)
        t = np.sqrt(dy * dy + dx * dx + epsilon * epsilon)
        grad[c, :-1, :-1] += (-dy - dx) / t
        grad[c, 1:, :-1] += dy / t
        grad[c, :-1, 1:] += dx / t
    return grad


def inward_fill(data: np.ndarray, bits: np.ndarray, sweeps: int = 50) -> np.ndarray:
    """Zero-order inward extension of reliable values.

    Repeated Jacobi sweeps set each occluded pixel to the average of its
    already-defined 4-neighbors, so values creep inward one ring per sweep
    and relax toward the discrete harmonic fill. Deterministic and
    parameter-free; shared bootstrap for the PDE and patch solvers.
    """
    x = data.copy()
    filled = bits.copy()
    occluded = ~bits
    for _ in range(sweeps):
        weights = filled.astype(np.float64)
        vals = x * weights[None, :, :]
        nsum = np.zeros_like(x)
        wsum = np.zeros_like(weights)
        nsum[:, 1:, :] += vals[:, :-1, :]
        wsum[1:, :] += weights[:-1, :]
        nsum[:, :-1, :] += vals[:, 1:, :]
        wsum[:-1, :] += weights[1:, :]
        nsum[:, :, 1:] += vals[:, :, :-1]
        wsum[:, 1:] += weights[:, :-1]
        nsum[:, :, :-1] += vals[:, :, 1:]
        wsum[:, :-1] += weights[:, 1:]
        upd = occluded & (wsum > 0)
        x[:, upd] = nsum[:, upd] / wsum[upd]
        filled = filled | upd
    return x


def tv_inpaint(
    observed: Image,
    mask: Mask,
    params: TvSolveParams | None = None,
    energy_log: list | None = None,
) -> Image:
    """Gradient descent on lambda*||m (x - observed)||^2 + TV_eps(x).

    Starts from the observed image with occluded pixels set to the
    per-channel mean of reliable pixels. When ``energy_log`` is given, the
    energy of each iterate (including the initial and final one) is
    appended to it.
    """
    params = params or TvSolveParams()
    _check_dims(observed, mask)
    if not mask.bits.any():
        raise SolverError("all-occluded mask: data term has no anchor")
    target = observed.data
    m = mask.bits.astype(np.float64)[None, :, :]
    x = target.copy()
    for c in range(observed.channels):
        x[c][~mask.bits] = target[c][mask.bits].mean()

    def energy(arr: np.ndarray) -> float:
        r = m * (arr - target)
        return params.lambd * float(np.sum(r * r)) + tv_value_array(arr, params.epsilon)

    if energy_log is not None:
        energy_log.append(energy(x))
    for _ in range(params.iterations):
        grad = 2.0 * params.lambd * m * (x - target) + tv_gradient_array(x, params.epsilon)
        x -= params.step * grad
        if energy_log is not None:
            energy_log.append(energy(x))
    return Image(np.clip(x, 0.0, 1.0))


def _shift(chan: np.ndarray, drow: int, dcol: int) -> np.ndarray:
    """Shift with edge replication: result[i, j] = chan[i - drow, j - dcol]."""
    out = chan
    if drow > 0:
        out = np.concatenate([np.repeat(out[:1], drow, axis=0), out[:-drow]], axis=0)
    elif drow < 0:
        out = np.concatenate([out[-drow:], np.repeat(out[-1:], -drow, axis=0)], axis=0)
    if dcol > 0:
        out = np.concatenate([np.repeat(out[:, :1], dcol, axis=1), out[:, :-dcol]], axis=1)
    elif dcol < 0:
        out = np.concatenate([out[:, -dcol:], np.repeat(out[:, -1:], -dcol, axis=1)], axis=1)
    return out


def _laplacian(chan: np.ndarray) -> np.ndarray:
    return (
        _shift(chan, 1, 0) + _shift(chan, -1, 0) + _shift(chan, 0, 1) + _shift(chan, 0, -1)
        - 4.0 * chan
    )


def _transport_update(chan: np.ndarray) -> np.ndarray:
    """Directional derivative of the Laplacian along isophotes, times an
    upwind-limited gradient magnitude."""
    lap = _laplacian(chan)
    ly = 0.5 * (_shift(lap, -1, 0) - _shift(lap, 1, 0))
    lx = 0.5 * (_shift(lap, 0, -1) - _shift(lap, 0, 1))
    iy = 0.5 * (_shift(chan, -1, 0) - _shift(chan, 1, 0))
    ix = 0.5 * (_shift(chan, 0, -1) - _shift(chan, 0, 1))
    norm = np.sqrt(ix * ix + iy * iy) + 1e-8
    beta = (lx * (-iy) + ly * ix) / norm

    dym = chan - _shift(chan, 1, 0)
    dyp = _shift(chan, -1, 0) - chan
    dxm = chan - _shift(chan, 0, 1)
    dxp = _shift(chan, 0, -1) - chan
    pos = np.sqrt(
        np.minimum(dxm, 0.0) ** 2 + np.maximum(dxp, 0.0) ** 2
        + np.minimum(dym, 0.0) ** 2 + np.maximum(dyp, 0.0) ** 2
    )
    neg = np.sqrt(
        np.maximum(dxm, 0.0) ** 2 + np.minimum(dxp, 0.0) ** 2
        + np.maximum(dym, 0.0) ** 2 + np.minimum(dyp, 0.0) ** 2
    )
    return beta * np.where(beta > 0, pos, neg)


def _diffusion_update(chan: np.ndarray) -> np.ndarray:
    """Edge-stopping diffusion flux: conductance 1 / (1 + (d/0.1)^2) per arm."""
    total = np.zeros_like(chan)
    for drow, dcol in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        d = _shift(chan, drow, dcol) - chan
        total += d / (1.0 + (d / 0.1) ** 2)
    return total


def ns_inpaint(observed: Image, mask: Mask, params: NsSolveParams | None = None) -> Image:
    """Transport-plus-diffusion evolution restricted to occluded pixels.

    Reliable pixels are re-imposed from the observed image after every
    step, so they pass through bit-identical.
    """
    params = params or NsSolveParams()
    _check_dims(observed, mask)
    if not mask.bits.any():
        raise SolverError("all-occluded mask: nothing to propagate from")
    occ = ~mask.bits
    x = inward_fill(observed.data, mask.bits)
    for step in range(1, params.transport_steps + 1):
        for c in range(x.shape[0]):
            upd = _transport_update(x[c])
            x[c][occ] += params.dt * upd[occ]
            x[c][mask.bits] = observed.data[c][mask.bits]
        if step % params.diffusion_interval == 0:
            for _ in range(params.diffusion_steps):
                for c in range(x.shape[0]):
                    upd = _diffusion_update(x[c])
                    x[c][occ] += params.dt * upd[occ]
                    x[c][mask.bits] = observed.data[c][mask.bits]
    return Image(np.clip(x, 0.0, 1.0))


def _check_dims(observed: Image, mask: Mask) -> None:
    if (observed.height, observed.width) != (mask.height, mask.width):
        raise SolverError(
            f"image {observed.height}x{observed.width} vs mask {mask.height}x{mask.width}"
        )
