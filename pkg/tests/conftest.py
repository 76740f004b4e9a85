import numpy as np
import pytest

from inpaintkit.image import Image
from inpaintkit.masking import Mask


def two_tone_image(h=32, w=32, split=None):
    """Left/right constant halves at 0.25 / 0.75."""
    split = w // 2 if split is None else split
    data = np.full((3, h, w), 0.25)
    data[:, :, split:] = 0.75
    return Image(data)


def stripe_image(h=48, w=48):
    """Vertical 2-pixel-period stripes at 0.2 / 0.8."""
    col = np.where(np.arange(w) % 2 == 0, 0.2, 0.8)
    return Image(np.tile(col, (h, 1))[None, :, :].repeat(3, axis=0))


def hole_mask(h, w, r0, r1, c0, c1):
    bits = np.ones((h, w), dtype=bool)
    bits[r0:r1, c0:c1] = False
    return Mask(bits)


def block_occlusion(h, w, fraction, seed):
    """Random 6x6 blocks until the occluded fraction is reached."""
    rng = np.random.default_rng(seed)
    bits = np.ones((h, w), dtype=bool)
    while (~bits).sum() < fraction * h * w:
        r, c = rng.integers(0, max(1, h - 4)), rng.integers(0, max(1, w - 4))
        bits[r : r + 6, c : c + 6] = False
    return Mask(bits)


def piecewise_fixture():
    """32x32 piecewise-constant ground truth with 25% block occlusion."""
    data = np.full((3, 32, 32), 0.2)
    data[:, 8:24, :] = 0.8
    data[0, :, 20:] = 0.5
    truth = Image(data)
    mask = block_occlusion(32, 32, 0.25, seed=11)
    occluded = data.copy()
    occluded[:, ~mask.bits] = 0.0
    return truth, Image(occluded), mask


def fd_gradient(fn, array, h=1e-6, indices=None):
    """Central finite differences of scalar fn w.r.t. entries of array."""
    flat = array.ravel()
    if indices is None:
        indices = range(flat.size)
    out = {}
    for i in indices:
        old = flat[i]
        flat[i] = old + h
        fp = fn()
        flat[i] = old - h
        fm = fn()
        flat[i] = old
        out[i] = (fp - fm) / (2.0 * h)
    return out


def max_rel_err(analytic, fd_map, floor=1e-6):
    """Worst per-entry relative error with a scale floor, so tiny entries
    do not dominate the metric with fd noise."""
    flat = analytic.ravel()
    scale = max(floor, float(np.abs(flat).max()))
    worst = 0.0
    for i, fd in fd_map.items():
        denom = max(abs(fd), abs(flat[i]), 1e-3 * scale)
        worst = max(worst, abs(fd - flat[i]) / denom)
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
