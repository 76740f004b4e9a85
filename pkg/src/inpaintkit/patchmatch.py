"""Non-local patch-based inpainting.

A nearest-neighbor field maps every occluded pixel (as a patch center) to
a source patch drawn entirely from reliable content. The field is
computed by randomized search: scan-order propagation of neighboring
offsets alternating with an exponentially decaying random probe, never
accepting a worse candidate. Reconstruction runs coarse-to-fine: at each
pyramid level the field and the image estimate are refined alternately,
each occluded pixel taking the similarity-weighted average of the source
pixels proposed by every patch that covers it.

Patch distances are sums of squared differences over all channels; for
queries near the border the sum runs over the in-bounds part of the query
patch (source patches are always fully interior). All randomness comes
from the package's portable seeded generator, so runs are
bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from inpaintkit.image import Image, resize_bilinear
from inpaintkit.masking import Mask
from inpaintkit.rng import SplitMix64
from inpaintkit.variational import inward_fill


class PatchMatchError(Exception):
    pass


@dataclass
class PatchParams:
    patch_size: int = 5
    pm_iterations: int = 5
    em_iterations: int = 4
    pyramid_levels: Optional[int] = None  # None: coarsest level >= 4x patch size per side
    rng_seed: int = 1234

    def __post_init__(self) -> None:
        if self.patch_size not in (3, 5, 7):
            raise PatchMatchError("patch size must be odd in {3,5,7}")
        if self.pm_iterations < 1 or self.em_iterations < 1:
            raise PatchMatchError("iteration counts must be >= 1")
        if self.pyramid_levels is not None and self.pyramid_levels < 1:
            raise PatchMatchError("pyramid_levels must be >= 1")


@dataclass
class NNField:
    """Per occluded pixel: its coordinates, the matched source center, and
    the current squared patch distance."""

    queries: np.ndarray  # (N, 2) int
    targets: np.ndarray  # (N, 2) int
    distances: np.ndarray  # (N,) float

    @property
    def mean_distance(self) -> float:
        return float(self.distances.mean())


def patch_distance(image: Image, center_a, center_b, patch_size: int) -> float:
    """Sum of squared differences between two fully interior patches."""
    half = patch_size // 2
    h, w = image.height, image.width
    for (r, c) in (center_a, center_b):
        if r - half < 0 or c - half < 0 or r + half >= h or c + half >= w:
            raise PatchMatchError(f"patch at ({r}, {c}) exceeds image bounds")
    ar, ac = center_a
    br, bc = center_b
    pa = image.data[:, ar - half : ar + half + 1, ac - half : ac + half + 1]
    pb = image.data[:, br - half : br + half + 1, bc - half : bc + half + 1]
    return float(np.sum((pa - pb) ** 2))


def _cropped_ssd(data: np.ndarray, qr: int, qc: int, tr: int, tc: int, half: int) -> float:
    """SSD over the in-bounds offsets of the query patch; the target patch
    is fully interior by construction."""
    h, w = data.shape[1], data.shape[2]
    r_lo = -min(half, qr)
    r_hi = min(half, h - 1 - qr)
    c_lo = -min(half, qc)
    c_hi = min(half, w - 1 - qc)
    q = data[:, qr + r_lo : qr + r_hi + 1, qc + c_lo : qc + c_hi + 1]
    t = data[:, tr + r_lo : tr + r_hi + 1, tc + c_lo : tc + c_hi + 1]
    d = q - t
    return float(np.sum(d * d))


def valid_source_map(bits: np.ndarray, patch_size: int) -> np.ndarray:
    """Centers whose patch is fully interior and contains no occluded pixel."""
    half = patch_size // 2
    h, w = bits.shape
    valid = np.zeros((h, w), dtype=bool)
    if h < patch_size or w < patch_size:
        return valid
    occ = (~bits).astype(np.int64)
    integral = np.zeros((h + 1, w + 1), dtype=np.int64)
    integral[1:, 1:] = occ.cumsum(axis=0).cumsum(axis=1)
    r0 = np.arange(half, h - half)
    c0 = np.arange(half, w - half)
    top, bot = r0 - half, r0 + half + 1
    left, right = c0 - half, c0 + half + 1
    counts = (
        integral[np.ix_(bot, right)]
        - integral[np.ix_(top, right)]
        - integral[np.ix_(bot, left)]
        + integral[np.ix_(top, left)]
    )
    valid[np.ix_(r0, c0)] = counts == 0
    return valid


def nnf_search(
    image: Image,
    mask: Mask,
    params: PatchParams,
    init: Optional[NNField] = None,
    rng: Optional[SplitMix64] = None,
    pass_means: Optional[list] = None,
) -> NNField:
    """Randomized nearest-neighbor-field search for all occluded pixels.

    When ``init`` is given its targets are kept and re-scored against the
    current image before the passes run. ``pass_means`` collects the mean
    field distance after every pass.
    """
    data = image.data
    bits = mask.bits
    if data.shape[1:] != bits.shape:
        raise PatchMatchError("image and mask dimensions disagree")
    h, w = bits.shape
    half = params.patch_size // 2
    rng = rng or SplitMix64(params.rng_seed)

    valid = valid_source_map(bits, params.patch_size)
    sources = np.argwhere(valid)
    if sources.shape[0] == 0:
        raise PatchMatchError("no fully reliable source patch exists")

    queries = np.argwhere(~bits)
    n = queries.shape[0]
    if n == 0:
        return NNField(queries, queries.copy(), np.zeros(0))

    index_of = np.full((h, w), -1, dtype=np.int64)
    index_of[queries[:, 0], queries[:, 1]] = np.arange(n)

    if init is None:
        picks = np.array([rng.randint(sources.shape[0]) for _ in range(n)])
        targets = sources[picks].copy()
    else:
        targets = init.targets.copy()
    dists = np.empty(n)
    for i in range(n):
        dists[i] = _cropped_ssd(data, queries[i, 0], queries[i, 1], targets[i, 0], targets[i, 1], half)

    def try_candidate(i: int, tr: int, tc: int) -> None:
        if tr < half or tc < half or tr + half >= h or tc + half >= w or not valid[tr, tc]:
            return
        d = _cropped_ssd(data, queries[i, 0], queries[i, 1], tr, tc, half)
        if d < dists[i]:
            dists[i] = d
            targets[i, 0] = tr
            targets[i, 1] = tc

    max_radius = max(h, w)
    for sweep in range(params.pm_iterations):
        forward = sweep % 2 == 0
        order = range(n) if forward else range(n - 1, -1, -1)
        step = 1 if forward else -1
        for i in order:
            qr, qc = queries[i, 0], queries[i, 1]
            # propagate offsets from the already-visited scan neighbors
            for dr, dc in ((0, -step), (-step, 0)):
                j = index_of[qr + dr, qc + dc] if 0 <= qr + dr < h and 0 <= qc + dc < w else -1
                if j >= 0:
                    try_candidate(i, targets[j, 0] - dr, targets[j, 1] - dc)
            # exponentially decaying random probe around the current best,
            # sampling inside the in-bounds center box at each radius
            radius = max_radius
            while radius >= 1:
                r_lo = max(half, targets[i, 0] - radius)
                r_hi = min(h - 1 - half, targets[i, 0] + radius)
                c_lo = max(half, targets[i, 1] - radius)
                c_hi = min(w - 1 - half, targets[i, 1] + radius)
                tr = r_lo + rng.randint(r_hi - r_lo + 1)
                tc = c_lo + rng.randint(c_hi - c_lo + 1)
                try_candidate(i, tr, tc)
                radius //= 2
        if pass_means is not None:
            pass_means.append(float(dists.mean()))
    return NNField(queries, targets, dists)


def _vote(data: np.ndarray, bits: np.ndarray, field: NNField, patch_size: int) -> np.ndarray:
    """Replace occluded pixels by the weighted average of the source pixels
    proposed by every field patch covering them."""
    half = patch_size // 2
    h, w = bits.shape
    occ = ~bits
    sigma = float(np.percentile(field.distances, 75.0))
    if sigma <= 0.0:
        weights = np.ones_like(field.distances)
    else:
        weights = np.exp(-field.distances / (2.0 * sigma * sigma))
    acc = np.zeros_like(data)
    wsum = np.zeros((h, w))
    for dr in range(-half, half + 1):
        for dc in range(-half, half + 1):
            qr = field.queries[:, 0] + dr
            qc = field.queries[:, 1] + dc
            ok = (qr >= 0) & (qr < h) & (qc >= 0) & (qc < w)
            ok &= occ[qr.clip(0, h - 1), qc.clip(0, w - 1)]
            if not ok.any():
                continue
            tr = field.targets[ok, 0] + dr
            tc = field.targets[ok, 1] + dc
            wv = weights[ok]
            np.add.at(wsum, (qr[ok], qc[ok]), wv)
            contribution = data[:, tr, tc] * wv[None, :]
            np.add.at(acc.transpose(1, 2, 0), (qr[ok], qc[ok]), contribution.T)
    out = data.copy()
    filled = wsum > 0
    out[:, filled] = acc[:, filled] / wsum[filled]
    out[:, bits] = data[:, bits]
    return out


def _field_energy(data: np.ndarray, field: NNField, half: int) -> float:
    total = 0.0
    for i in range(field.queries.shape[0]):
        total += _cropped_ssd(
            data, field.queries[i, 0], field.queries[i, 1], field.targets[i, 0], field.targets[i, 1], half
        )
    return total


def _auto_levels(h: int, w: int, patch_size: int) -> int:
    levels = 1
    while min(h, w) / (1 << levels) >= 4 * patch_size:
        levels += 1
    return levels


def _downsample_mask(bits: np.ndarray, lh: int, lw: int) -> np.ndarray:
    # conservative: a coarse pixel is reliable only if every contributor is
    rel = resize_bilinear(Image(bits[None, :, :].astype(np.float64)), lh, lw)
    return rel.data[0] >= 1.0 - 1e-9


def patch_inpaint(
    observed: Image,
    mask: Mask,
    params: PatchParams | None = None,
    energy_log: Optional[list] = None,
) -> Image:
    """Coarse-to-fine patch synthesis; deterministic for a fixed seed.

    ``energy_log`` collects the total field distance after each voting
    round at full resolution.
    """
    params = params or PatchParams()
    if (observed.height, observed.width) != (mask.height, mask.width):
        raise PatchMatchError("image and mask dimensions disagree")
    if not mask.bits.any():
        raise PatchMatchError("all-occluded mask: no source content")
    h, w = observed.height, observed.width
    half = params.patch_size // 2
    levels = params.pyramid_levels or _auto_levels(h, w, params.patch_size)
    rng = SplitMix64(params.rng_seed)

    sizes = [(max(1, h >> k), max(1, w >> k)) for k in range(levels)]
    x = None
    for level in reversed(range(levels)):
        lh, lw = sizes[level]
        level_obs = resize_bilinear(observed, lh, lw).data
        level_bits = _downsample_mask(mask.bits, lh, lw) if level > 0 else mask.bits
        if not level_bits.any():
            raise PatchMatchError(f"pyramid level {level} has no reliable pixels")
        if x is None:
            x = inward_fill(level_obs, level_bits)
        else:
            x = resize_bilinear(Image(np.clip(x, 0.0, 1.0)), lh, lw).data
            x[:, level_bits] = level_obs[:, level_bits]
        level_mask = Mask(level_bits)
        field = None
        for _ in range(params.em_iterations):
            field = nnf_search(
                Image(np.clip(x, 0.0, 1.0)), level_mask, params, init=field, rng=rng
            )
            x = _vote(x, level_bits, field, params.patch_size)
            if energy_log is not None and level == 0:
                energy_log.append(_field_energy(x, field, half))
    out = np.clip(x, 0.0, 1.0)
    out[:, mask.bits] = observed.data[:, mask.bits]
    return Image(out)
