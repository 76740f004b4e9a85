"""Occlusion-mask construction and mask file I/O.

A mask stores one boolean per pixel, True for reliable pixels and False
for occluded ones. The PNG convention is byte 0 = occluded, byte 255 =
reliable; on load, bytes below 128 count as occluded.

Color distances are composites over channels: the arithmetic mean of
per-channel absolute differences, so a tolerance lives on the same
[0, 1] scale as intensities regardless of channel count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from inpaintkit.image import Image, ImageError, decode_png, encode_png, load_png, save_png

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


class MaskError(Exception):
    """Raised on invalid mask arguments or mask files."""


class Mask:
    """Binary indicator of reliable pixels: True on kept content, False on damage."""

    __slots__ = ("bits",)

    def __init__(self, bits) -> None:
        arr = np.asarray(bits, dtype=bool)
        if arr.ndim != 2:
            raise MaskError(f"expected (H, W) boolean array, got shape {arr.shape}")
        self.bits = arr

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def occluded(self) -> np.ndarray:
        return ~self.bits

    @property
    def occluded_count(self) -> int:
        return int(np.count_nonzero(~self.bits))

    def copy(self) -> "Mask":
        return Mask(self.bits.copy())

    def __eq__(self, other) -> bool:
        return isinstance(other, Mask) and np.array_equal(self.bits, other.bits)

    def __repr__(self) -> str:
        return f"Mask({self.height}x{self.width}, occluded={self.occluded_count})"


@dataclass
class SeedPoint:
    row: int
    col: int


@dataclass
class ToleranceSpec:
    reference_color: tuple[float, ...]
    tolerance: float

    def __post_init__(self) -> None:
        if self.tolerance < 0:
            raise MaskError("tolerance must be non-negative")


def _composite_distance(data: np.ndarray, color: np.ndarray) -> np.ndarray:
    return np.mean(np.abs(data - color[:, None, None]), axis=0)


def mask_by_color(image: Image, spec: ToleranceSpec) -> Mask:
    """Occlude every pixel whose composite distance to the reference color
    is within the tolerance; all other pixels stay reliable."""
    color = np.asarray(spec.reference_color, dtype=np.float64)
    if color.shape != (image.channels,):
        raise MaskError(
            f"reference color has {color.size} channels, image has {image.channels}"
        )
    dist = _composite_distance(image.data, color)
    return Mask(dist > spec.tolerance)


def region_grow(image: Image, seeds: list[SeedPoint], tolerance: float) -> Mask:
    """Occlude the union, over seeds, of the 4-connected component of pixels
    within ``tolerance`` of that seed's own color.

    The comparison color is fixed per seed (no running region mean), so the
    result is independent of traversal order.
    """
    if not seeds:
        raise MaskError("region_grow requires at least one seed")
    if tolerance < 0:
        raise MaskError("tolerance must be non-negative")
    occluded = np.zeros((image.height, image.width), dtype=bool)
    for seed in seeds:
        if not (0 <= seed.row < image.height and 0 <= seed.col < image.width):
            raise MaskError(f"seed ({seed.row}, {seed.col}) out of bounds")
        seed_color = image.data[:, seed.row, seed.col]
        eligible = _composite_distance(image.data, seed_color) <= tolerance
        labels, _ = ndimage.label(eligible, structure=_FOUR_CONNECTED)
        occluded |= labels == labels[seed.row, seed.col]
    return Mask(~occluded)


def dilate(mask: Mask, radius: int) -> Mask:
    """Grow the occluded region by a Chebyshev ball of the given radius."""
    if radius < 0:
        raise MaskError("radius must be non-negative")
    if radius == 0:
        return mask.copy()
    footprint = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    grown = ndimage.binary_dilation(~mask.bits, structure=footprint)
    return Mask(~grown)


def combine(a: Mask, b: Mask | None, op: str) -> Mask:
    """Boolean algebra on occluded sets: union, intersect, or invert-a."""
    if op == "invert-a":
        return Mask(~a.bits)
    if b is None:
        raise MaskError(f"operation {op!r} requires a second mask")
    if a.bits.shape != b.bits.shape:
        raise MaskError(f"dimension mismatch: {a.bits.shape} vs {b.bits.shape}")
    if op == "union":
        return Mask(~(~a.bits | ~b.bits))
    if op == "intersect":
        return Mask(~(~a.bits & ~b.bits))
    raise MaskError(f"unknown operation {op!r}")


def _mask_from_image(img: Image, origin: str) -> Mask:
    if img.channels != 1:
        raise MaskError(f"mask PNG must be grayscale: {origin}")
    return Mask(img.data[0] >= 128.0 / 255.0)


def _mask_to_image(mask: Mask) -> Image:
    return Image(mask.bits[np.newaxis, :, :].astype(np.float64))


def load_mask(path) -> Mask:
    """Load a gray PNG mask; bytes below 128 mark occluded pixels."""
    try:
        img = load_png(path)
    except ImageError as exc:
        raise MaskError(str(exc)) from None
    return _mask_from_image(img, str(path))


def save_mask(mask: Mask, path) -> None:
    """Write a gray PNG with byte 0 on occluded and 255 on reliable pixels."""
    save_png(_mask_to_image(mask), path)


def decode_mask(blob: bytes) -> Mask:
    """Decode mask PNG bytes with the same threshold rule as :func:`load_mask`."""
    try:
        img = decode_png(blob)
    except ImageError as exc:
        raise MaskError(str(exc)) from None
    return _mask_from_image(img, "<bytes>")


def encode_mask(mask: Mask) -> bytes:
    return encode_png(_mask_to_image(mask))
