"""Image representation, PNG I/O, resizing and channel composition.

Images are planar (channel, row, column) float64 arrays with intensities
in [0, 1]. PNG is the only raster interchange format: 8- and 16-bit
gray/RGB files are read (alpha discarded), output is always 8-bit.
Stored sRGB values are treated as linear intensities; no gamma handling.
"""

from __future__ import annotations

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError


class ImageError(Exception):
    """Raised on decode failures and invalid image arguments."""


class Image:
    """Planar multi-channel raster of unit-interval intensities.

    ``data`` has shape (channels, height, width) with 1 or 3 channels.
    Values arriving from numerical code are clamped into [0, 1] here so
    the range invariant holds everywhere downstream.
    """

    __slots__ = ("data",)

    def __init__(self, data) -> None:
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[0] not in (1, 3):
            raise ImageError(f"expected (1|3, H, W) array, got shape {arr.shape}")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ImageError(f"degenerate image dimensions {arr.shape}")
        if not np.isfinite(arr).all():
            raise ImageError("image values must be finite")
        self.data = np.clip(arr, 0.0, 1.0)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def copy(self) -> "Image":
        return Image(self.data.copy())

    def __eq__(self, other) -> bool:
        return isinstance(other, Image) and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return f"Image(channels={self.channels}, height={self.height}, width={self.width})"


def load_png(path) -> Image:
    """Load an 8- or 16-bit gray/RGB PNG, scaling intensities into [0, 1].

    Alpha is discarded. Palette images are expanded. 16-bit gray is
    scaled by 1/65535, 8-bit data by 1/255.
    """
    try:
        with PILImage.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGB")
                mode = "RGB"
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.float64) / 65535.0
                data = arr[np.newaxis, :, :]
            elif mode == "L":
                arr = np.asarray(im, dtype=np.float64) / 255.0
                data = arr[np.newaxis, :, :]
            elif mode == "LA":
                arr = np.asarray(im, dtype=np.float64)[:, :, 0] / 255.0
                data = arr[np.newaxis, :, :]
            elif mode in ("RGB", "RGBA"):
                arr = np.asarray(im, dtype=np.float64)[:, :, :3] / 255.0
                data = np.transpose(arr, (2, 0, 1))
            else:
                raise ImageError(f"unsupported PNG color type {mode!r} in {path}")
    except FileNotFoundError:
        raise ImageError(f"no such file: {path}") from None
    except UnidentifiedImageError as exc:
        raise ImageError(f"cannot decode {path}: {exc}") from None
    return Image(data)


def save_png(image: Image, path) -> None:
    """Write an 8-bit PNG; value v is stored as round(v * 255)."""
    bytes_ = np.rint(image.data * 255.0).astype(np.uint8)
    if image.channels == 1:
        pil = PILImage.fromarray(bytes_[0], mode="L")
    else:
        pil = PILImage.fromarray(np.transpose(bytes_, (1, 2, 0)), mode="RGB")
    pil.save(path, format="PNG")


def encode_png(image: Image) -> bytes:
    """8-bit PNG encoding of ``image`` as a byte string."""
    import io

    buf = io.BytesIO()
    save_png(image, buf)
    return buf.getvalue()


def decode_png(blob: bytes) -> Image:
    """Decode PNG bytes with the same rules as :func:`load_png`."""
    import io

    return load_png(io.BytesIO(blob))


def _axis_weights(n_in: int, n_out: int):
    """Half-pixel-center bilinear sampling: lower index, upper index, frac."""
    scale = n_in / n_out
    coords = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    coords = np.clip(coords, 0.0, n_in - 1.0)
    lo = np.floor(coords).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = coords - lo
    return lo, hi, frac


def resize_bilinear(image: Image, out_h: int, out_w: int) -> Image:
    """Bilinear resize with edge clamping; identity when sizes match."""
    if out_h < 1 or out_w < 1:
        raise ImageError(f"target dimensions must be >= 1, got {out_h}x{out_w}")
    if out_h == image.height and out_w == image.width:
        return image.copy()
    r_lo, r_hi, r_f = _axis_weights(image.height, out_h)
    c_lo, c_hi, c_f = _axis_weights(image.width, out_w)
    rows = image.data[:, r_lo, :] * (1.0 - r_f)[None, :, None] + image.data[:, r_hi, :] * r_f[None, :, None]
    out = rows[:, :, c_lo] * (1.0 - c_f)[None, None, :] + rows[:, :, c_hi] * c_f[None, None, :]
    return Image(out)


def to_gray(image: Image) -> Image:
    """Luma conversion 0.299 R + 0.587 G + 0.114 B; gray passes through."""
    if image.channels == 1:
        return image.copy()
    r, g, b = image.data
    return Image((0.299 * r + 0.587 * g + 0.114 * b)[np.newaxis, :, :])


def compose_irgb(ir: Image, rgb: Image) -> Image:
    """Substitute a single-channel capture for the red channel of ``rgb``."""
    if ir.channels != 1 or rgb.channels != 3:
        raise ImageError("compose_irgb expects a 1-channel and a 3-channel image")
    if (ir.height, ir.width) != (rgb.height, rgb.width):
        raise ImageError(
            f"dimension mismatch: {ir.height}x{ir.width} vs {rgb.height}x{rgb.width}"
        )
    out = rgb.data.copy()
    out[0] = ir.data[0]
    return Image(out)
