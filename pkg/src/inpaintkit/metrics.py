"""Reconstruction-quality metrics and report assembly.

All metrics compare a test image against a reference on a configurable
dynamic range L (default 255, the 8-bit convention under which reported
MSE magnitudes are interpretable):

- mse:   mean over channels and pixels of (L * (ref - test))^2
- psnr:  10 log10(L^2 / mse), infinite on a perfect match
- nrmse: RMS difference over RMS reference value (scale-free)
- ssim:  Gaussian-windowed structural similarity, per channel then
         averaged; window overhang handled by mirror padding

Report rows carry (label, ssim, nrmse, mse, psnr) in that column order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from inpaintkit.image import Image


class MetricError(Exception):
    """Raised on incomparable inputs."""


@dataclass
class SsimConfig:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self) -> None:
        if self.window % 2 != 1:
            raise MetricError("SSIM window must be odd")


@dataclass
class MetricRow:
    label: str
    ssim: float
    nrmse: float
    mse: float
    psnr: float  # math.inf marks a perfect match

    def to_record(self) -> dict:
        psnr = "inf" if math.isinf(self.psnr) else self.psnr
        return {
            "label": self.label,
            "ssim": self.ssim,
            "nrmse": self.nrmse,
            "mse": self.mse,
            "psnr": psnr,
        }


def _check_pair(reference: Image, test: Image) -> None:
    if reference.data.shape != test.data.shape:
        raise MetricError(
            f"dimension mismatch: {reference.data.shape} vs {test.data.shape}"
        )


def mse(reference: Image, test: Image, dynamic_range: float = 255.0) -> float:
    _check_pair(reference, test)
    diff = dynamic_range * (reference.data - test.data)
    return float(np.mean(diff * diff))


def psnr(reference: Image, test: Image, dynamic_range: float = 255.0) -> float:
    return psnr_from_mse(mse(reference, test, dynamic_range), dynamic_range)


def psnr_from_mse(mse_value: float, dynamic_range: float = 255.0) -> float:
    if mse_value == 0.0:
        return math.inf
    return 10.0 * math.log10(dynamic_range * dynamic_range / mse_value)


def nrmse(reference: Image, test: Image) -> float:
    _check_pair(reference, test)
    ref_power = float(np.mean(reference.data * reference.data))
    if ref_power == 0.0:
        raise MetricError("NRMSE undefined for an identically zero reference")
    diff = reference.data - test.data
    return math.sqrt(float(np.mean(diff * diff)) / ref_power)


def _gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    half = window // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(offsets * offsets) / (2.0 * sigma * sigma))
    return k / k.sum()


def _windowed_mean(chan: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    half = kernel.size // 2
    padded = np.pad(chan, half, mode="reflect")
    out = ndimage.correlate1d(padded, kernel, axis=0, mode="constant")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="constant")
    return out[half:-half, half:-half]


def ssim_map(reference: Image, test: Image, config: SsimConfig | None = None) -> np.ndarray:
    """Per-pixel SSIM map, shape (C, H, W)."""
    config = config or SsimConfig()
    _check_pair(reference, test)
    if config.window > min(reference.height, reference.width):
        raise MetricError(
            f"window {config.window} exceeds image {reference.height}x{reference.width}"
        )
    kernel = _gaussian_kernel(config.window, config.sigma)
    L = config.dynamic_range
    c1 = (config.k1 * L) ** 2
    c2 = (config.k2 * L) ** 2
    maps = []
    for rc, tc in zip(reference.data, test.data):
        x = rc * L
        y = tc * L
        mu_x = _windowed_mean(x, kernel)
        mu_y = _windowed_mean(y, kernel)
        var_x = _windowed_mean(x * x, kernel) - mu_x * mu_x
        var_y = _windowed_mean(y * y, kernel) - mu_y * mu_y
        cov = _windowed_mean(x * y, kernel) - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
        den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
        maps.append(num / den)
    return np.stack(maps)


def ssim(reference: Image, test: Image, config: SsimConfig | None = None) -> float:
    return float(np.mean(ssim_map(reference, test, config)))


def evaluate(
    reference: Image, test: Image, label: str, dynamic_range: float = 255.0
) -> MetricRow:
    """All four metrics with a shared dynamic range, as one report row."""
    m = mse(reference, test, dynamic_range)
    return MetricRow(
        label=label,
        ssim=ssim(reference, test, SsimConfig(dynamic_range=dynamic_range)),
        nrmse=nrmse(reference, test),
        mse=m,
        psnr=psnr_from_mse(m, dynamic_range),
    )


_COLUMNS = ("Model", "SSIM", "NRMSE", "MSE", "PSNR")


def _format_value(column: str, row: MetricRow) -> str:
    if column == "SSIM":
        return f"{row.ssim:.4f}"
    if column == "NRMSE":
        return f"{row.nrmse:.3e}"
    if column == "MSE":
        return f"{row.mse:.3e}"
    if column == "PSNR":
        return "inf" if math.isinf(row.psnr) else f"{row.psnr:.2f}"
    return row.label


def format_table(rows: list[MetricRow]) -> str:
    """Aligned plain-text table in the report column order."""
    cells = [list(_COLUMNS)]
    for row in rows:
        cells.append([_format_value(col, row) for col in _COLUMNS])
    widths = [max(len(line[i]) for line in cells) for i in range(len(_COLUMNS))]
    lines = []
    for line in cells:
        lines.append("  ".join(val.ljust(widths[i]) for i, val in enumerate(line)).rstrip())
    return "\n".join(lines) + "\n"


def format_records(rows: list[MetricRow]) -> str:
    """Line-delimited JSON records, one row per line."""
    return "".join(json.dumps(row.to_record()) + "\n" for row in rows)


def parse_records(text: str) -> list[MetricRow]:
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        psnr_val = math.inf if rec["psnr"] == "inf" else float(rec["psnr"])
        rows.append(
            MetricRow(
                label=rec["label"],
                ssim=float(rec["ssim"]),
                nrmse=float(rec["nrmse"]),
                mse=float(rec["mse"]),
                psnr=psnr_val,
            )
        )
    return rows
