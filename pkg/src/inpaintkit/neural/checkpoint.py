"""Binary checkpoint blob for generator configuration and weights.

Little-endian layout, version byte mandatory:

    offset  size              field
    0       4                 magic  b"NETB"
    4       1                 format version (currently 1)
    5       1                 use_sigmoid_output (0 or 1)
    6       2                 reserved, zero
    8       4  (u32)          levels
    12      4  (u32)          z_channels
    16      8  (f64)          leaky_slope
    24      4*levels (u32)    channels_per_level
    ...     4*levels (u32)    skip_channels_per_level
    ...     8  (u64)          parameter count
    ...     8*count (f64)     flat parameters (kernel then bias per
                              convolution, in the canonical layer order)
"""

from __future__ import annotations

import struct

import numpy as np

from inpaintkit.neural.net import NetConfig, NetParams

MAGIC = b"NETB"
VERSION = 1


class CheckpointError(Exception):
    pass


def checkpoint_bytes(config: NetConfig, params: NetParams) -> bytes:
    flat = params.to_flat()
    head = struct.pack(
        "<4sBBHIId",
        MAGIC,
        VERSION,
        1 if config.use_sigmoid_output else 0,
        0,
        config.levels,
        config.z_channels,
        config.leaky_slope,
    )
    body = struct.pack(f"<{config.levels}I", *config.channels_per_level)
    body += struct.pack(f"<{config.levels}I", *config.skip_channels_per_level)
    body += struct.pack("<Q", flat.size)
    body += flat.astype("<f8").tobytes()
    return head + body


def parse_checkpoint(blob: bytes) -> tuple[NetConfig, NetParams]:
    if len(blob) < 24 or blob[:4] != MAGIC:
        raise CheckpointError("not a checkpoint blob")
    version, use_sigmoid, _, levels, z_channels, slope = struct.unpack_from("<BBHIId", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos = 24
    channels = struct.unpack_from(f"<{levels}I", blob, pos)
    pos += 4 * levels
    skips = struct.unpack_from(f"<{levels}I", blob, pos)
    pos += 4 * levels
    (count,) = struct.unpack_from("<Q", blob, pos)
    pos += 8
    flat = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).astype(np.float64)
    config = NetConfig(
        levels=levels,
        channels_per_level=channels,
        skip_channels_per_level=skips,
        leaky_slope=slope,
        use_sigmoid_output=bool(use_sigmoid),
        z_channels=z_channels,
    )
    return config, NetParams.from_flat(config, flat)


def save_checkpoint(config: NetConfig, params: NetParams, path) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(config, params))


def load_checkpoint(path) -> tuple[NetConfig, NetParams]:
    with open(path, "rb") as fh:
        return parse_checkpoint(fh.read())
