"""Versioned named-tensor checkpoint files (``.aclr``).

Layout, all integers little-endian ``u32``::

    b"ACLR" | version | len(config) | config JSON (UTF-8)
    | tensor count | per tensor: len(name) | name | ndim | dims... | float32 data
"""

import json
import struct

import numpy as np

from .model import NetConfig, build_network
from .quantizer import ColorBinGrid

MAGIC = b"ACLR"
VERSION = 1


class CheckpointError(Exception):
    """Base class for unreadable checkpoint files."""


class NotACheckpointError(CheckpointError):
    pass


class UnsupportedVersionError(CheckpointError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass


def _u32(n):
    return struct.pack("<I", n)


def encode_checkpoint(config, tensors, version=VERSION):
    """Serialize a config dict and ``{name: array}`` map to bytes."""
    parts = [MAGIC, _u32(version)]
    text = json.dumps(config, sort_keys=True).encode("utf-8")
    parts += [_u32(len(text)), text, _u32(len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f4")
        raw = name.encode("utf-8")
        parts += [_u32(len(raw)), raw, _u32(arr.ndim)]
        parts += [_u32(d) for d in arr.shape]
        parts.append(arr.tobytes(order="C"))
    return b"".join(parts)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CorruptCheckpointError(
                f"corrupt checkpoint: truncated at byte {len(self.data)}, needed {self.pos + n}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]


def decode_checkpoint(data):
    """Inverse of :func:`encode_checkpoint`; returns ``(config, tensors)``."""
    if len(data) < 4 or data[:4] != MAGIC:
        raise NotACheckpointError("not a checkpoint: bad magic")
    r = _Reader(data)
    r.take(4)
    version = r.u32()
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version} (expected {VERSION})")
    try:
        config = json.loads(r.take(r.u32()).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpointError(f"corrupt checkpoint: bad config block ({exc})") from None
    tensors = {}
    for _ in range(r.u32()):
        name = r.take(r.u32()).decode("utf-8", errors="replace")
        ndim = r.u32()
        shape = tuple(r.u32() for _ in range(ndim))
        count = int(np.prod(shape, dtype=np.int64))
        if name in tensors:
            raise CorruptCheckpointError(f"corrupt checkpoint: duplicate tensor {name!r}")
        tensors[name] = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape).astype(np.float32)
    if r.pos != len(data):
        raise CorruptCheckpointError(f"corrupt checkpoint: {len(data) - r.pos} trailing bytes")
    return config, tensors


def save_checkpoint(network, grid, path):
    """Write network weights, BN statistics and (optionally) the bin grid."""
    config = {"net": network.config.to_dict()}
    tensors = dict(network.state_dict())
    if grid is not None:
        config["grid"] = {"bin_size": grid.bin_size}
        tensors["grid.candidates"] = grid.candidates
        tensors["grid.in_gamut"] = grid.in_gamut.astype(np.float32)
    with open(path, "wb") as fh:
        fh.write(encode_checkpoint(config, tensors))


def load_checkpoint(path):
    """Read a checkpoint; returns ``(network, grid_or_None)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    config, tensors = decode_checkpoint(data)
    try:
        net_config = NetConfig.from_dict(config["net"])
        grid = None
        if "grid" in config:
            grid = ColorBinGrid(
                float(config["grid"]["bin_size"]),
                tensors.pop("grid.candidates").astype(np.float64),
                tensors.pop("grid.in_gamut") > 0.5)
        network = build_network(net_config)
        network.load_state_dict(tensors)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptCheckpointError(f"corrupt checkpoint: {exc}") from None
    if net_config.head == "classification" and (grid is None or grid.Q != net_config.Q):
        raise CorruptCheckpointError("corrupt checkpoint: classification head without a matching bin grid")
    return network, grid
