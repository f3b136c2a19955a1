"""Binary weight files.

Layout (little-endian)::

    b"SKNW"  u32 version  u32 layer_count
    per layer:  u32 name_len  name (UTF-8)
                weight tensor, then bias tensor, each as
                u32 rank  u32 extents[rank]  f32 values (row-major)
"""
from __future__ import annotations

import struct
from collections import OrderedDict
from pathlib import Path

import numpy as np

from sketchrec._fileutil import atomic_write_bytes
from sketchrec.errors import FormatError
from sketchrec.net.network import NetworkSpec, NetworkState

MAGIC = b"SKNW"
VERSION = 1


def encode_state(state: NetworkState) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(state.weights))]
    for name, tensors in state.weights.items():
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
        for t in tensors:
            t = np.asarray(t)
            parts.append(struct.pack(f"<I{t.ndim}I", t.ndim, *t.shape))
            parts.append(t.astype("<f4").tobytes())
    return b"".join(parts)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated weight file: {what} needs {n} bytes at offset {self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def decode_weights(data: bytes) -> "OrderedDict[str, tuple[np.ndarray, np.ndarray]]":
    """Parse a weight file without reference to any network spec."""
    cur = _Cursor(data)
    if cur.take(4, "magic") != MAGIC:
        raise FormatError("not a weight file (bad magic)")
    version = cur.u32("version")
    if version != VERSION:
        raise FormatError(f"unsupported weight file version {version}")
    count = cur.u32("layer count")
    out = OrderedDict()
    for _ in range(count):
        name = cur.take(cur.u32("name length"), "layer name").decode("utf-8")
        tensors = []
        for part in ("weights", "bias"):
            rank = cur.u32(f"{name} {part} rank")
            shape = struct.unpack(f"<{rank}I", cur.take(4 * rank, f"{name} {part} extents"))
            n = int(np.prod(shape))
            values = np.frombuffer(cur.take(4 * n, f"{name} {part} values"), dtype="<f4")
            tensors.append(values.astype(np.float32).reshape(shape))
        out[name] = tuple(tensors)
    if cur.pos != len(data):
        raise FormatError(f"{len(data) - cur.pos} trailing bytes after last layer")
    return out


def state_from_weights(spec: NetworkSpec, weights) -> NetworkState:
    for name, (wshape, bshape) in spec.param_shapes().items():
        if name not in weights:
            raise FormatError(f"layer {name!r}: missing from weight file")
        w, b = weights[name]
        if w.shape != wshape or b.shape != bshape:
            raise FormatError(
                f"layer {name!r}: shape mismatch, file has {w.shape}/{b.shape}, network expects {wshape}/{bshape}"
            )
    extra = set(weights) - set(spec.param_shapes())
    if extra:
        raise FormatError(f"weight file has layers not in the network: {sorted(extra)}")
    return NetworkState(OrderedDict((n, weights[n]) for n in spec.param_shapes()))


def save_state(spec: NetworkSpec, state: NetworkState, path) -> None:
    state_from_weights(spec, state.weights)
    atomic_write_bytes(Path(path), encode_state(state))


def load_state(spec: NetworkSpec, path) -> NetworkState:
    return state_from_weights(spec, decode_weights(Path(path).read_bytes()))
