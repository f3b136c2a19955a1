"""Netpbm (PGM/PPM) reading and writing.

Supported magics: P2 (ASCII gray), P5 (binary gray), P3 (ASCII color), P6
(binary color). Samples wider than one byte (maxval > 255) are big-endian.
"""
from __future__ import annotations

import numpy as np

from sketchrec.errors import FormatError

_WHITESPACE = b" \t\r\n\x0b\x0c"
_CHANNELS = {b"P2": 1, b"P5": 1, b"P3": 3, b"P6": 3}


class _HeaderReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _skip_space_and_comments(self):
        data = self.data
        while self.pos < len(data):
            ch = data[self.pos:self.pos + 1]
            if ch == b"#":
                while self.pos < len(data) and data[self.pos:self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
            elif ch in _WHITESPACE:
                self.pos += 1
            else:
                return

    def token(self, what: str) -> bytes:
        self._skip_space_and_comments()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos:self.pos + 1] not in _WHITESPACE + b"#":
            self.pos += 1
        if start == self.pos:
            raise FormatError(f"expected {what} at byte offset {start}, found end of data")
        return self.data[start:self.pos]

    def integer(self, what: str) -> int:
        offset = self.pos
        tok = self.token(what)
        if not tok.isdigit():
            raise FormatError(f"malformed {what} {tok!r} at byte offset {offset}")
        return int(tok)


def decode_pnm(data: bytes) -> tuple[np.ndarray, int]:
    """Decode a PGM/PPM buffer into raw integer samples.

    Returns ``(samples, maxval)`` where samples has shape (H, W) for gray
    images and (H, W, 3) for color images, dtype uint16.
    """
    if len(data) < 2:
        raise FormatError("truncated header at byte offset 0")
    magic = bytes(data[:2])
    if magic not in _CHANNELS:
        raise FormatError(f"unsupported magic {magic!r} at byte offset 0")
    channels = _CHANNELS[magic]
    reader = _HeaderReader(data)
    reader.pos = 2
    width = reader.integer("width")
    height = reader.integer("height")
    maxval_offset = reader.pos
    maxval = reader.integer("maxval")
    if width < 1 or height < 1:
        raise FormatError(f"non-positive image size {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise FormatError(f"maxval {maxval} out of range at byte offset {maxval_offset}")
    count = width * height * channels
    shape = (height, width) if channels == 1 else (height, width, channels)

    if magic in (b"P5", b"P6"):
        # exactly one whitespace byte separates the header from the raster
        if reader.pos >= len(data) or data[reader.pos:reader.pos + 1] not in _WHITESPACE:
            raise FormatError(f"missing whitespace after header at byte offset {reader.pos}")
        start = reader.pos + 1
        sample_bytes = 1 if maxval < 256 else 2
        need = count * sample_bytes
        if len(data) - start < need:
            raise FormatError(
                f"truncated payload at byte offset {len(data)}: expected {need} bytes from offset {start}"
            )
        dtype = np.uint8 if sample_bytes == 1 else np.dtype(">u2")
        samples = np.frombuffer(data, dtype=dtype, count=count, offset=start).astype(np.uint16)
    else:
        values = []
        for _ in range(count):
            offset = reader.pos
            try:
                values.append(reader.integer("sample"))
            except FormatError:
                raise FormatError(f"truncated payload at byte offset {offset}") from None
        samples = np.array(values, dtype=np.int64)
        if samples.size and samples.max() > maxval:
            raise FormatError(f"sample exceeds maxval {maxval}")
        samples = samples.astype(np.uint16)
    if samples.max(initial=0) > maxval:
        raise FormatError(f"sample exceeds maxval {maxval}")
    return samples.reshape(shape), maxval


def encode_pnm(samples: np.ndarray, maxval: int = 255, ascii: bool = False) -> bytes:
    """Encode integer samples (H, W) or (H, W, 3) as PGM/PPM bytes."""
    samples = np.asarray(samples)
    if samples.ndim == 2:
        magic = "P2" if ascii else "P5"
    elif samples.ndim == 3 and samples.shape[2] == 3:
        magic = "P3" if ascii else "P6"
    else:
        raise ValueError(f"cannot encode array of shape {samples.shape}")
    if not 1 <= maxval <= 65535:
        raise ValueError(f"maxval {maxval} out of range")
    if samples.size and (samples.min() < 0 or samples.max() > maxval):
        raise ValueError("samples outside [0, maxval]")
    height, width = samples.shape[:2]
    header = f"{magic}\n{width} {height}\n{maxval}\n".encode("ascii")
    if ascii:
        rows = [" ".join(str(int(v)) for v in row.ravel()) for row in samples]
        return header + ("\n".join(rows) + "\n").encode("ascii")
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    return header + samples.astype(dtype).tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    """Decode a gray PGM (P2/P5) into a float64 raster scaled to [0, 1]."""
    if bytes(data[:2]) not in (b"P2", b"P5"):
        raise FormatError(f"unsupported magic {bytes(data[:2])!r} at byte offset 0")
    samples, maxval = decode_pnm(data)
    return samples.astype(np.float64) / maxval


def encode_pgm(raster: np.ndarray, maxval: int = 255, ascii: bool = False) -> bytes:
    """Encode a [0, 1] raster, quantizing with round-half-up."""
    raster = np.asarray(raster, dtype=np.float64)
    if raster.ndim != 2:
        raise ValueError(f"expected a 2-D raster, got shape {raster.shape}")
    samples = np.floor(np.clip(raster, 0.0, 1.0) * maxval + 0.5).astype(np.int64)
    return encode_pnm(samples, maxval, ascii=ascii)


def encode_ppm(rgb: np.ndarray, maxval: int = 255) -> bytes:
    return encode_pnm(np.asarray(rgb), maxval)
