"""IDX (MNIST) file parsing."""
from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from sketchrec.errors import FormatError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _read_header(data: bytes, magic: int, ndim: int, what: str) -> tuple[int, ...]:
    header_len = 4 + 4 * ndim
    if len(data) < header_len:
        raise FormatError(f"{what}: truncated header ({len(data)} bytes, need {header_len})")
    found = struct.unpack(">I", data[:4])[0]
    if found != magic:
        raise FormatError(f"{what}: bad magic 0x{found:08x}, expected 0x{magic:08x}")
    return struct.unpack(f">{ndim}I", data[4:header_len])


def parse_idx_images(data: bytes) -> np.ndarray:
    """Return a uint8 array (N, rows, cols)."""
    n, rows, cols = _read_header(data, IMAGES_MAGIC, 3, "images")
    need = 16 + n * rows * cols
    if len(data) < need:
        raise FormatError(f"images: truncated payload ({len(data)} bytes, need {need})")
    return np.frombuffer(data, dtype=np.uint8, count=n * rows * cols, offset=16).reshape(n, rows, cols)


def parse_idx_labels(data: bytes) -> np.ndarray:
    (n,) = _read_header(data, LABELS_MAGIC, 1, "labels")
    if len(data) < 8 + n:
        raise FormatError(f"labels: truncated payload ({len(data)} bytes, need {8 + n})")
    return np.frombuffer(data, dtype=np.uint8, count=n, offset=8)


def load_idx(images: bytes, labels: bytes) -> list[tuple[np.ndarray, int]]:
    """Pair each image (scaled to [0, 1]) with its label."""
    x, y = load_idx_arrays(images, labels)
    return [(x[i], int(y[i])) for i in range(len(y))]


def load_idx_arrays(images: bytes, labels: bytes) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized variant of :func:`load_idx`: float32 (N, H, W) and int64 (N,)."""
    imgs = parse_idx_images(images)
    labs = parse_idx_labels(labels)
    if len(imgs) != len(labs):
        raise FormatError(f"count mismatch: {len(imgs)} images vs {len(labs)} labels")
    return imgs.astype(np.float32) / np.float32(255.0), labs.astype(np.int64)


def encode_idx_images(images: np.ndarray) -> bytes:
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    return struct.pack(">IIII", IMAGES_MAGIC, n, rows, cols) + images.tobytes()


def encode_idx_labels(labels) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", LABELS_MAGIC, len(labels)) + labels.tobytes()


def _read_maybe_gz(path: Path) -> bytes:
    raw = path.read_bytes()
    return gzip.decompress(raw) if raw[:2] == b"\x1f\x8b" else raw


def find_mnist_split(root, split: str) -> tuple[Path, Path]:
    """Locate ``(images, labels)`` files for split 'train' or 't10k' under root.

    Accepts both the ``train-images-idx3-ubyte`` and ``train-images.idx3-ubyte``
    spellings, optionally gzipped.
    """
    root = Path(root)
    found = []
    for kind, dims in (("images", 3), ("labels", 1)):
        candidates = [
            root / f"{split}-{kind}-idx{dims}-ubyte",
            root / f"{split}-{kind}.idx{dims}-ubyte",
        ]
        candidates += [c.with_name(c.name + ".gz") for c in candidates]
        match = next((c for c in candidates if c.exists()), None)
        if match is None:
            raise FileNotFoundError(f"no {split} {kind} IDX file under {root}")
        found.append(match)
    return found[0], found[1]


def load_mnist(root, split: str = "train") -> tuple[np.ndarray, np.ndarray]:
    images, labels = find_mnist_split(root, split)
    return load_idx_arrays(_read_maybe_gz(images), _read_maybe_gz(labels))
