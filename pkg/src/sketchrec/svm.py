"""One-vs-rest linear SVM trained by dual coordinate descent.

Each binary problem minimizes ``0.5*|w|^2 + C * sum(hinge(y_i * w.x_i))`` over
bias-augmented inputs ``x = (features, 1)``. Its dual is maximized one
multiplier at a time inside the box ``0 <= alpha_i <= C``; every exact
coordinate step can only raise the dual objective.
"""
from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numba import njit

from sketchrec._fileutil import atomic_write_bytes
from sketchrec.errors import ContractError, FormatError
from sketchrec.seeding import mix_seed

MODEL_MAGIC = b"SKLM"


@njit(cache=True, nogil=True)
def _sweep(x, y, alpha, w, qii, order, c, shrink_hi, shrink_lo, keep):
    """One pass of exact coordinate updates over ``order``.

    Coordinates stuck at a bound whose gradient lies beyond the previous
    sweep's violation range are marked ``keep[k] = False`` (shrunk).
    Returns the (max, min) projected gradient over the visited coordinates.
    """
    d = x.shape[1]
    pg_max = -np.inf
    pg_min = np.inf
    for k in range(order.shape[0]):
        i = order[k]
        keep[k] = True
        g = 0.0
        for j in range(d):
            g += w[j] * x[i, j]
        g = y[i] * g - 1.0
        a = alpha[i]
        pg = 0.0
        if a <= 0.0:
            if g > shrink_hi:
                keep[k] = False
                continue
            if g < 0.0:
                pg = g
        elif a >= c:
            if g < shrink_lo:
                keep[k] = False
                continue
            if g > 0.0:
                pg = g
        else:
            pg = g
        pg_max = max(pg_max, pg)
        pg_min = min(pg_min, pg)
        if pg != 0.0:
            new = min(max(a - g / qii[i], 0.0), c)
            alpha[i] = new
            step = (new - a) * y[i]
            if step != 0.0:
                for j in range(d):
                    w[j] += step * x[i, j]
    return pg_max, pg_min


def augment_bias(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.hstack([x, np.ones((len(x), 1))])


def l2_normalize(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def dual_objective(alpha: np.ndarray, x_aug: np.ndarray, y: np.ndarray) -> float:
    """``sum(alpha) - 0.5 * |sum_i alpha_i y_i x_i|^2`` for bias-augmented ``x_aug``."""
    w = (alpha * y) @ x_aug
    return float(alpha.sum() - 0.5 * w @ w)


def primal_objective(w: np.ndarray, x_aug: np.ndarray, y: np.ndarray, c: float) -> float:
    margins = y * (x_aug @ w)
    return float(0.5 * w @ w + c * np.maximum(0.0, 1.0 - margins).sum())


@dataclass
class BinaryResult:
    w: np.ndarray
    alpha: np.ndarray
    sweeps: int
    converged: bool
    dual_trace: np.ndarray


def solve_binary(x_aug: np.ndarray, y: np.ndarray, c: float, tol: float = 1e-3,
                 max_sweeps: int = 1000, seed: int = 0) -> BinaryResult:
    """Dual coordinate descent with shrinking on one +1/-1 problem (``x_aug`` already bias-augmented).

    Stops once the largest projected-gradient violation drops below ``tol``;
    shrunk coordinates are restored and re-checked before stopping.
    """
    x_aug = np.ascontiguousarray(x_aug, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = len(y)
    alpha = np.zeros(n)
    w = np.zeros(x_aug.shape[1])
    qii = np.einsum("ij,ij->i", x_aug, x_aug)
    rng = np.random.default_rng(seed)
    active = np.arange(n)
    hi, lo = np.inf, -np.inf
    trace = []
    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        order = active[rng.permutation(len(active))]
        keep = np.ones(len(order), dtype=np.bool_)
        pg_max, pg_min = _sweep(x_aug, y, alpha, w, qii, order, c, hi, lo, keep)
        sweeps += 1
        trace.append(alpha.sum() - 0.5 * w @ w)
        active = np.sort(order[keep])
        if max(pg_max, -pg_min) < tol or len(active) == 0:
            if len(order) == n and keep.all():
                converged = True
                break
            active = np.arange(n)
            hi, lo = np.inf, -np.inf
            continue
        hi = pg_max if pg_max > 0 else np.inf
        lo = pg_min if pg_min < 0 else -np.inf
    return BinaryResult(w, alpha, sweeps, converged, np.array(trace))


@dataclass
class LinearModel:
    classes: list
    weights: np.ndarray  # (K, D + 1); last column is the bias
    C: float
    tol: float = 1e-3
    normalize: bool = True
    sweeps: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    dual_traces: Optional[list] = field(default=None, repr=False)
    alphas: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ContractError("a linear model needs at least two classes")
        if self.weights.shape[0] != len(self.classes):
            raise ContractError(f"{self.weights.shape[0]} weight rows for {len(self.classes)} classes")

    @property
    def dim(self) -> int:
        return self.weights.shape[1] - 1

    def prepare(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dim:
            raise ContractError(f"feature dimension {x.shape[1]} does not match model dimension {self.dim}")
        return augment_bias(l2_normalize(x) if self.normalize else x)

    def decision_function(self, x) -> np.ndarray:
        return self.prepare(x) @ self.weights.T

    def predict_many(self, x) -> list:
        idx = np.argmax(self.decision_function(x), axis=1)
        return [self.classes[i] for i in idx]

    def metadata(self) -> dict:
        return {
            "C": self.C,
            "tol": self.tol,
            "normalize": self.normalize,
            "sweeps": list(self.sweeps),
            "converged": list(self.converged),
        }


def _as_matrix(features) -> np.ndarray:
    if isinstance(features, np.ndarray):
        x = features
    else:
        rows = [np.asarray(getattr(f, "values", f), dtype=np.float64) for f in features]
        if len({len(r) for r in rows}) > 1:
            raise ContractError("feature vectors have inconsistent lengths")
        x = np.array(rows)
    if x.ndim != 2:
        raise ContractError(f"features must form a 2-D matrix, got shape {x.shape}")
    return x


def train_ovr(features, labels: Sequence, C: float = 1.0, tol: float = 1e-3, max_sweeps: int = 1000,
              seed: int = 0, normalize: bool = True, classes: Optional[Sequence] = None,
              threads: int = 1, keep_duals: bool = False) -> LinearModel:
    """Fit one binary SVM per class (that class vs. the rest)."""
    x = _as_matrix(features)
    labels = list(labels)
    if len(labels) != len(x):
        raise ContractError(f"{len(x)} feature vectors but {len(labels)} labels")
    if C <= 0:
        raise ContractError(f"C must be positive, got {C}")
    present = sorted(set(labels))
    if len(present) < 2:
        raise ContractError(f"need at least two distinct labels, got {present}")
    classes = list(classes) if classes is not None else present
    missing = set(present) - set(classes)
    if missing:
        raise ContractError(f"labels {sorted(missing)} not in declared classes")
    x_aug = np.ascontiguousarray(augment_bias(l2_normalize(x) if normalize else x))
    position = {c: i for i, c in enumerate(classes)}
    lab = np.array([position[v] for v in labels])

    def solve(k):
        y = np.where(lab == k, 1.0, -1.0)
        return solve_binary(x_aug, y, C, tol, max_sweeps, mix_seed(seed, k))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(solve, range(len(classes))))
    else:
        results = [solve(k) for k in range(len(classes))]
    return LinearModel(
        classes=classes,
        weights=np.array([r.w for r in results]),
        C=C,
        tol=tol,
        normalize=normalize,
        sweeps=[r.sweeps for r in results],
        converged=[r.converged for r in results],
        dual_traces=[r.dual_trace for r in results],
        alphas=np.array([r.alpha for r in results]) if keep_duals else None,
    )


def predict(model: LinearModel, feature):
    """Label with the highest one-vs-rest score; ties go to the earlier class."""
    values = np.asarray(getattr(feature, "values", feature), dtype=np.float64)
    if values.ndim != 1:
        raise ContractError(f"predict takes a single feature vector, got shape {values.shape}")
    return model.predict_many(values[None])[0]


# --- model files ----------------------------------------------------------

def encode_model(model: LinearModel) -> bytes:
    k, d1 = model.weights.shape
    parts = [MODEL_MAGIC, struct.pack("<II", k, d1 - 1)]
    for c in model.classes:
        raw = str(c).encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
    parts.append(model.weights.astype("<f4").tobytes())
    meta = model.metadata()
    meta["label_kind"] = "int" if all(isinstance(c, (int, np.integer)) for c in model.classes) else "str"
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    parts.append(struct.pack("<I", len(blob)) + blob)
    return b"".join(parts)


def decode_model(data: bytes) -> LinearModel:
    def need(pos, n, what):
        if pos + n > len(data):
            raise FormatError(f"truncated model file: {what} at offset {pos}")

    if data[:4] != MODEL_MAGIC:
        raise FormatError("not a model file (bad magic)")
    need(4, 8, "header")
    k, d = struct.unpack("<II", data[4:12])
    pos = 12
    names = []
    for _ in range(k):
        need(pos, 4, "class name length")
        (n,) = struct.unpack("<I", data[pos:pos + 4])
        need(pos + 4, n, "class name")
        names.append(data[pos + 4:pos + 4 + n].decode("utf-8"))
        pos += 4 + n
    size = k * (d + 1) * 4
    need(pos, size, "weights")
    weights = np.frombuffer(data[pos:pos + size], dtype="<f4").astype(np.float64).reshape(k, d + 1)
    pos += size
    need(pos, 4, "metadata length")
    (n,) = struct.unpack("<I", data[pos:pos + 4])
    need(pos + 4, n, "metadata")
    meta = json.loads(data[pos + 4:pos + 4 + n])
    classes = [int(c) for c in names] if meta.get("label_kind") == "int" else names
    return LinearModel(classes, weights, meta["C"], meta["tol"], meta["normalize"],
                       meta["sweeps"], meta["converged"])


def save_model(model: LinearModel, path) -> None:
    atomic_write_bytes(Path(path), encode_model(model))


def load_model(path) -> LinearModel:
    return decode_model(Path(path).read_bytes())
