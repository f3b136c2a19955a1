"""Sketch thickening and geometric augmentation.

Every sketch is first dilated with a 5x5 square; an :class:`AugmentationPlan`
then maps the dilated sketch to one variant per transform. Transforms are
plain immutable values so plans can be stored as JSON and compared.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from sketchrec.errors import ContractError
from sketchrec.sketch_io.corpus import Sketch

DILATION_SIZE = 5


def _require_binary(raster: np.ndarray, what: str) -> np.ndarray:
    raster = np.asarray(raster)
    if raster.ndim != 2:
        raise ContractError(f"{what}: expected a 2-D raster, got shape {raster.shape}")
    if not np.all((raster == 0) | (raster == 1)):
        raise ContractError(f"{what}: raster is not binary")
    return raster


def dilate(raster: np.ndarray, size: int = DILATION_SIZE) -> np.ndarray:
    """Binary dilation by a ``size`` x ``size`` square centered on each ink pixel.

    The square is separable, so this is a 1-D max along rows followed by one
    along columns. Ink that would land outside the raster is dropped.
    """
    raster = _require_binary(raster, "dilate").astype(np.float32)
    r = size // 2
    h, w = raster.shape
    padded = np.pad(raster, r)
    rows = np.zeros((h + 2 * r, w), dtype=np.float32)
    for k in range(size):
        np.maximum(rows, padded[:, k:k + w], out=rows)
    out = np.zeros((h, w), dtype=np.float32)
    for k in range(size):
        np.maximum(out, rows[k:k + h], out=out)
    return out


# --- transforms -----------------------------------------------------------

@dataclass(frozen=True)
class Mirror:
    axis: str = "vertical"

    def __post_init__(self):
        if self.axis not in ("vertical", "horizontal"):
            raise ContractError(f"mirror axis must be vertical or horizontal, got {self.axis!r}")


@dataclass(frozen=True)
class Rotate:
    """Counter-clockwise (as displayed) rotation about the raster center."""

    angle: float

    def __post_init__(self):
        if not -180 <= self.angle <= 180:
            raise ContractError(f"rotation angle {self.angle} outside [-180, 180]")


@dataclass(frozen=True)
class Shift:
    """Integer translation; positive dx moves ink right, positive dy moves it down."""

    dx: int
    dy: int


@dataclass(frozen=True)
class Zoom:
    """Central zoom by ``percent`` of the image size (negative shrinks)."""

    percent: float

    def __post_init__(self):
        if self.percent <= -100:
            raise ContractError(f"zoom of {self.percent}% collapses the image")


@dataclass(frozen=True)
class Compose:
    transforms: tuple

    def __post_init__(self):
        if not self.transforms:
            raise ContractError("Compose needs at least one transform")
        object.__setattr__(self, "transforms", tuple(self.transforms))


Transform = Union[Mirror, Rotate, Shift, Zoom, Compose]


def _bilinear_sample(img: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample ``img`` at fractional coordinates; outside the raster reads as 0."""
    h, w = img.shape
    padded = np.pad(img.astype(np.float64), 1)
    # padded index = original index + 1; clip keeps all four taps in range
    ys = np.clip(ys + 1.0, 0.0, h + 1.0)
    xs = np.clip(xs + 1.0, 0.0, w + 1.0)
    y0 = np.minimum(np.floor(ys).astype(np.intp), h)
    x0 = np.minimum(np.floor(xs).astype(np.intp), w)
    fy = ys - y0
    fx = xs - x0
    top = padded[y0, x0] * (1 - fx) + padded[y0, x0 + 1] * fx
    bottom = padded[y0 + 1, x0] * (1 - fx) + padded[y0 + 1, x0 + 1] * fx
    return top * (1 - fy) + bottom * fy


def _resample_about_center(img: np.ndarray, inverse: np.ndarray) -> np.ndarray:
    """Inverse-map each output pixel through a 2x2 matrix acting on (x, y) offsets."""
    h, w = img.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dx, dy = xx - cx, yy - cy
    src_x = inverse[0, 0] * dx + inverse[0, 1] * dy + cx
    src_y = inverse[1, 0] * dx + inverse[1, 1] * dy + cy
    out = _bilinear_sample(img, src_y, src_x)
    return (out >= 0.5).astype(np.float32)


def _shift(img: np.ndarray, dx: int, dy: int) -> np.ndarray:
    h, w = img.shape
    out = np.zeros_like(img)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    src_r = slice(max(0, -dy), h - max(0, dy))
    src_c = slice(max(0, -dx), w - max(0, dx))
    dst_r = slice(max(0, dy), h - max(0, -dy))
    dst_c = slice(max(0, dx), w - max(0, -dx))
    out[dst_r, dst_c] = img[src_r, src_c]
    return out


def _apply(img: np.ndarray, t: Transform) -> np.ndarray:
    if isinstance(t, Mirror):
        return np.ascontiguousarray(img[:, ::-1] if t.axis == "vertical" else img[::-1, :])
    if isinstance(t, Shift):
        return _shift(img, int(t.dx), int(t.dy))
    if isinstance(t, Rotate):
        theta = np.deg2rad(t.angle)
        c, s = np.cos(theta), np.sin(theta)
        # y axis points down, so a visually counter-clockwise turn maps
        # destination offsets back to the source with this matrix
        return _resample_about_center(img, np.array([[c, -s], [s, c]]))
    if isinstance(t, Zoom):
        scale = 1.0 + t.percent / 100.0
        return _resample_about_center(img, np.eye(2) / scale)
    if isinstance(t, Compose):
        for sub in t.transforms:
            img = _apply(img, sub)
        return img
    raise ContractError(f"unknown transform {t!r}")


def apply_transform(raster: np.ndarray, t: Transform) -> np.ndarray:
    """Apply ``t`` to a binary raster; output is binary and the same size."""
    raster = _require_binary(raster, "apply_transform").astype(np.float32)
    return _apply(raster, t)


# --- plans ----------------------------------------------------------------

@dataclass(frozen=True)
class AugmentationPlan:
    name: str
    transforms: tuple

    def __post_init__(self):
        object.__setattr__(self, "transforms", tuple(self.transforms))
        if not self.transforms:
            raise ContractError(f"plan {self.name!r} has no transforms")
        if len(set(self.transforms)) != len(self.transforms):
            raise ContractError(f"plan {self.name!r} contains duplicate transforms")

    def __len__(self):
        return len(self.transforms)


def preset_paper30() -> AugmentationPlan:
    rotations = (-15, -5, 5, 15)
    offsets = (-15, -5, 5, 15)
    transforms = [Mirror("vertical")]
    transforms += [Rotate(a) for a in rotations]
    transforms += [Zoom(p) for p in (-7, -3, 3, 7)]
    transforms += [Shift(dx, dy) for dx in offsets for dy in offsets]
    transforms += [Compose((Mirror("vertical"), Rotate(a))) for a in rotations]
    transforms.append(Mirror("horizontal"))
    return AugmentationPlan("paper30", tuple(transforms))


PRESETS = {"paper30": preset_paper30}


def expand(sketch: Sketch, plan: AugmentationPlan) -> list[Sketch]:
    """One augmented sketch per transform in ``plan``."""
    if sketch.provenance != "dilated":
        raise ContractError(f"expand needs a dilated sketch, {sketch.id} is {sketch.provenance}")
    raster = _require_binary(sketch.raster, "expand").astype(np.float32)
    return [
        sketch.derive(id=f"{sketch.id}#aug{i:02d}", raster=_apply(raster, t), provenance=f"augmented:{i}")
        for i, t in enumerate(plan.transforms)
    ]


def dilate_sketch(sketch: Sketch) -> Sketch:
    if sketch.provenance != "original":
        raise ContractError(f"only original sketches are dilated, {sketch.id} is {sketch.provenance}")
    return sketch.derive(id=f"{sketch.id}#dil", raster=dilate(sketch.raster), provenance="dilated")


# --- JSON plan files ------------------------------------------------------

def transform_to_record(t: Transform) -> dict:
    if isinstance(t, Mirror):
        return {"kind": "mirror", "params": {"axis": t.axis}}
    if isinstance(t, Rotate):
        return {"kind": "rotate", "params": {"angle": t.angle}}
    if isinstance(t, Shift):
        return {"kind": "shift", "params": {"dx": t.dx, "dy": t.dy}}
    if isinstance(t, Zoom):
        return {"kind": "zoom", "params": {"percent": t.percent}}
    if isinstance(t, Compose):
        return {"kind": "compose", "params": {"transforms": [transform_to_record(s) for s in t.transforms]}}
    raise ContractError(f"unknown transform {t!r}")


def transform_from_record(record: dict) -> Transform:
    kind = record.get("kind")
    params = record.get("params", {})
    try:
        if kind == "mirror":
            return Mirror(params.get("axis", "vertical"))
        if kind == "rotate":
            return Rotate(params["angle"])
        if kind == "shift":
            return Shift(int(params["dx"]), int(params["dy"]))
        if kind == "zoom":
            return Zoom(params["percent"])
        if kind == "compose":
            return Compose(tuple(transform_from_record(r) for r in params["transforms"]))
    except KeyError as exc:
        raise ContractError(f"transform record {record!r} lacks parameter {exc}") from None
    raise ContractError(f"unknown transform kind {kind!r}")


def plan_to_json(plan: AugmentationPlan) -> str:
    return json.dumps([transform_to_record(t) for t in plan.transforms], indent=1)


def plan_from_json(text: str, name: str = "custom") -> AugmentationPlan:
    records = json.loads(text)
    if not isinstance(records, list):
        raise ContractError("plan file must hold a JSON array of transform records")
    return AugmentationPlan(name, tuple(transform_from_record(r) for r in records))


def resolve_plan(name_or_path: str) -> AugmentationPlan:
    """Look up a preset by name, otherwise read a JSON plan file."""
    if name_or_path in PRESETS:
        return PRESETS[name_or_path]()
    path = Path(name_or_path)
    if not path.is_file():
        raise ContractError(f"unknown plan {name_or_path!r} (presets: {', '.join(PRESETS)})")
    return plan_from_json(path.read_text(), name=path.stem)
