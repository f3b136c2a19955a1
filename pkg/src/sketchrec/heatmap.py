"""Feature-map heat-maps from spatial layers, and their PGM/PPM rendering."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sketchrec.errors import ContractError
from sketchrec.net.features import prepare_input
from sketchrec.net.network import NetworkSpec, NetworkState, forward
from sketchrec.sketch_io.pnm import encode_pgm, encode_ppm
from sketchrec.sketch_io.resample import resize

# value -> RGB anchors, blue through cyan, green, yellow to red
COLOR_ANCHORS = (
    (0.00, (0, 0, 255)),
    (0.25, (0, 255, 255)),
    (0.50, (0, 255, 0)),
    (0.75, (255, 255, 0)),
    (1.00, (255, 0, 0)),
)


@dataclass(frozen=True)
class HeatMap:
    layer: str
    grid: np.ndarray
    upsampled: np.ndarray


def spatial_layers(spec: NetworkSpec) -> list[str]:
    return [name for name, shape in spec.output_shapes.items() if len(shape) == 3]


def aggregate(activations: np.ndarray) -> np.ndarray:
    """Sum of absolute activations over channels: (C, H, W) -> (H, W)."""
    return np.abs(np.asarray(activations, dtype=np.float64)).sum(axis=0)


def minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi <= lo:
        return np.zeros_like(values, dtype=np.float64)
    return (values - lo) / (hi - lo)


def compute_heatmap(spec: NetworkSpec, state: NetworkState, raster: np.ndarray, layer: str) -> HeatMap:
    """Firing-strength map of ``layer`` for one input raster (H, W) in ink convention."""
    valid = spatial_layers(spec)
    if layer not in valid:
        raise ContractError(f"layer {layer!r} has no spatial output; spatial layers: {', '.join(valid)}")
    raster = np.asarray(raster, dtype=np.float64)
    acts = forward(spec, state, prepare_input(raster, spec.input_shape), tap=layer)[layer]
    grid = minmax(aggregate(acts))
    up = np.clip(resize(grid, raster.shape, method="bilinear"), 0.0, 1.0)
    return HeatMap(layer, grid, up)


def colorize(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] values through the piecewise-linear anchors; uint8 (..., 3)."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    xs = [a for a, _ in COLOR_ANCHORS]
    rgb = np.stack([np.interp(v, xs, [c[i] for _, c in COLOR_ANCHORS]) for i in range(3)], axis=-1)
    return np.floor(rgb + 0.5).astype(np.uint8)


def render(heatmap: HeatMap, mode: str = "gray") -> bytes:
    if mode == "gray":
        return encode_pgm(heatmap.upsampled)
    if mode == "color":
        return encode_ppm(colorize(heatmap.upsampled))
    raise ContractError(f"unknown render mode {mode!r} (gray or color)")
