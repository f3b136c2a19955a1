"""Reading activations of a named layer as fixed-length sketch descriptors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sketchrec.net.network import NetworkSpec, NetworkState, forward
from sketchrec.sketch_io.resample import resize


@dataclass(frozen=True)
class FeatureVector:
    network_id: str
    layer: str
    values: np.ndarray
    sketch_id: str = ""

    def __len__(self):
        return len(self.values)


def prepare_input(raster: np.ndarray, input_shape) -> np.ndarray:
    """Area-resize an ink raster to the network's H x W and replicate it over C channels."""
    c, h, w = input_shape
    img = resize(np.asarray(raster, dtype=np.float64), (h, w), method="area")
    return np.broadcast_to(img.astype(np.float32), (c, h, w)).copy()


def prepare_batch(rasters, input_shape) -> np.ndarray:
    rasters = np.asarray(rasters, dtype=np.float64)
    c, h, w = input_shape
    img = resize(rasters, (h, w), method="area").astype(np.float32)
    return np.repeat(img[:, None], c, axis=1)


def tap_batch(spec: NetworkSpec, state: NetworkState, inputs: np.ndarray, layer: str,
              batch_size: int = 256) -> np.ndarray:
    """Flattened activations at ``layer`` for a batch of prepared inputs, (N, D) float32."""
    out = []
    for start in range(0, len(inputs), batch_size):
        acts = forward(spec, state, inputs[start:start + batch_size], tap=layer)
        a = acts[layer]
        out.append(a.reshape(len(a), -1).astype(np.float32))
    if not out:
        dim = int(np.prod(spec.output_shapes[layer]))
        return np.zeros((0, dim), dtype=np.float32)
    return np.concatenate(out)


def tap_features(spec: NetworkSpec, state: NetworkState, raster: np.ndarray, layer: str,
                 sketch_id: str = "") -> FeatureVector:
    x = prepare_input(raster, spec.input_shape) if np.ndim(raster) == 2 else np.asarray(raster)
    acts = forward(spec, state, x, tap=layer)
    return FeatureVector(spec.name, layer, acts[layer].ravel().astype(np.float32), sketch_id)
