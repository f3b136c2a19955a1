"""Network descriptors, parameters, and whole-network forward/backward passes."""
from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from sketchrec.errors import ContractError
from sketchrec.net import layers as L


@dataclass(frozen=True)
class Conv:
    name: str
    out_channels: int
    kernel: int
    stride: int = 1
    pad: int = 0


@dataclass(frozen=True)
class MaxPool:
    name: str
    window: int
    stride: int


@dataclass(frozen=True)
class InnerProduct:
    name: str
    out_units: int


@dataclass(frozen=True)
class ReLU:
    name: str


@dataclass(frozen=True)
class SoftmaxLoss:
    name: str


LayerSpec = Union[Conv, MaxPool, InnerProduct, ReLU, SoftmaxLoss]
KINDS = {cls.__name__: cls for cls in (Conv, MaxPool, InnerProduct, ReLU, SoftmaxLoss)}
PARAMETRIC = (Conv, InnerProduct)


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple
    layers: tuple
    name: str = "net"

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ContractError(f"input shape must be positive C x H x W, got {self.input_shape}")
        names = [layer.name for layer in self.layers]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ContractError(f"duplicate layer names: {sorted(dup)}")
        for i, layer in enumerate(self.layers):
            if isinstance(layer, SoftmaxLoss) and i != len(self.layers) - 1:
                raise ContractError(f"SoftmaxLoss layer {layer.name!r} must be last")
        object.__setattr__(self, "_shapes", self._infer_shapes())

    def _infer_shapes(self) -> dict:
        shapes = OrderedDict()
        shape = self.input_shape
        for layer in self.layers:
            if isinstance(layer, Conv):
                if min(layer.kernel, layer.stride, layer.out_channels) < 1 or layer.pad < 0:
                    raise ContractError(f"{layer.name}: invalid hyperparameters {layer}")
                if len(shape) != 3:
                    raise ContractError(f"{layer.name}: convolution needs a spatial input, got {shape}")
                c, h, w = shape
                ho = L.conv_output_size(h, layer.kernel, layer.stride, layer.pad)
                wo = L.conv_output_size(w, layer.kernel, layer.stride, layer.pad)
                if h + 2 * layer.pad < layer.kernel or w + 2 * layer.pad < layer.kernel:
                    raise ContractError(f"{layer.name}: kernel {layer.kernel} exceeds input {h}x{w}")
                shape = (layer.out_channels, ho, wo)
            elif isinstance(layer, MaxPool):
                if min(layer.window, layer.stride) < 1:
                    raise ContractError(f"{layer.name}: invalid hyperparameters {layer}")
                if len(shape) != 3:
                    raise ContractError(f"{layer.name}: pooling needs a spatial input, got {shape}")
                c, h, w = shape
                if layer.window > min(h, w):
                    raise ContractError(f"{layer.name}: window {layer.window} exceeds input {h}x{w}")
                shape = (c, (h - layer.window) // layer.stride + 1, (w - layer.window) // layer.stride + 1)
            elif isinstance(layer, InnerProduct):
                if layer.out_units < 1:
                    raise ContractError(f"{layer.name}: out_units must be positive")
                shape = (layer.out_units,)
            elif isinstance(layer, SoftmaxLoss):
                if len(shape) != 1 or shape[0] < 2:
                    raise ContractError(f"{layer.name}: softmax needs a vector of >= 2 logits, got {shape}")
            elif not isinstance(layer, ReLU):
                raise ContractError(f"unknown layer {layer!r}")
            shapes[layer.name] = shape
        return shapes

    @property
    def output_shapes(self) -> dict:
        return self._shapes

    @property
    def layer_names(self) -> list[str]:
        return [layer.name for layer in self.layers]

    def layer(self, name: str) -> LayerSpec:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise ContractError(f"unknown layer {name!r}; valid layers: {', '.join(self.layer_names)}")

    def input_shape_of(self, name: str) -> tuple:
        prev = self.input_shape
        for layer in self.layers:
            if layer.name == name:
                return prev
            prev = self._shapes[layer.name]
        raise ContractError(f"unknown layer {name!r}; valid layers: {', '.join(self.layer_names)}")

    def param_shapes(self) -> dict:
        out = OrderedDict()
        for layer in self.layers:
            fan_in_shape = self.input_shape_of(layer.name)
            if isinstance(layer, Conv):
                out[layer.name] = ((layer.out_channels, fan_in_shape[0], layer.kernel, layer.kernel),
                                   (layer.out_channels,))
            elif isinstance(layer, InnerProduct):
                out[layer.name] = ((layer.out_units, int(np.prod(fan_in_shape))), (layer.out_units,))
        return out

    def num_params(self) -> int:
        return sum(int(np.prod(w)) + int(np.prod(b)) for w, b in self.param_shapes().values())

    # descriptor JSON

    def to_json(self) -> str:
        records = [{"kind": type(layer).__name__, **asdict(layer)} for layer in self.layers]
        return json.dumps({"name": self.name, "input_shape": list(self.input_shape), "layers": records}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NetworkSpec":
        doc = json.loads(text)
        layers = []
        for rec in doc["layers"]:
            rec = dict(rec)
            kind = rec.pop("kind", None)
            if kind not in KINDS:
                raise ContractError(f"unknown layer kind {kind!r}")
            layers.append(KINDS[kind](**rec))
        return cls(tuple(doc["input_shape"]), tuple(layers), doc.get("name", "net"))


@dataclass
class NetworkState:
    weights: dict = field(default_factory=OrderedDict)
    iteration: int = 0

    def copy(self) -> "NetworkState":
        return NetworkState(OrderedDict((k, (w.copy(), b.copy())) for k, (w, b) in self.weights.items()),
                            self.iteration)


def init_state(spec: NetworkSpec, seed: int = 0, dtype=np.float32) -> NetworkState:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights = OrderedDict()
    for name, (wshape, bshape) in spec.param_shapes().items():
        if len(wshape) == 4:
            receptive = wshape[2] * wshape[3]
            fan_in, fan_out = wshape[1] * receptive, wshape[0] * receptive
        else:
            fan_out, fan_in = wshape
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights[name] = (rng.uniform(-limit, limit, size=wshape).astype(dtype), np.zeros(bshape, dtype=dtype))
    return NetworkState(weights)


def check_state(spec: NetworkSpec, state: NetworkState) -> None:
    for name, (wshape, bshape) in spec.param_shapes().items():
        if name not in state.weights:
            raise ContractError(f"state has no parameters for layer {name!r}")
        w, b = state.weights[name]
        if w.shape != wshape or b.shape != bshape:
            raise ContractError(
                f"layer {name!r}: parameter shapes {w.shape}/{b.shape} do not match spec {wshape}/{bshape}"
            )


def _batched(spec: NetworkSpec, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    if x.shape == spec.input_shape:
        return x[None], True
    if x.ndim == 4 and x.shape[1:] == spec.input_shape:
        return x, False
    raise ContractError(f"input shape {x.shape} does not match network input {spec.input_shape}")


def _layer_forward(layer, state, x, cache=None):
    if isinstance(layer, Conv):
        w, b = state.weights[layer.name]
        if cache is None:
            return L.conv2d_forward(x, w, b, layer.stride, layer.pad, name=layer.name)
        out, cache[layer.name] = L.conv2d_forward(x, w, b, layer.stride, layer.pad, name=layer.name,
                                                  return_cols=True)
        return out
    if isinstance(layer, MaxPool):
        out, argmax = L.maxpool_forward(x, layer.window, layer.stride, name=layer.name)
        if cache is not None:
            cache[layer.name] = argmax
        return out
    if isinstance(layer, InnerProduct):
        w, b = state.weights[layer.name]
        return L.inner_product_forward(x, w, b, name=layer.name, batched=True)
    if isinstance(layer, ReLU):
        return L.relu_forward(x)
    if isinstance(layer, SoftmaxLoss):
        return L.softmax(x).astype(x.dtype)
    raise ContractError(f"unknown layer {layer!r}")


def forward(spec: NetworkSpec, state: NetworkState, x, tap: Optional[str] = None, _cache=None) -> dict:
    """Run the network, returning every layer's output keyed by name.

    With ``tap`` the pass stops after that layer. A single unbatched input
    gives unbatched activations. The SoftmaxLoss layer outputs probabilities.
    """
    if tap is not None and tap not in spec.output_shapes:
        raise ContractError(f"unknown tap layer {tap!r}; valid layers: {', '.join(spec.layer_names)}")
    xb, single = _batched(spec, x)
    acts = OrderedDict()
    h = xb
    for layer in spec.layers:
        h = _layer_forward(layer, state, h, _cache)
        acts[layer.name] = h
        if layer.name == tap:
            break
    if single:
        return OrderedDict((k, v[0]) for k, v in acts.items())
    return acts


def backward(spec: NetworkSpec, state: NetworkState, x, activations: dict, labels,
             input_grad: bool = True, _cache=None):
    """Backpropagate the mean softmax cross-entropy.

    Returns ``(loss, grads)``; ``grads`` maps each parametric layer name to
    ``(dW, db)`` and, when ``input_grad``, ``"input"`` to the gradient
    w.r.t. ``x`` (float64).
    """
    cache = _cache or {}
    if not spec.layers or not isinstance(spec.layers[-1], SoftmaxLoss):
        raise ContractError("backward needs a network ending in SoftmaxLoss")
    xb, single = _batched(spec, x)
    missing = [n for n in spec.layer_names[:-1] if n not in activations]
    if missing:
        raise ContractError(f"activations missing for layers {missing}; run a full forward pass first")
    acts = {k: (v[None] if single else v) for k, v in activations.items()}
    labels = np.atleast_1d(np.asarray(labels))
    if len(labels) != len(xb):
        raise ContractError(f"{len(labels)} labels for a batch of {len(xb)}")

    inputs = [xb] + [acts[layer.name] for layer in spec.layers[:-1]]
    logits = inputs[-1]
    loss, probs = L.softmax_loss(logits, labels)
    n = len(labels)
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    grad /= n

    grads = OrderedDict()
    first = spec.layers[0].name
    for layer, inp in zip(reversed(spec.layers[:-1]), reversed(inputs[:-1])):
        need_dx = input_grad or layer.name != first
        if isinstance(layer, Conv):
            w, _ = state.weights[layer.name]
            grad, dw, db = L.conv2d_backward(grad, inp, w, layer.stride, layer.pad,
                                             cols=cache.get(layer.name), input_grad=need_dx)
            grads[layer.name] = (dw, db)
        elif isinstance(layer, MaxPool):
            argmax = cache.get(layer.name)
            if argmax is None:
                _, argmax = L.maxpool_forward(inp, layer.window, layer.stride)
            grad = L.maxpool_backward(grad, inp.shape, argmax, layer.window, layer.stride)
        elif isinstance(layer, InnerProduct):
            w, _ = state.weights[layer.name]
            grad, dw, db = L.inner_product_backward(grad, inp, w)
            grads[layer.name] = (dw, db)
        elif isinstance(layer, ReLU):
            grad = L.relu_backward(grad, inp)
    if input_grad:
        grads["input"] = grad[0] if single else grad
    return loss, OrderedDict(reversed(list(grads.items())))


def loss_and_grads(spec: NetworkSpec, state: NetworkState, x, labels, input_grad: bool = False):
    """Forward and backward in one go, reusing patch matrices and pooling argmaxes."""
    cache = {}
    acts = forward(spec, state, x, _cache=cache)
    return backward(spec, state, x, acts, labels, input_grad=input_grad, _cache=cache)


def predict(spec: NetworkSpec, state: NetworkState, x, batch_size: int = 500) -> np.ndarray:
    """Class indices for a batch (N, C, H, W)."""
    out = []
    for start in range(0, len(x), batch_size):
        acts = forward(spec, state, x[start:start + batch_size])
        out.append(np.argmax(acts[spec.layers[-1].name], axis=1))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)
