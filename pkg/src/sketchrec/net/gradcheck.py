"""Central finite-difference checks of backpropagated gradients."""
from __future__ import annotations

import numpy as np

from sketchrec.net.network import (
    Conv,
    InnerProduct,
    MaxPool,
    NetworkSpec,
    NetworkState,
    ReLU,
    SoftmaxLoss,
    forward,
    init_state,
    loss_and_grads,
)
from sketchrec.net.layers import maxpool_forward


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``|a - n| / max(|a| + |n|, 1e-12)`` in the 2-norm over a whole tensor."""
    a, n = np.ravel(analytic), np.ravel(numeric)
    return float(np.linalg.norm(a - n) / max(np.linalg.norm(a) + np.linalg.norm(n), 1e-12))


def _pattern(spec: NetworkSpec, state: NetworkState, x) -> list:
    """ReLU on/off masks and pooling winners; a central difference is only valid if they stay put."""
    acts = forward(spec, state, x)
    prev = np.asarray(x)
    out = []
    for layer in spec.layers:
        if isinstance(layer, ReLU):
            out.append(prev > 0)
        elif isinstance(layer, MaxPool):
            out.append(maxpool_forward(prev, layer.window, layer.stride)[1])
        prev = acts[layer.name]
    return out


def _same(a: list, b: list) -> bool:
    return all(np.array_equal(u, v) for u, v in zip(a, b))


def numeric_gradients(spec: NetworkSpec, state: NetworkState, x, labels, eps: float = 1e-3):
    """Central differences of the mean loss for every parameter and for the input.

    Returns ``(gradients, valid)``: ``valid`` masks out coordinates whose
    perturbation flips a ReLU or moves a pooling winner, where the loss is
    not differentiable and the difference quotient means nothing.
    """
    x = np.array(x, dtype=np.float64)
    base = _pattern(spec, state, x)

    def probe(flat, j, inp):
        orig = flat[j]
        flat[j] = orig + eps
        up, ok_up = loss_and_grads(spec, state, inp, labels)[0], _same(_pattern(spec, state, inp), base)
        flat[j] = orig - eps
        down, ok_down = loss_and_grads(spec, state, inp, labels)[0], _same(_pattern(spec, state, inp), base)
        flat[j] = orig
        return (up - down) / (2 * eps), ok_up and ok_down

    grads, valid = {}, {}
    for name, params in state.weights.items():
        gs, vs = [], []
        for p in params:
            g, v = np.zeros(p.shape), np.ones(p.shape, dtype=bool)
            flat = p.reshape(-1)
            for j in range(flat.size):
                g.reshape(-1)[j], v.reshape(-1)[j] = probe(flat, j, x)
            gs.append(g)
            vs.append(v)
        grads[name], valid[name] = tuple(gs), tuple(vs)
    g, v = np.zeros_like(x), np.ones(x.shape, dtype=bool)
    flat = x.reshape(-1)
    for j in range(flat.size):
        g.reshape(-1)[j], v.reshape(-1)[j] = probe(flat, j, x)
    grads["input"], valid["input"] = g, v
    return grads, valid


def check_gradients(spec: NetworkSpec, state: NetworkState, x, labels, eps: float = 1e-3):
    """Relative error of every analytic gradient tensor against central differences.

    Returns ``(errors, skipped)``: errors per tensor over differentiable
    coordinates, and the number of coordinates left out at kinks.
    """
    _, analytic = loss_and_grads(spec, state, x, labels, input_grad=True)
    numeric, valid = numeric_gradients(spec, state, x, labels, eps)
    errors = {"input": relative_error(analytic["input"][valid["input"]], numeric["input"][valid["input"]])}
    skipped = int((~valid["input"]).sum())
    for name in state.weights:
        for part, a, n, v in zip(("W", "b"), analytic[name], numeric[name], valid[name]):
            errors[f"{name}.{part}"] = relative_error(a[v], n[v])
            skipped += int((~v).sum())
    return errors, skipped


def random_small_network(rng: np.random.Generator, num_classes: int = 3,
                         max_params: int = 1000) -> tuple[NetworkSpec, NetworkState]:
    """A random conv/pool/inner-product/softmax stack small enough for exhaustive finite differences."""
    while True:
        channels = int(rng.integers(1, 3))
        size = int(rng.integers(7, 11))
        layers = [
            Conv("conv1", int(rng.integers(2, 4)), int(rng.integers(2, 4)), int(rng.integers(1, 3)),
                 int(rng.integers(0, 2))),
            ReLU("relu1"),
            MaxPool("pool1", 2, int(rng.integers(1, 3))),
            InnerProduct("ip1", int(rng.integers(3, 7))),
        ]
        if rng.random() < 0.5:
            layers.append(ReLU("relu2"))
        layers += [InnerProduct("ip2", num_classes), SoftmaxLoss("loss")]
        spec = NetworkSpec((channels, size, size), tuple(layers), name="random-small")
        if spec.num_params() <= max_params:
            break
    state = init_state(spec, seed=int(rng.integers(0, 2**31)), dtype=np.float64)
    for name, (w, b) in state.weights.items():
        state.weights[name] = (w, rng.normal(0, 0.1, size=b.shape))
    return spec, state
