"""Mini-batch SGD with momentum, weight decay and inverse learning-rate decay."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from sketchrec.errors import ContractError, TrainingDiverged
from sketchrec.net.network import NetworkSpec, NetworkState, check_state, loss_and_grads, predict

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SGDConfig:
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch: int = 64
    iterations: int = 10000
    lr_gamma: float = 1e-4
    lr_power: float = 0.75

    def lr_at(self, iteration: int) -> float:
        return self.lr * (1.0 + self.lr_gamma * iteration) ** (-self.lr_power)

    def as_dict(self) -> dict:
        return asdict(self)


def sgd_step(state: NetworkState, grads: dict, velocity: dict, lr: float, momentum: float, weight_decay: float):
    """In-place update ``v <- m*v + lr*(g + wd*w); w <- w - v`` for every parameter."""
    for name, params in state.weights.items():
        new = []
        for i, (p, g) in enumerate(zip(params, grads[name])):
            v = velocity[name][i]
            p64 = p.astype(np.float64)
            v *= momentum
            v += lr * (g + weight_decay * p64)
            p64 -= v
            new.append(p64.astype(p.dtype))
        state.weights[name] = tuple(new)


def train_sgd(spec: NetworkSpec, state: NetworkState, x: np.ndarray, y: np.ndarray,
              config: SGDConfig = SGDConfig(), seed: int = 0, log_every: int = 0):
    """Train a copy of ``state``; returns ``(final_state, per_iteration_losses)``.

    Mini-batches walk through seeded per-epoch permutations of the data.
    """
    check_state(spec, state)
    x = np.asarray(x)
    y = np.asarray(y, dtype=np.int64)
    if len(x) != len(y) or len(x) == 0:
        raise ContractError(f"dataset has {len(x)} inputs and {len(y)} labels")
    n_out = spec.output_shapes[spec.layers[-1].name][0]
    if y.min() < 0 or y.max() >= n_out:
        raise ContractError(f"labels must lie in [0, {n_out}), got range [{y.min()}, {y.max()}]")

    state = state.copy()
    velocity = {name: [np.zeros(p.shape) for p in params] for name, params in state.weights.items()}
    rng = np.random.default_rng(seed)
    batch = min(config.batch, len(x))
    order = rng.permutation(len(x))
    cursor = 0
    losses = np.zeros(config.iterations)
    for it in range(config.iterations):
        if cursor + batch > len(order):
            order = rng.permutation(len(x))
            cursor = 0
        idx = order[cursor:cursor + batch]
        cursor += batch
        loss, grads = loss_and_grads(spec, state, x[idx], y[idx])
        if not np.isfinite(loss):
            raise TrainingDiverged(state.iteration, loss)
        losses[it] = loss
        sgd_step(state, grads, velocity, config.lr_at(state.iteration), config.momentum, config.weight_decay)
        state.iteration += 1
        if log_every and (it + 1) % log_every == 0:
            log.info("iter %d loss %.4f (mean of last %d: %.4f)", it + 1, loss, log_every,
                     losses[it + 1 - log_every:it + 1].mean())
    return state, losses


def accuracy(spec: NetworkSpec, state: NetworkState, x: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(predict(spec, state, x) == np.asarray(y)))
