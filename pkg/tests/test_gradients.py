import numpy as np
import pytest

from sketchrec.net import InnerProduct, NetworkSpec, ReLU, SoftmaxLoss, init_state, loss_and_grads
from sketchrec.net.gradcheck import check_gradients, random_small_network
from sketchrec.net.layers import softmax


def test_two_layer_toy_net_matches_finite_differences(rng):
    spec = NetworkSpec((1, 3, 3), (InnerProduct("ip1", 4), ReLU("relu"), InnerProduct("ip2", 3), SoftmaxLoss("loss")))
    state = init_state(spec, seed=1, dtype=np.float64)
    x = rng.normal(size=(2, 1, 3, 3))
    errors, skipped = check_gradients(spec, state, x, np.array([0, 2]))
    assert skipped == 0
    assert max(errors.values()) <= 1e-4, errors


@pytest.mark.parametrize("seed", range(6))
def test_random_networks_match_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    spec, state = random_small_network(rng)
    x = rng.normal(size=(2,) + spec.input_shape)
    errors, skipped = check_gradients(spec, state, x, rng.integers(0, 3, size=2))
    assert max(errors.values()) <= 1e-4, errors
    assert skipped < 0.05 * (spec.num_params() + x.size)


def test_logit_gradient_is_probs_minus_one_hot(rng):
    spec = NetworkSpec((1, 1, 5), (InnerProduct("ip", 5), SoftmaxLoss("loss")))
    state = init_state(spec, seed=0, dtype=np.float64)
    state.weights["ip"] = (np.eye(5), np.zeros(5))
    logits = rng.normal(size=5)
    _, grads = loss_and_grads(spec, state, logits.reshape(1, 1, 5), [2], input_grad=True)
    expected = softmax(logits)
    expected[2] -= 1
    np.testing.assert_allclose(grads["input"].ravel(), expected, atol=1e-12)
