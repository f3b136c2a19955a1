from sketchrec.net.features import FeatureVector, prepare_batch, prepare_input, tap_batch, tap_features
from sketchrec.net.layers import (
    conv2d_forward,
    inner_product_forward,
    maxpool_forward,
    softmax,
    softmax_loss,
)
from sketchrec.net.network import (
    Conv,
    InnerProduct,
    MaxPool,
    NetworkSpec,
    NetworkState,
    ReLU,
    SoftmaxLoss,
    backward,
    forward,
    init_state,
    loss_and_grads,
    predict,
)
from sketchrec.net.presets import DEFAULT_TAP, PRESETS, preset_imagenet_shape, preset_lenet_modified
from sketchrec.net.serialize import decode_weights, load_state, save_state
from sketchrec.net.train import SGDConfig, accuracy, train_sgd

__all__ = [
    "Conv", "DEFAULT_TAP", "FeatureVector", "InnerProduct", "MaxPool", "NetworkSpec", "NetworkState",
    "PRESETS", "ReLU", "SGDConfig", "SoftmaxLoss", "accuracy", "backward", "conv2d_forward",
    "decode_weights", "forward", "init_state", "inner_product_forward", "load_state", "loss_and_grads",
    "maxpool_forward", "predict", "prepare_batch", "prepare_input", "preset_imagenet_shape",
    "preset_lenet_modified", "save_state", "softmax", "softmax_loss", "tap_batch", "tap_features",
    "train_sgd",
]
