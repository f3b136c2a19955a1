"""The two architectures: a modified LeNet and an Imagenet-shaped graph."""
from __future__ import annotations

from sketchrec.errors import ContractError
from sketchrec.net.network import Conv, InnerProduct, MaxPool, NetworkSpec, ReLU, SoftmaxLoss


def preset_lenet_modified(num_classes: int = 10) -> NetworkSpec:
    """LeNet variant with a 500-unit ``ip1`` feature layer and softmax head."""
    if num_classes < 2:
        raise ContractError(f"num_classes must be >= 2, got {num_classes}")
    return NetworkSpec(
        (1, 28, 28),
        (
            Conv("conv1", 20, 5, 1, 0),
            MaxPool("pool1", 2, 2),
            Conv("conv2", 50, 5, 1, 0),
            MaxPool("pool2", 2, 2),
            InnerProduct("ip1", 500),
            ReLU("relu1"),
            InnerProduct("ip2", num_classes),
            SoftmaxLoss("loss"),
        ),
        name="lenet-modified",
    )


def preset_imagenet_shape(num_classes: int = 1000) -> NetworkSpec:
    """Five conv stages and fc6/fc7/fc8 on a 3x227x227 input.

    Grouped convolutions, local response normalization and dropout of the
    original network are left out; they do not change any layer's extent.
    """
    if num_classes < 2:
        raise ContractError(f"num_classes must be >= 2, got {num_classes}")
    return NetworkSpec(
        (3, 227, 227),
        (
            Conv("conv1", 96, 11, 4, 0),
            ReLU("relu1"),
            MaxPool("pool1", 3, 2),
            Conv("conv2", 256, 5, 1, 2),
            ReLU("relu2"),
            MaxPool("pool2", 3, 2),
            Conv("conv3", 384, 3, 1, 1),
            ReLU("relu3"),
            Conv("conv4", 384, 3, 1, 1),
            ReLU("relu4"),
            Conv("conv5", 256, 3, 1, 1),
            ReLU("relu5"),
            MaxPool("pool5", 3, 2),
            InnerProduct("fc6", 4096),
            ReLU("relu6"),
            InnerProduct("fc7", 4096),
            ReLU("relu7"),
            InnerProduct("fc8", num_classes),
            SoftmaxLoss("prob"),
        ),
        name="imagenet-shape",
    )


PRESETS = {
    "lenet-modified": preset_lenet_modified,
    "imagenet-shape": preset_imagenet_shape,
}
DEFAULT_TAP = {"lenet-modified": "ip1", "imagenet-shape": "fc7"}
