import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

MNIST_DIRS = [os.environ.get("SKETCHREC_MNIST", ""), "/root/data/mnist", str(Path(__file__).parent.parent / "data" / "mnist")]


def mnist_root():
    from sketchrec.sketch_io.idx import find_mnist_split

    for d in MNIST_DIRS:
        if not d:
            continue
        try:
            find_mnist_split(d, "train")
            find_mnist_split(d, "t10k")
            return Path(d)
        except FileNotFoundError:
            continue
    return None


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_lenet():
    """An untrained LeNet-modified spec/state pair with 4 classes."""
    from sketchrec.net import init_state, preset_lenet_modified

    spec = preset_lenet_modified(4)
    return spec, init_state(spec, seed=3)


ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Store a one-line verdict for an acceptance criterion; printed in the terminal summary."""

    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}")
