"""Train LeNet-modified on MNIST with the default SGD schedule and report test accuracy."""
import argparse
import logging
import time

import numpy as np

from sketchrec.net import SGDConfig, accuracy, init_state, preset_lenet_modified, save_state, train_sgd
from sketchrec.seeding import SUBSET_STREAM, mix_seed
from sketchrec.sketch_io import load_mnist


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mnist", default="data/mnist")
    ap.add_argument("--iters", type=int, default=SGDConfig().iterations)
    ap.add_argument("--subset", type=int, default=None, help="train on a seeded subset of this many images")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="weight file to write")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    x, y = load_mnist(args.mnist, "train")
    xt, yt = load_mnist(args.mnist, "t10k")
    if args.subset:
        idx = np.random.default_rng(mix_seed(args.seed, SUBSET_STREAM)).choice(len(x), args.subset, replace=False)
        x, y = x[idx], y[idx]
    spec = preset_lenet_modified(10)
    start = time.perf_counter()
    state, _ = train_sgd(spec, init_state(spec, args.seed), x[:, None], y, SGDConfig(iterations=args.iters),
                         seed=args.seed, log_every=max(1, args.iters // 20))
    print(f"{len(x)} training images, {args.iters} iterations, {time.perf_counter() - start:.0f}s")
    print(f"test accuracy {accuracy(spec, state, xt[:, None], yt):.4f}")
    if args.out:
        save_state(spec, state, args.out)


if __name__ == "__main__":
    main()
