"""Command-line entry point: one subcommand per pipeline stage.

Exit status: 0 success, 1 usage error, 2 data or contract error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from sketchrec._fileutil import atomic_write_bytes
from sketchrec.errors import ContractError, LoadError, SketchRecError

log = logging.getLogger("sketchrec")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_threads(p):
    p.add_argument("--threads", type=int, default=1, help="worker threads for parallel stages")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sketchrec", description="Sketch recognition pipeline stages.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("augment", help="dilate sketches and write augmented variants")
    p.add_argument("--input", required=True, help="directory of PGM files (searched recursively)")
    p.add_argument("--output", required=True)
    p.add_argument("--plan", default="paper30", help="preset name or JSON plan file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--working-resolution", type=int, default=256)
    _add_threads(p)

    p = sub.add_parser("train-cnn", help="train a network on MNIST IDX files or a sketch corpus")
    p.add_argument("--input", required=True, help="directory with MNIST IDX files, or a corpus root")
    p.add_argument("--output", required=True, help="weight file to write")
    p.add_argument("--net", default="lenet-modified", choices=["lenet-modified", "imagenet-shape"])
    p.add_argument("--iters", type=int, default=10000)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--working-resolution", type=int, default=256)
    _add_threads(p)

    p = sub.add_parser("extract", help="tap layer features for dilated sketches and their variants")
    p.add_argument("--input", required=True, help="corpus root")
    p.add_argument("--output", required=True, help="feature file to write")
    p.add_argument("--weights", required=True)
    p.add_argument("--net", default="lenet-modified", choices=["lenet-modified", "imagenet-shape"])
    p.add_argument("--layer", default=None, help="layer to tap (default: ip1 / fc7)")
    p.add_argument("--plan", default="paper30", help="preset, JSON plan file, or 'none'")
    p.add_argument("--per-category", type=int, default=None, help="seeded subset size per category")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--working-resolution", type=int, default=256)
    _add_threads(p)

    p = sub.add_parser("train-svm", help="fit the one-vs-rest linear SVM on a feature file")
    p.add_argument("--input", required=True, help="feature file")
    p.add_argument("--output", required=True, help="model file to write")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-sweeps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    _add_threads(p)

    p = sub.add_parser("evaluate", help="run the shuffle/ladder protocol")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--report", required=True, help="report path (.csv; a .json twin is written alongside)")
    p.add_argument("--input", default=None, help="precomputed feature file (skips extraction)")
    p.add_argument("--seed", type=int, default=None, help="override the config's master seed")
    _add_threads(p)

    p = sub.add_parser("heatmap", help="render a conv-layer heat-map for one sketch")
    p.add_argument("--input", required=True, help="PGM sketch")
    p.add_argument("--output", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--net", default="lenet-modified", choices=["lenet-modified", "imagenet-shape"])
    p.add_argument("--layer", default=None, help="spatial layer (default: conv2 / conv5)")
    p.add_argument("--mode", default="gray", choices=["gray", "color"])
    p.add_argument("--working-resolution", type=int, default=256)
    return parser


def _log_config(args):
    resolved = {k: v for k, v in sorted(vars(args).items())}
    log.info("resolved configuration: %s", json.dumps(resolved, default=str, sort_keys=True))
    if resolved.get("seed") is not None:
        log.info("master seed: %s", resolved["seed"])


def cmd_augment(args) -> None:
    from sketchrec.augment import dilate_sketch, expand, resolve_plan
    from sketchrec.sketch_io import Sketch, decode_pgm, ink_to_pgm, preprocess

    plan = resolve_plan(args.plan)
    root, out = Path(args.input), Path(args.output)
    if not root.is_dir():
        raise LoadError(f"input {root} is not a directory")
    files = sorted(p for p in root.rglob("*.pgm") if p.is_file())
    if not files:
        raise LoadError(f"no PGM files under {root}")
    written = 0
    for path in files:
        rel = path.relative_to(root)
        try:
            raster = decode_pgm(path.read_bytes())
        except SketchRecError as exc:
            raise LoadError(f"cannot decode {path}: {exc}") from exc
        sketch = Sketch(str(rel.with_suffix("")), rel.parent.name or "_", preprocess(raster, args.working_resolution))
        for i, variant in enumerate(expand(dilate_sketch(sketch), plan)):
            target = out / rel.parent / f"{path.stem}_aug{i:02d}.pgm"
            atomic_write_bytes(target, ink_to_pgm(variant.raster))
            written += 1
    log.info("wrote %d variants for %d sketches to %s", written, len(files), out)


def _training_data(args, spec_factory):
    from sketchrec.augment import dilate_sketch
    from sketchrec.net import prepare_batch
    from sketchrec.sketch_io import load_corpus, load_mnist
    from sketchrec.sketch_io.idx import find_mnist_split

    root = Path(args.input)
    try:
        find_mnist_split(root, "train")
    except FileNotFoundError:
        corpus = load_corpus(root, args.working_resolution)
        spec = spec_factory(len(corpus.categories))
        dilated = [dilate_sketch(s) for s in corpus]
        x = prepare_batch([s.raster for s in dilated], spec.input_shape)
        y = np.array([corpus.categories.index(s.category) for s in dilated])
        return spec, x, y, None
    x, y = load_mnist(root, "train")
    spec = spec_factory(10)
    if spec.input_shape != (1, 28, 28):
        raise ContractError(f"MNIST training needs a 1x28x28 network, {args.net} takes {spec.input_shape}")
    test = None
    try:
        xt, yt = load_mnist(root, "t10k")
        test = (xt[:, None], yt)
    except FileNotFoundError:
        pass
    return spec, x[:, None], y, test


def cmd_train_cnn(args) -> None:
    from sketchrec.net import PRESETS, SGDConfig, accuracy, init_state, save_state, train_sgd

    spec, x, y, test = _training_data(args, PRESETS[args.net])
    config = SGDConfig(lr=args.lr, momentum=args.momentum, weight_decay=args.weight_decay,
                       batch=args.batch, iterations=args.iters)
    log.info("training %s on %d examples: %s", spec.name, len(x), config.as_dict())
    state, _ = train_sgd(spec, init_state(spec, args.seed), x, y, config, seed=args.seed,
                         log_every=max(1, args.iters // 20))
    save_state(spec, state, args.output)
    if test is not None:
        log.info("test accuracy %.4f", accuracy(spec, state, *test))


def cmd_extract(args) -> None:
    from sketchrec.augment import resolve_plan
    from sketchrec.evaluation import extract_features, load_network
    from sketchrec.featfile import write_features
    from sketchrec.net import DEFAULT_TAP
    from sketchrec.seeding import SUBSET_STREAM, mix_seed
    from sketchrec.sketch_io import load_corpus, select_subset

    spec, state = load_network(args.net, args.weights)
    layer = args.layer or DEFAULT_TAP[args.net]
    spec.layer(layer)
    plan = None if args.plan == "none" else resolve_plan(args.plan)
    corpus = load_corpus(args.input, args.working_resolution)
    if args.per_category is not None:
        corpus = select_subset(corpus, args.per_category, mix_seed(args.seed, SUBSET_STREAM))
    table = extract_features(corpus, plan, spec, state, layer, threads=args.threads)
    write_features(table, args.output)
    log.info("wrote %d feature records of dimension %d to %s", len(table), table.dim, args.output)


def cmd_train_svm(args) -> None:
    from sketchrec.featfile import read_features
    from sketchrec.svm import save_model, train_ovr

    table = read_features(args.input)
    model = train_ovr(table.values, table.labels(), C=args.c, tol=args.tol, max_sweeps=args.max_sweeps,
                      seed=args.seed, classes=table.categories, threads=args.threads)
    save_model(model, args.output)
    log.info("trained %d-class model on %d records; converged: %s", len(model.classes), len(table),
             all(model.converged))


def cmd_evaluate(args) -> None:
    from sketchrec.evaluation import ExperimentConfig, run_experiment, write_report
    from sketchrec.featfile import read_features

    config = ExperimentConfig.from_json(Path(args.config).read_text())
    if args.seed is not None:
        config.seed = args.seed
    log.info("master seed: %d", config.seed)
    log.info("experiment config: %s", json.dumps(config.to_dict(), sort_keys=True))
    features = args.input or config.features
    table = read_features(features) if features else None
    report = run_experiment(config, threads=args.threads, table=table)
    csv_path, json_path = write_report(report, args.report)
    for t, m in report.means.items():
        log.info("t=%d mean precision %.4f", t, m)
    log.info("report written to %s and %s", csv_path, json_path)


def cmd_heatmap(args) -> None:
    from sketchrec.augment import dilate
    from sketchrec.evaluation import load_network
    from sketchrec.heatmap import compute_heatmap, render
    from sketchrec.sketch_io import decode_pgm, preprocess

    spec, state = load_network(args.net, args.weights)
    layer = args.layer or {"lenet-modified": "conv2", "imagenet-shape": "conv5"}[args.net]
    raster = dilate(preprocess(decode_pgm(Path(args.input).read_bytes()), args.working_resolution))
    atomic_write_bytes(Path(args.output), render(compute_heatmap(spec, state, raster, layer), args.mode))


COMMANDS = {
    "augment": cmd_augment,
    "train-cnn": cmd_train_cnn,
    "extract": cmd_extract,
    "train-svm": cmd_train_svm,
    "evaluate": cmd_evaluate,
    "heatmap": cmd_heatmap,
}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_help(sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    if getattr(args, "threads", 1) < 1:
        print("sketchrec: error: --threads must be >= 1", file=sys.stderr)
        return 1
    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    _log_config(args)
    try:
        COMMANDS[args.command](args)
    except (SketchRecError, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
