"""Small end-to-end run on synthetic glyphs, driven through the CLI stages.

A LeNet-modified net is trained on one sample stream of the glyph families;
a disjoint stream of 56 sketches per category is then expanded, tapped and
evaluated with and without augmentation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from sketchrec.cli import main as cli_main
from sketchrec.errors import SketchRecError
from sketchrec.evaluation import DEFAULT_LADDER, EvaluationReport
from sketchrec.seeding import mix_seed
from sketchrec.synthetic import write_corpus

TRAIN_STREAM = 7_777


@dataclass
class MiniConfig:
    categories: int = 8
    per_category: int = 56
    train_per_category: int = 100
    size: int = 256
    jitter: float = 1.0
    cnn_iters: int = 300
    shuffles: int = 3
    ladder: tuple = DEFAULT_LADDER
    plans: tuple = ("paper30", "none")
    seed: int = 0


@dataclass
class MiniResult:
    workdir: Path
    features: Path
    weights: Path
    reports: dict = field(default_factory=dict)  # plan -> csv path

    def report(self, plan: str) -> EvaluationReport:
        return EvaluationReport.from_csv(self.reports[plan].read_text())


def _run(argv: list) -> None:
    code = cli_main([str(a) for a in argv])
    if code != 0:
        raise SketchRecError(f"stage {argv[0]} exited with status {code}")


def run_mini_experiment(workdir, config: MiniConfig = MiniConfig(), threads: int = 1) -> MiniResult:
    work = Path(workdir)
    work.mkdir(parents=True, exist_ok=True)
    train_root = write_corpus(work / "train_glyphs", config.categories, config.train_per_category,
                              config.size, mix_seed(config.seed, TRAIN_STREAM), config.jitter)
    eval_root = write_corpus(work / "glyphs", config.categories, config.per_category,
                             config.size, config.seed, config.jitter)
    weights = work / "lenet.sknw"
    features = work / "features.skfv"
    _run(["train-cnn", "--input", train_root, "--output", weights, "--iters", config.cnn_iters,
          "--seed", config.seed, "--working-resolution", config.size, "--threads", threads])
    _run(["extract", "--input", eval_root, "--output", features, "--weights", weights,
          "--layer", "ip1", "--plan", "paper30", "--seed", config.seed,
          "--working-resolution", config.size, "--threads", threads])
    result = MiniResult(work, features, weights)
    for plan in config.plans:
        cfg = {
            "corpus_root": str(eval_root),
            "per_category": config.per_category,
            "plan": plan,
            "weights": str(weights),
            "ladder": list(config.ladder),
            "shuffles": config.shuffles,
            "seed": config.seed,
            "working_resolution": config.size,
        }
        cfg_path = work / f"config_{plan}.json"
        cfg_path.write_text(json.dumps(cfg, indent=1, sort_keys=True))
        report = work / f"report_{plan}.csv"
        _run(["evaluate", "--config", cfg_path, "--report", report, "--input", features, "--threads", threads])
        result.reports[plan] = report
    return result
