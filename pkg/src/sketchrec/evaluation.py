"""Shuffle / training-ladder evaluation protocol.

For every shuffle the originals of each category are permuted once; each
ladder point ``t`` puts the first ``t`` originals on the training side. The
classifier trains on the augmented variants of those originals (optionally
plus their dilated versions) and is scored on the dilated versions of the
remaining originals only.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from sketchrec._fileutil import atomic_write_text
from sketchrec.augment import AugmentationPlan, dilate_sketch, expand, resolve_plan
from sketchrec.errors import ContractError, LoadError
from sketchrec.featfile import FeatureTable
from sketchrec.net.features import prepare_batch, tap_batch
from sketchrec.net.network import NetworkSpec, NetworkState
from sketchrec.net.presets import PRESETS
from sketchrec.net.serialize import decode_weights, state_from_weights
from sketchrec.seeding import SUBSET_STREAM, mix_seed
from sketchrec.sketch_io.corpus import Corpus, load_corpus, select_subset
from sketchrec.svm import train_ovr

log = logging.getLogger(__name__)

DEFAULT_LADDER = (8, 16, 24, 32, 40, 48)


@dataclass
class SVMConfig:
    C: float = 1.0
    tol: float = 1e-3
    max_sweeps: int = 1000


@dataclass
class ExperimentConfig:
    corpus_root: str = ""
    per_category: int = 56
    plan: str = "paper30"
    network: str = "lenet-modified"
    weights: str = ""
    layer: str = "ip1"
    ladder: tuple = DEFAULT_LADDER
    shuffles: int = 3
    svm: SVMConfig = field(default_factory=SVMConfig)
    seed: int = 0
    include_dilated_original_in_train: bool = False
    working_resolution: int = 256
    features: str = ""

    def __post_init__(self):
        self.ladder = tuple(int(t) for t in self.ladder)
        if isinstance(self.svm, dict):
            self.svm = SVMConfig(**self.svm)
        if self.shuffles < 1:
            raise ContractError(f"shuffles must be >= 1, got {self.shuffles}")
        if not self.ladder:
            raise ContractError("ladder is empty")
        bad = [t for t in self.ladder if not 1 <= t < self.per_category]
        if bad:
            raise ContractError(f"ladder values {bad} must lie in [1, per_category={self.per_category})")

    @property
    def augmented(self) -> bool:
        return self.plan != "none"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ladder"] = list(self.ladder)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ContractError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class ReportRow:
    ladder: int
    shuffle: int
    precision: float
    train_count: int
    test_count: int


@dataclass
class EvaluationReport:
    rows: list
    config: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def means(self) -> dict:
        by_t: dict = {}
        for r in self.rows:
            by_t.setdefault(r.ladder, []).append(r.precision)
        return {t: sum(v) / len(v) for t, v in by_t.items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["ladder", "shuffle", "precision", "train_count", "test_count"])
        for r in self.rows:
            writer.writerow([r.ladder, r.shuffle, repr(float(r.precision)), r.train_count, r.test_count])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "EvaluationReport":
        rows = [
            ReportRow(int(d["ladder"]), int(d["shuffle"]), float(d["precision"]),
                      int(d["train_count"]), int(d["test_count"]))
            for d in csv.DictReader(io.StringIO(text))
        ]
        return cls(rows)

    def to_json(self) -> str:
        """Deterministic JSON twin of the CSV (timings are kept out of it)."""
        doc = {
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
            "mean_precision": {str(t): m for t, m in self.means.items()},
        }
        return json.dumps(doc, indent=1, sort_keys=True)


def write_report(report: EvaluationReport, path) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.json``; timings go to ``<stem>.timings.json``."""
    path = Path(path)
    csv_path = path if path.suffix == ".csv" else path.with_suffix(".csv")
    json_path = csv_path.with_suffix(".json")
    atomic_write_text(csv_path, report.to_csv())
    atomic_write_text(json_path, report.to_json())
    atomic_write_text(csv_path.with_suffix(".timings.json"), json.dumps(report.timings, indent=1))
    return csv_path, json_path


# --- protocol pieces ------------------------------------------------------

def _groups(source) -> dict:
    if isinstance(source, Corpus):
        return {c: [s.id for s in source.sketches[c]] for c in source.categories}
    if isinstance(source, FeatureTable):
        return source.originals_by_category()
    return {c: list(ids) for c, ids in source.items()}


def make_splits(source, t: int, shuffle_seed: int) -> tuple[list, list]:
    """Partition original sketch ids per category: ``t`` for training, the rest for testing.

    ``source`` is a Corpus, a FeatureTable, or a ``{category: [ids]}`` mapping.
    """
    groups = _groups(source)
    rng = np.random.default_rng(shuffle_seed & 0xFFFFFFFFFFFFFFFF)
    train, test = [], []
    for cat, ids in groups.items():
        if not 0 < t < len(ids):
            raise ContractError(f"train count {t} out of range for category {cat!r} with {len(ids)} sketches")
        perm = rng.permutation(len(ids))
        train += [ids[i] for i in perm[:t]]
        test += [ids[i] for i in perm[t:]]
    return train, test


def compute_precision(predictions, truth) -> float:
    """Fraction of exact matches (pooled top-1 accuracy)."""
    predictions, truth = list(predictions), list(truth)
    if len(predictions) != len(truth):
        raise ContractError(f"{len(predictions)} predictions vs {len(truth)} ground-truth labels")
    if not truth:
        raise ContractError("cannot score an empty test set")
    return sum(p == t for p, t in zip(predictions, truth)) / len(truth)


def extract_features(corpus: Corpus, plan: Optional[AugmentationPlan], spec: NetworkSpec,
                     state: NetworkState, layer: str, threads: int = 1) -> FeatureTable:
    """Dilate every sketch, expand it by ``plan`` and tap ``layer`` for all resulting rasters.

    Rows come out grouped per original: its dilated version first, then the
    variants in plan order.
    """
    spec.layer(layer)
    categories = list(corpus.categories)
    cat_index = {c: i for i, c in enumerate(categories)}

    def one(sketch):
        dil = dilate_sketch(sketch)
        items = [dil] + (expand(dil, plan) if plan is not None else [])
        inputs = prepare_batch([s.raster for s in items], spec.input_shape)
        values = tap_batch(spec, state, inputs, layer)
        return FeatureTable(
            categories, values, np.full(len(items), cat_index[sketch.category], dtype=np.int64),
            [s.id for s in items], [sketch.id] * len(items), [s.provenance for s in items],
            spec.name, layer,
        )

    sketches = list(corpus)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(one, sketches))
    else:
        parts = [one(s) for s in sketches]
    return FeatureTable.concat(parts)


def expected_counts(t: int, per_category: int, n_categories: int, plan_size: int,
                    include_originals: bool) -> tuple[int, int]:
    train = t * plan_size * n_categories + (t * n_categories if include_originals else 0)
    return train, (per_category - t) * n_categories


def _train_kinds(config: ExperimentConfig) -> tuple:
    kinds = ("augmented",) if config.augmented else ()
    if config.include_dilated_original_in_train or not config.augmented:
        kinds += ("dilated",)
    return kinds


def check_table(table: FeatureTable, config: ExperimentConfig) -> dict:
    """Originals per category, after checking each category holds ``per_category`` of them."""
    groups = table.originals_by_category()
    short = [c for c, ids in groups.items() if len(ids) != config.per_category]
    if short:
        raise ContractError(
            f"category {short[0]!r} has {len(groups[short[0]])} originals, config expects {config.per_category}"
        )
    return groups


def split_rows(table: FeatureTable, groups: dict, config: ExperimentConfig, t: int,
               shuffle_seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Feature-table rows for training and testing at ladder point ``t``.

    Training rows descend from the first ``t`` originals of each category;
    test rows are the dilated versions of the rest, never their variants.
    """
    train_ids, test_ids = make_splits(groups, t, shuffle_seed)
    return table.select(set(train_ids), _train_kinds(config)), table.select(set(test_ids), ("dilated",))


def run_protocol(table: FeatureTable, config: ExperimentConfig, threads: int = 1) -> EvaluationReport:
    """Shuffle/ladder evaluation on a precomputed feature table."""
    groups = check_table(table, config)
    rows = []
    svm_time = 0.0
    for s in range(config.shuffles):
        shuffle_seed = mix_seed(config.seed, s)
        for t in config.ladder:
            train_idx, test_idx = split_rows(table, groups, config, t, shuffle_seed)
            start = time.perf_counter()
            model = train_ovr(
                table.values[train_idx], table.labels(train_idx),
                C=config.svm.C, tol=config.svm.tol, max_sweeps=config.svm.max_sweeps,
                seed=mix_seed(shuffle_seed, t), classes=table.categories, threads=threads,
            )
            svm_time += time.perf_counter() - start
            precision = compute_precision(model.predict_many(table.values[test_idx]), table.labels(test_idx))
            if not all(model.converged):
                log.warning("shuffle %d, t=%d: %d of %d SVM subproblems hit max_sweeps",
                            s, t, model.converged.count(False), len(model.converged))
            log.info("shuffle %d t=%d: precision %.4f (%d train / %d test)",
                     s, t, precision, len(train_idx), len(test_idx))
            rows.append(ReportRow(t, s, precision, len(train_idx), len(test_idx)))
    return EvaluationReport(rows, config.to_dict(), {"svm_seconds": svm_time})


def load_network(network: str, weights_path) -> tuple[NetworkSpec, NetworkState]:
    """Build the named preset sized to the classifier head found in the weight file."""
    if network not in PRESETS:
        raise ContractError(f"unknown network {network!r}; choose from {', '.join(PRESETS)}")
    path = Path(weights_path)
    if not path.is_file():
        raise LoadError(f"weights file {path} not found")
    weights = decode_weights(path.read_bytes())
    head = list(weights.values())[-1][1]
    spec = PRESETS[network](len(head))
    return spec, state_from_weights(spec, weights)


def run_experiment(config: ExperimentConfig, threads: int = 1, table: Optional[FeatureTable] = None,
                   network: Optional[tuple] = None) -> EvaluationReport:
    """Full run: load, subset, extract features (unless ``table`` is given), evaluate.

    ``network`` may pass an in-memory ``(spec, state)`` instead of ``config.weights``.
    """
    timings = {}
    if table is None:
        plan = resolve_plan(config.plan) if config.augmented else None
        if network is None:
            if not config.weights:
                raise ContractError("config names no network weights")
            network = load_network(config.network, config.weights)
        spec, state = network
        spec.layer(config.layer)
        start = time.perf_counter()
        corpus = load_corpus(config.corpus_root, config.working_resolution)
        corpus = select_subset(corpus, config.per_category, mix_seed(config.seed, SUBSET_STREAM))
        timings["load_seconds"] = time.perf_counter() - start
        start = time.perf_counter()
        table = extract_features(corpus, plan, spec, state, config.layer, threads)
        timings["extract_seconds"] = time.perf_counter() - start
    report = run_protocol(table, config, threads)
    report.timings.update(timings)
    return report
