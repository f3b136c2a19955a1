"""Sketch and corpus data model, preprocessing, and subset selection."""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from sketchrec.errors import ContractError, FormatError, LoadError
from sketchrec.sketch_io.pnm import decode_pgm, encode_pgm
from sketchrec.sketch_io.resample import resize

DEFAULT_RESOLUTION = 256
_PROVENANCE = re.compile(r"^(original|dilated|augmented:\d+)$")
_STAGE = {"original": 0, "dilated": 1, "augmented": 2}


def provenance_stage(provenance: str) -> int:
    if not _PROVENANCE.match(provenance):
        raise ContractError(f"invalid provenance tag {provenance!r}")
    return _STAGE[provenance.split(":")[0]]


@dataclass(frozen=True)
class Sketch:
    """A binary ink raster (ink = 1) with its label and lineage.

    ``strokes`` is carried through untouched; nothing in the package reads it.
    """

    id: str
    category: str
    raster: np.ndarray
    provenance: str = "original"
    strokes: Optional[tuple] = None

    def __post_init__(self):
        provenance_stage(self.provenance)
        if self.raster.ndim != 2 or min(self.raster.shape) < 1:
            raise ContractError(f"sketch {self.id}: raster must be 2-D and nonempty")

    def derive(self, *, id: str, raster: np.ndarray, provenance: str) -> "Sketch":
        if provenance_stage(provenance) <= provenance_stage(self.provenance):
            raise ContractError(f"provenance cannot go from {self.provenance} to {provenance}")
        return replace(self, id=id, raster=raster, provenance=provenance)


@dataclass
class Corpus:
    categories: list[str]
    sketches: dict[str, list[Sketch]]
    working_resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        unknown = set(self.sketches) - set(self.categories)
        if unknown:
            raise ContractError(f"sketches for undeclared categories: {sorted(unknown)}")
        for cat, items in self.sketches.items():
            for s in items:
                if s.category != cat:
                    raise ContractError(f"sketch {s.id} filed under {cat} but labelled {s.category}")

    def counts(self) -> list[int]:
        return [len(self.sketches.get(c, [])) for c in self.categories]

    def __len__(self):
        return sum(self.counts())

    def __iter__(self):
        for c in self.categories:
            yield from self.sketches.get(c, [])


def binarize(raster: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    return (np.asarray(raster) >= threshold).astype(np.float32)


def preprocess(raster: np.ndarray, working_resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """Turn a dark-on-light gray raster into a binary ink raster at working resolution.

    Dark pixels (< 0.5) become ink. Resizing happens on the ink map before the
    final threshold so thin strokes survive area averaging when possible.
    """
    raster = np.asarray(raster, dtype=np.float64)
    if raster.size == 0:
        raise ContractError("cannot preprocess an empty raster")
    ink = (raster < 0.5).astype(np.float64)
    ink = resize(ink, (working_resolution, working_resolution))
    return binarize(ink)


def ink_to_pgm(raster: np.ndarray) -> bytes:
    """Write an ink raster back out in the dark-on-light file convention."""
    return encode_pgm(1.0 - np.asarray(raster, dtype=np.float64))


def load_corpus(root, working_resolution: int = DEFAULT_RESOLUTION) -> Corpus:
    """Load ``<root>/<category>/<file>.pgm`` into a corpus.

    Categories are ordered lexicographically and files by name, so the result
    does not depend on directory enumeration order.
    """
    root = Path(root)
    if not root.is_dir():
        raise LoadError(f"corpus root {root} is not a directory")
    categories = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not categories:
        raise LoadError(f"corpus root {root} has no category directories")
    sketches: dict[str, list[Sketch]] = {}
    for cat in categories:
        files = sorted(p for p in (root / cat).iterdir() if p.suffix.lower() == ".pgm")
        if not files:
            raise LoadError(f"category {cat!r} ({root / cat}) contains no PGM files")
        items = []
        for path in files:
            try:
                raster = decode_pgm(path.read_bytes())
            except FormatError as exc:
                raise LoadError(f"cannot decode {path}: {exc}") from exc
            items.append(Sketch(
                id=f"{cat}/{path.stem}",
                category=cat,
                raster=preprocess(raster, working_resolution),
            ))
        sketches[cat] = items
    return Corpus(categories, sketches, working_resolution)


def select_subset(corpus: Corpus, per_category: int, seed: int) -> Corpus:
    """Draw ``per_category`` sketches per category uniformly without replacement.

    Chosen sketches keep their original relative order.
    """
    short = [c for c in corpus.categories if len(corpus.sketches[c]) < per_category]
    if short:
        raise ContractError(
            f"category {short[0]!r} has {len(corpus.sketches[short[0]])} sketches, "
            f"fewer than the requested {per_category}"
        )
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    chosen = {}
    for cat in corpus.categories:
        items = corpus.sketches[cat]
        idx = np.sort(rng.choice(len(items), size=per_category, replace=False))
        chosen[cat] = [items[i] for i in idx]
    return Corpus(list(corpus.categories), chosen, corpus.working_resolution)
