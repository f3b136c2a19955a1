"""Tables of tapped features and their on-disk form.

Binary part (little-endian)::

    b"SKFV"  u32 count  u32 dim
    per record: u32 label_id  f32 values[dim]

A JSON sidecar (``<file>.json``) maps label ids to category names and keeps
per-record ids, parent (original sketch) ids and provenance tags.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sketchrec._fileutil import atomic_write_bytes, atomic_write_text
from sketchrec.errors import FormatError

MAGIC = b"SKFV"


@dataclass
class FeatureTable:
    categories: list
    values: np.ndarray  # (N, D) float32
    label_ids: np.ndarray  # (N,) index into categories
    ids: list
    parents: list
    provenance: list
    network: str = ""
    layer: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.values)
        if not (len(self.label_ids) == len(self.ids) == len(self.parents) == len(self.provenance) == n):
            raise FormatError("feature table columns have different lengths")

    def __len__(self):
        return len(self.values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def labels(self, idx=None) -> list:
        ids = self.label_ids if idx is None else self.label_ids[idx]
        return [self.categories[i] for i in ids]

    def originals_by_category(self) -> dict:
        """Original sketch ids per category, in table order."""
        groups = {c: [] for c in self.categories}
        seen = set()
        for lab, parent in zip(self.label_ids, self.parents):
            if parent not in seen:
                seen.add(parent)
                groups[self.categories[lab]].append(parent)
        return groups

    def select(self, parents: set, kinds: tuple) -> np.ndarray:
        """Row indices whose parent is in ``parents`` and whose provenance stage is in ``kinds``."""
        return np.array([
            i for i, (p, prov) in enumerate(zip(self.parents, self.provenance))
            if p in parents and prov.split(":")[0] in kinds
        ], dtype=np.int64)

    @staticmethod
    def concat(tables: list["FeatureTable"]) -> "FeatureTable":
        first = tables[0]
        return FeatureTable(
            first.categories,
            np.concatenate([t.values for t in tables]),
            np.concatenate([t.label_ids for t in tables]),
            [i for t in tables for i in t.ids],
            [p for t in tables for p in t.parents],
            [p for t in tables for p in t.provenance],
            first.network,
            first.layer,
        )


def encode_features(table: FeatureTable) -> bytes:
    n, d = table.values.shape
    rec = np.zeros(n, dtype=[("label", "<u4"), ("values", "<f4", (d,))])
    rec["label"] = table.label_ids
    rec["values"] = table.values
    return MAGIC + struct.pack("<II", n, d) + rec.tobytes()


def sidecar_json(table: FeatureTable) -> str:
    doc = {
        "labels": list(table.categories),
        "network": table.network,
        "layer": table.layer,
        "records": [
            {"id": i, "parent": p, "provenance": prov}
            for i, p, prov in zip(table.ids, table.parents, table.provenance)
        ],
    }
    doc.update(table.extra)
    return json.dumps(doc, indent=0, sort_keys=True)


def write_features(table: FeatureTable, path) -> None:
    path = Path(path)
    atomic_write_bytes(path, encode_features(table))
    atomic_write_text(sidecar_path(path), sidecar_json(table))


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def decode_features(data: bytes) -> tuple[np.ndarray, np.ndarray]:
    if data[:4] != MAGIC:
        raise FormatError("not a feature file (bad magic)")
    if len(data) < 12:
        raise FormatError("truncated feature file header")
    n, d = struct.unpack("<II", data[4:12])
    dtype = np.dtype([("label", "<u4"), ("values", "<f4", (d,))])
    if len(data) != 12 + n * dtype.itemsize:
        raise FormatError(f"feature file holds {len(data) - 12} payload bytes, expected {n * dtype.itemsize}")
    rec = np.frombuffer(data, dtype=dtype, count=n, offset=12)
    return rec["label"].astype(np.int64), rec["values"].astype(np.float32).reshape(n, d)


def read_features(path) -> FeatureTable:
    path = Path(path)
    labels, values = decode_features(path.read_bytes())
    side = sidecar_path(path)
    if side.exists():
        doc = json.loads(side.read_text())
        records = doc["records"]
        if len(records) != len(labels):
            raise FormatError(f"sidecar lists {len(records)} records, feature file holds {len(labels)}")
        ids = [r["id"] for r in records]
        parents = [r["parent"] for r in records]
        provenance = [r["provenance"] for r in records]
        categories = doc["labels"]
        network, layer = doc.get("network", ""), doc.get("layer", "")
    else:
        ids = [str(i) for i in range(len(labels))]
        parents, provenance = list(ids), ["dilated"] * len(ids)
        categories = [str(i) for i in range(int(labels.max()) + 1)] if len(labels) else []
        network = layer = ""
    return FeatureTable(categories, values, labels, ids, parents, provenance, network, layer)
