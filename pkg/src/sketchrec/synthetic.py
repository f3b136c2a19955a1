"""Synthetic glyph corpora standing in for freehand sketch categories.

Each category is a fixed "family" of strokes (lines, arcs, ellipses, zigzags)
drawn from a category-specific random stream; individual sketches perturb the
family with a random similarity transform and per-point wobble, then render
dark strokes on a light background.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from sketchrec.seeding import mix_seed
from sketchrec.sketch_io.corpus import Corpus, Sketch, ink_to_pgm, preprocess


def _arc(center, radii, start, stop, tilt, n=24):
    t = np.linspace(start, stop, n)
    pts = np.stack([radii[0] * np.cos(t), radii[1] * np.sin(t)], axis=1)
    c, s = np.cos(tilt), np.sin(tilt)
    return pts @ np.array([[c, s], [-s, c]]) + center


def glyph_family(category: int, seed: int = 0) -> list[np.ndarray]:
    """Polylines in [-1, 1]^2 defining one category's shape."""
    rng = np.random.default_rng(mix_seed(seed, category))
    strokes = []
    for _ in range(rng.integers(2, 5)):
        kind = rng.integers(0, 4)
        center = rng.uniform(-0.45, 0.45, size=2)
        if kind == 0:
            a, b = rng.uniform(-0.85, 0.85, size=(2, 2))
            strokes.append(np.linspace(a, b, 12))
        elif kind == 1:
            radii = rng.uniform(0.15, 0.5, size=2)
            start = rng.uniform(0, 2 * np.pi)
            strokes.append(_arc(center, radii, start, start + rng.uniform(np.pi / 2, 2 * np.pi),
                                rng.uniform(0, np.pi)))
        elif kind == 2:
            radii = rng.uniform(0.1, 0.4, size=2)
            strokes.append(_arc(center, radii, 0, 2 * np.pi, rng.uniform(0, np.pi), n=32))
        else:
            k = rng.integers(3, 6)
            pts = rng.uniform(-0.7, 0.7, size=(k, 2))
            strokes.append(np.concatenate([np.linspace(pts[i], pts[i + 1], 6) for i in range(k - 1)]))
    return strokes


def _draw_segment(canvas, p, q, radius):
    h, w = canvas.shape
    lo = np.floor(np.minimum(p, q) - radius - 1).astype(int)
    hi = np.ceil(np.maximum(p, q) + radius + 1).astype(int)
    x0, y0 = max(lo[0], 0), max(lo[1], 0)
    x1, y1 = min(hi[0], w - 1), min(hi[1], h - 1)
    if x0 > x1 or y0 > y1:
        return
    yy, xx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    d = q - p
    length2 = float(d @ d)
    if length2 == 0:
        t = np.zeros_like(xx, dtype=np.float64)
    else:
        t = np.clip(((xx - p[0]) * d[0] + (yy - p[1]) * d[1]) / length2, 0, 1)
    dist2 = (xx - p[0] - t * d[0]) ** 2 + (yy - p[1] - t * d[1]) ** 2
    canvas[y0:y1 + 1, x0:x1 + 1] |= dist2 <= radius * radius


def _draw_segments_dense(canvas, p, q, radius):
    """All segments against every pixel at once; cheaper than per-segment boxes on small canvases."""
    h, w = canvas.shape
    yy, xx = np.mgrid[0:h, 0:w]
    xx = xx.reshape(-1, 1)
    yy = yy.reshape(-1, 1)
    d = q - p
    length2 = (d * d).sum(axis=1)
    safe = np.where(length2 == 0, 1.0, length2)
    t = ((xx - p[:, 0]) * d[:, 0] + (yy - p[:, 1]) * d[:, 1]) / safe
    t = np.where(length2 == 0, 0.0, np.clip(t, 0, 1))
    dist2 = (xx - p[:, 0] - t * d[:, 0]) ** 2 + (yy - p[:, 1] - t * d[:, 1]) ** 2
    canvas |= (dist2 <= radius * radius).any(axis=1).reshape(h, w)


def render_glyph(strokes, size: int, rng: np.random.Generator, jitter: float = 1.0,
                 stroke_width: float | None = None) -> np.ndarray:
    """Render one perturbed instance; returns a dark-on-light raster in [0, 1]."""
    angle = rng.normal(0, 0.12 * jitter)
    scale = 1.0 + rng.normal(0, 0.07 * jitter)
    shift = rng.normal(0, 0.05 * jitter, size=2)
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, s], [-s, c]]) * scale
    canvas = np.zeros((size, size), dtype=bool)
    width = stroke_width if stroke_width is not None else max(1.0, size / 128)
    half = (size - 1) / 2.0
    starts, ends = [], []
    for stroke in strokes:
        pts = stroke @ rot + shift + rng.normal(0, 0.015 * jitter, size=stroke.shape)
        pix = pts * half * 0.9 + half
        starts.append(pix[:-1])
        ends.append(pix[1:])
    if size <= 64:
        _draw_segments_dense(canvas, np.concatenate(starts), np.concatenate(ends), width / 2)
    else:
        for p, q in zip(np.concatenate(starts), np.concatenate(ends)):
            _draw_segment(canvas, p, q, width / 2)
    return np.where(canvas, 0.0, 1.0)


def category_names(n: int) -> list[str]:
    return [f"glyph{i:03d}" for i in range(n)]


def generate_rasters(n_categories: int, per_category: int, size: int = 256, seed: int = 0,
                     jitter: float = 1.0) -> dict:
    """``{category: [dark-on-light raster, ...]}``; ``seed`` picks the sample stream, not the families."""
    out = {}
    for k, name in enumerate(category_names(n_categories)):
        family = glyph_family(k)
        rng = np.random.default_rng(mix_seed(seed, 10_000 + k))
        out[name] = [render_glyph(family, size, rng, jitter) for _ in range(per_category)]
    return out


def synthetic_corpus(n_categories: int, per_category: int, size: int = 256, seed: int = 0,
                     working_resolution: int | None = None, jitter: float = 1.0) -> Corpus:
    """Build a preprocessed corpus in memory (same result as writing and loading it)."""
    working_resolution = working_resolution or size
    rasters = generate_rasters(n_categories, per_category, size, seed, jitter)
    sketches = {
        cat: [Sketch(f"{cat}/{i:04d}", cat, preprocess(r, working_resolution)) for i, r in enumerate(items)]
        for cat, items in rasters.items()
    }
    return Corpus(list(rasters), sketches, working_resolution)


def write_corpus(root, n_categories: int, per_category: int, size: int = 256, seed: int = 0,
                 jitter: float = 1.0) -> Path:
    """Write ``<root>/<category>/<index>.pgm`` files."""
    root = Path(root)
    for cat, items in generate_rasters(n_categories, per_category, size, seed, jitter).items():
        (root / cat).mkdir(parents=True, exist_ok=True)
        for i, r in enumerate(items):
            (root / cat / f"{i:04d}.pgm").write_bytes(ink_to_pgm(r < 0.5))
    return root
