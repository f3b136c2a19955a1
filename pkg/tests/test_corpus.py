import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sketchrec.errors import ContractError, LoadError
from sketchrec.sketch_io import Corpus, Sketch, encode_pgm, load_corpus, preprocess, select_subset
from sketchrec.synthetic import write_corpus


def write_pgm(path, raster):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_pgm(raster))


def test_two_categories_three_files(tmp_path, rng):
    for cat in ("zebra", "apple"):
        for name in ("c", "a", "b"):
            write_pgm(tmp_path / cat / f"{name}.pgm", rng.random((20, 20)))
    corpus = load_corpus(tmp_path, 16)
    assert corpus.categories == ["apple", "zebra"]
    assert corpus.counts() == [3, 3]
    assert [s.id for s in corpus.sketches["apple"]] == ["apple/a", "apple/b", "apple/c"]
    assert all(s.raster.shape == (16, 16) and s.provenance == "original" for s in corpus)


def test_empty_category_is_named(tmp_path):
    write_pgm(tmp_path / "full" / "x.pgm", np.ones((4, 4)))
    (tmp_path / "hollow").mkdir()
    with pytest.raises(LoadError, match="hollow"):
        load_corpus(tmp_path, 8)


def test_undecodable_file_is_named(tmp_path):
    (tmp_path / "cat").mkdir()
    (tmp_path / "cat" / "broken.pgm").write_bytes(b"P5\n4 4\n255\n")
    with pytest.raises(LoadError, match="broken.pgm"):
        load_corpus(tmp_path, 8)


def test_load_order_ignores_creation_order(tmp_path, rng):
    rasters = {n: rng.random((8, 8)) for n in ("3", "1", "2")}
    for name in ("3", "1", "2"):
        write_pgm(tmp_path / "b" / f"{name}.pgm", rasters[name])
        write_pgm(tmp_path / "a" / f"{name}.pgm", rasters[name])
    os.utime(tmp_path / "b" / "1.pgm", (0, 0))
    corpus = load_corpus(tmp_path, 8)
    assert [s.id for s in corpus] == ["a/1", "a/2", "a/3", "b/1", "b/2", "b/3"]


def test_synthetic_mini_corpus_counts(tmp_path):
    write_corpus(tmp_path, n_categories=160, per_category=56, size=16)
    corpus = load_corpus(tmp_path, 16)
    assert len(corpus) == 8960
    assert corpus.counts() == [56] * 160


def test_all_white_gives_no_ink():
    assert not preprocess(np.ones((40, 30)), 16).any()


def test_single_pixel_survives_nearest_upscale_round_trip():
    img = np.ones((16, 16))
    img[5, 9] = 0.0
    big = np.repeat(np.repeat(img, 2, axis=0), 2, axis=1)
    out = preprocess(big, 16)
    expected = np.zeros((16, 16))
    expected[5, 9] = 1
    np.testing.assert_array_equal(out, expected)


def test_disk_area_after_downscale():
    yy, xx = np.mgrid[0:512, 0:512] + 0.5
    radius = 150.0
    disk = np.where((yy - 256) ** 2 + (xx - 256) ** 2 <= radius ** 2, 0.0, 1.0)
    out = preprocess(disk, 256)
    analytic = np.pi * (radius / 2) ** 2
    assert abs(out.sum() - analytic) / analytic < 0.02


@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=20),
                  elements=st.floats(0, 1)), st.integers(1, 24))
def test_preprocess_output_is_binary(raster, res):
    out = preprocess(raster, res)
    assert out.shape == (res, res)
    assert set(np.unique(out)) <= {0.0, 1.0}


def _corpus(sizes):
    cats = [f"c{i}" for i in range(len(sizes))]
    return Corpus(cats, {c: [Sketch(f"{c}/{j}", c, np.zeros((2, 2))) for j in range(n)] for c, n in zip(cats, sizes)})


def test_full_selection_keeps_everything():
    corpus = _corpus([4, 4])
    sub = select_subset(corpus, 4, seed=9)
    assert [s.id for s in sub] == [s.id for s in corpus]


@given(st.integers(0, 2**64 - 1), st.integers(1, 5))
def test_selection_is_deterministic_with_equal_counts(seed, k):
    corpus = _corpus([5, 7, 9])
    a, b = select_subset(corpus, k, seed), select_subset(corpus, k, seed)
    assert [s.id for s in a] == [s.id for s in b]
    assert a.counts() == [k, k, k]


def test_selection_is_uniform():
    corpus = _corpus([10])
    hits = np.zeros(10)
    for seed in range(1000):
        for s in select_subset(corpus, 5, seed):
            hits[int(s.id.split("/")[1])] += 1
    assert np.all(np.abs(hits - 500) <= 50)


def test_undersized_category_is_named():
    with pytest.raises(ContractError, match="c1"):
        select_subset(_corpus([6, 3]), 5, 0)


def test_provenance_only_moves_forward():
    s = Sketch("x", "c", np.zeros((3, 3)))
    d = s.derive(id="x#dil", raster=s.raster, provenance="dilated")
    a = d.derive(id="x#aug00", raster=s.raster, provenance="augmented:0")
    with pytest.raises(ContractError):
        a.derive(id="y", raster=s.raster, provenance="dilated")
    with pytest.raises(ContractError):
        Sketch("x", "c", np.zeros((3, 3)), provenance="rotated")
