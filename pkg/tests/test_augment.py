import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy import ndimage

from sketchrec.augment import (
    AugmentationPlan,
    Compose,
    Mirror,
    Rotate,
    Shift,
    Zoom,
    apply_transform,
    dilate,
    dilate_sketch,
    expand,
    plan_from_json,
    plan_to_json,
    preset_paper30,
    resolve_plan,
)
from sketchrec.errors import ContractError
from sketchrec.sketch_io import Sketch

binary_rasters = hnp.arrays(
    np.float32, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=24), elements=st.sampled_from([0.0, 1.0])
)
transforms = st.one_of(
    st.builds(Mirror, st.sampled_from(["vertical", "horizontal"])),
    st.builds(Rotate, st.floats(-180, 180)),
    st.builds(Shift, st.integers(-30, 30), st.integers(-30, 30)),
    st.builds(Zoom, st.floats(-50, 50)),
)


def brute_dilate(raster, size=5):
    h, w = raster.shape
    r = size // 2
    out = np.zeros_like(raster)
    for i in range(h):
        for j in range(w):
            out[i, j] = raster[max(0, i - r):i + r + 1, max(0, j - r):j + r + 1].max()
    return out


def test_dilate_empty():
    assert not dilate(np.zeros((28, 28))).any()


def test_dilate_single_pixel():
    x = np.zeros((28, 28))
    x[10, 10] = 1
    expected = np.zeros((28, 28))
    expected[8:13, 8:13] = 1
    np.testing.assert_array_equal(dilate(x), expected)


def test_dilate_matches_brute_force(rng):
    x = (rng.random((64, 64)) < 0.05).astype(float)
    np.testing.assert_array_equal(dilate(x), brute_dilate(x))


@given(binary_rasters)
def test_dilate_matches_brute_force_everywhere(x):
    np.testing.assert_array_equal(dilate(x), brute_dilate(x))


@given(binary_rasters)
def test_dilate_is_extensive(x):
    assert np.all(dilate(x) >= x)


@given(
    hnp.arrays(np.float32, (48, 48), elements=st.sampled_from([0.0, 1.0])),
    st.integers(-15, 15),
    st.integers(-15, 15),
)
def test_dilate_commutes_with_shift_on_interior(x, dx, dy):
    a = dilate(apply_transform(x, Shift(dx, dy)))
    b = apply_transform(dilate(x), Shift(dx, dy))
    np.testing.assert_array_equal(a[17:-17, 17:-17], b[17:-17, 17:-17])


def test_dilate_rejects_gray():
    with pytest.raises(ContractError, match="binary"):
        dilate(np.full((4, 4), 0.5))


@given(binary_rasters, transforms)
def test_transforms_preserve_shape_and_binarity(x, t):
    out = apply_transform(x, t)
    assert out.shape == x.shape
    assert set(np.unique(out)) <= {0.0, 1.0}


@given(binary_rasters, st.sampled_from(["vertical", "horizontal"]))
def test_mirror_is_involution(x, axis):
    np.testing.assert_array_equal(apply_transform(apply_transform(x, Mirror(axis)), Mirror(axis)), x)


@given(hnp.arrays(np.float32, (40, 40), elements=st.sampled_from([0.0, 1.0])), st.integers(-15, 15), st.integers(-15, 15))
def test_shift_inverse_on_interior(x, dx, dy):
    back = apply_transform(apply_transform(x, Shift(dx, dy)), Shift(-dx, -dy))
    np.testing.assert_array_equal(back[15:-15, 15:-15], x[15:-15, 15:-15])


def test_shift_right_by_five(rng):
    x = (rng.random((30, 30)) < 0.3).astype(float)
    out = apply_transform(x, Shift(5, 0))
    np.testing.assert_array_equal(out[:, 5:], x[:, :-5])
    assert not out[:, :5].any()


def test_shift_down_moves_rows():
    x = np.zeros((10, 10))
    x[2, 3] = 1
    out = apply_transform(x, Shift(0, 4))
    assert out[6, 3] == 1 and out.sum() == 1


def bar(size=256):
    x = np.zeros((size, size))
    x[size // 2 - 4:size // 2 + 4, 40:size - 40] = 1
    return x


def test_rotation_matches_independent_resampler():
    x = bar()
    ours = apply_transform(x, Rotate(15))
    ref = ndimage.rotate(x, 15, reshape=False, order=1, mode="constant", cval=0.0) >= 0.5
    assert np.mean(ours != ref) < 0.01


def test_rotation_is_counter_clockwise_as_displayed():
    x = np.zeros((21, 21))
    x[10, 15:19] = 1  # right of center
    out = apply_transform(x, Rotate(90))
    rows, cols = np.nonzero(out)
    assert np.all(rows < 10) and np.all(np.abs(cols - 10) <= 1)


def test_zoom_scales_ink_area():
    yy, xx = np.mgrid[0:256, 0:256]
    disk = (((yy - 127.5) ** 2 + (xx - 127.5) ** 2) <= 60 ** 2).astype(float)
    for p in (-7, -3, 3, 7):
        ratio = apply_transform(disk, Zoom(p)).sum() / disk.sum()
        assert ratio == pytest.approx((1 + p / 100) ** 2, rel=0.02)


def test_compose_applies_left_to_right(rng):
    x = (rng.random((32, 32)) < 0.2).astype(float)
    composed = apply_transform(x, Compose((Shift(3, 0), Mirror("vertical"))))
    manual = apply_transform(apply_transform(x, Shift(3, 0)), Mirror("vertical"))
    np.testing.assert_array_equal(composed, manual)
    assert not np.array_equal(composed, apply_transform(apply_transform(x, Mirror("vertical")), Shift(3, 0)))


def test_transform_validation():
    with pytest.raises(ContractError):
        Rotate(200)
    with pytest.raises(ContractError):
        Compose(())
    with pytest.raises(ContractError):
        Mirror("diagonal")


def test_paper30_membership():
    plan = preset_paper30()
    assert len(plan) == 30
    assert len(set(plan.transforms)) == 30
    for a in (5, -5, 15, -15):
        assert Rotate(a) in plan.transforms
        assert Compose((Mirror("vertical"), Rotate(a))) in plan.transforms
    assert Mirror("vertical") in plan.transforms and Mirror("horizontal") in plan.transforms
    assert {Zoom(p) for p in (-7, -3, 3, 7)} <= set(plan.transforms)
    assert sum(isinstance(t, Shift) for t in plan.transforms) == 16


def test_plan_rejects_duplicates_and_empty():
    with pytest.raises(ContractError, match="duplicate"):
        AugmentationPlan("dup", (Mirror(), Mirror()))
    with pytest.raises(ContractError):
        AugmentationPlan("empty", ())


def test_plan_json_round_trip(tmp_path):
    plan = preset_paper30()
    again = plan_from_json(plan_to_json(plan))
    assert again.transforms == plan.transforms
    path = tmp_path / "mine.json"
    path.write_text(json.dumps([{"kind": "shift", "params": {"dx": 1, "dy": 2}}]))
    assert resolve_plan(str(path)).transforms == (Shift(1, 2),)
    with pytest.raises(ContractError):
        resolve_plan("no-such-plan")


def _dilated(i=0, size=64, rng=None):
    rng = rng or np.random.default_rng(i)
    raster = (rng.random((size, size)) < 0.02).astype(np.float32)
    return dilate_sketch(Sketch(f"cat/{i}", "cat", raster))


def test_expand_paper30_yields_thirty():
    variants = expand(_dilated(), preset_paper30())
    assert len(variants) == 30
    assert [v.provenance for v in variants] == [f"augmented:{i}" for i in range(30)]
    assert all(v.category == "cat" and v.id.startswith("cat/0#dil#aug") for v in variants)


def test_expand_56_sketches_gives_1680_unique_ids():
    plan = preset_paper30()
    ids = [v.id for i in range(56) for v in expand(_dilated(i, size=32), plan)]
    assert len(ids) == 1680 and len(set(ids)) == 1680


def test_mirror_of_symmetric_sketch_is_unchanged():
    x = np.zeros((16, 16), dtype=np.float32)
    x[4:12, 3] = x[4:12, 12] = 1
    d = dilate_sketch(Sketch("s", "c", x))
    (out,) = expand(d, AugmentationPlan("m", (Mirror("vertical"),)))
    np.testing.assert_array_equal(out.raster, d.raster)


def test_expand_requires_dilated():
    s = Sketch("s", "c", np.zeros((8, 8)))
    with pytest.raises(ContractError, match="dilated"):
        expand(s, preset_paper30())
