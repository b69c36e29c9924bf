import numpy as np
import pytest
from PIL import Image

from landcnn.augment import (augment_to_count, hflip, resize, resize_pixels,
                             rotate, shear, vflip)
from landcnn.data import (DataError, Dataset, LabeledImage, LabelEncoder,
                          SplitSpec, batches, load_dataset, stratified_split)
from landcnn.synth import synth_dataset
from landcnn.tensor import Tensor


def _write_corpus(root, classes, per_class=3, size=8, seed=0):
    rng = np.random.default_rng(seed)
    for name in classes:
        d = root / name
        d.mkdir(parents=True)
        for i in range(per_class):
            arr = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
            Image.fromarray(arr).save(d / f"img_{i:03d}.png")


# -- loading -------------------------------------------------------------

def test_load_dataset_lexicographic_ids(tmp_path):
    _write_corpus(tmp_path, ["terrace", "desert", "meadow", "farmland"])
    ds = load_dataset(tmp_path)
    assert ds.encoder.classes == ["desert", "farmland", "meadow", "terrace"]
    assert ds.encoder.encode("desert") == 0
    assert ds.encoder.decode(3) == "terrace"
    assert len(ds) == 12


def test_load_dataset_counts(tmp_path):
    _write_corpus(tmp_path, ["a", "b", "c", "d"], per_class=10)
    assert len(load_dataset(tmp_path)) == 40


def test_load_dataset_corrupt_file_names_path(tmp_path):
    _write_corpus(tmp_path, ["a", "b"])
    bad = tmp_path / "a" / "broken.png"
    bad.write_bytes(b"this is not a png")
    with pytest.raises(DataError, match="broken.png"):
        load_dataset(tmp_path)


def test_load_dataset_needs_two_classes(tmp_path):
    _write_corpus(tmp_path, ["only"])
    with pytest.raises(DataError, match="two class"):
        load_dataset(tmp_path)


def test_load_dataset_empty_root(tmp_path):
    with pytest.raises(DataError):
        load_dataset(tmp_path / "missing")


def test_load_dataset_grayscale_broadcasts(tmp_path):
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        Image.fromarray(np.full((6, 6), 128, dtype=np.uint8), mode="L").save(d / "g.png")
    ds = load_dataset(tmp_path)
    item = ds.items[0]
    assert item.pixels.shape == (6, 6, 3)
    assert (item.pixels.data[..., 0] == item.pixels.data[..., 1]).all()
    assert 0.0 <= item.pixels.data.min() <= item.pixels.data.max() <= 1.0


def test_encoder_bijectivity():
    enc = LabelEncoder(["meadow", "desert", "terrace", "farmland"])
    for name in enc.classes:
        assert enc.decode(enc.encode(name)) == name
    for i in range(len(enc)):
        assert enc.encode(enc.decode(i)) == i


# -- resize --------------------------------------------------------------

def test_resize_identity_is_exact():
    rng = np.random.default_rng(1)
    arr = rng.random((16, 16, 3), dtype=np.float32)
    out = resize_pixels(arr, 16, 16)
    assert (out == arr).all()


def test_resize_constant_stays_constant():
    arr = np.full((12, 10, 3), 0.42, dtype=np.float32)
    out = resize_pixels(arr, 7, 9)
    assert np.allclose(out, 0.42, atol=1e-6)


def test_resize_checkerboard_matches_hand_bilinear():
    # 2x2 checkerboard upscaled to 4x4, half-pixel-centered source grid
    board = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=np.float64)
    arr = np.repeat(board[:, :, np.newaxis], 3, axis=2)
    out = resize_pixels(arr, 4, 4)

    def sample(sy, sx):
        sy = min(max(sy, 0.0), 1.0)
        sx = min(max(sx, 0.0), 1.0)
        y0, x0 = int(np.floor(sy)), int(np.floor(sx))
        y1, x1 = min(y0 + 1, 1), min(x0 + 1, 1)
        wy, wx = sy - y0, sx - x0
        top = board[y0, x0] * (1 - wx) + board[y0, x1] * wx
        bot = board[y1, x0] * (1 - wx) + board[y1, x1] * wx
        return top * (1 - wy) + bot * wy

    for i in range(4):
        for j in range(4):
            sy = (i + 0.5) * 0.5 - 0.5
            sx = (j + 0.5) * 0.5 - 0.5
            assert out[i, j, 0] == pytest.approx(sample(sy, sx), abs=1e-12)


def test_resize_keeps_label_and_origin():
    item = LabeledImage(Tensor((8, 8, 3), 0.5), 2, ("original", "x.png"))
    out = resize(item, 4, 4)
    assert out.label_id == 2 and out.origin == ("original", "x.png")
    assert out.pixels.shape == (4, 4, 3)


# -- transforms ----------------------------------------------------------

def test_flips_are_exact_index_reversals():
    rng = np.random.default_rng(2)
    arr = rng.random((5, 7, 3), dtype=np.float32)
    assert (hflip(arr) == arr[:, ::-1]).all()
    assert (vflip(arr) == arr[::-1]).all()


def test_rotate_zero_degrees_is_identity():
    rng = np.random.default_rng(3)
    arr = rng.random((9, 9, 3), dtype=np.float64)
    assert np.allclose(rotate(arr, 0.0), arr, atol=1e-12)


def test_shear_zero_is_identity():
    rng = np.random.default_rng(4)
    arr = rng.random((6, 6, 3), dtype=np.float64)
    assert np.allclose(shear(arr, 0.0), arr, atol=1e-12)


def test_transforms_stay_in_unit_range():
    rng = np.random.default_rng(5)
    arr = rng.random((16, 16, 3), dtype=np.float32)
    for out in (rotate(arr, 17.0), shear(arr, 0.2), hflip(arr), vflip(arr)):
        assert out.min() >= 0.0 and out.max() <= 1.0


# -- augmentation --------------------------------------------------------

def _tiny_ds(counts, side=8, seed=0):
    ds = synth_dataset(max(counts), side, seed)
    groups = ds.class_indices()
    keep = []
    for label_id, count in enumerate(counts):
        keep.extend(groups[label_id][:count])
    return ds.subset(sorted(keep))


def test_augment_reaches_exact_target():
    ds = _tiny_ds([5, 7, 3, 7])
    out = augment_to_count(ds, 7, seed=11)
    assert out.class_counts() == [7, 7, 7, 7]
    assert len(out) == 28


def test_augment_keeps_originals_untouched():
    ds = _tiny_ds([4, 4, 4, 4])
    out = augment_to_count(ds, 6, seed=12)
    for before, after in zip(ds.items, out.items[:len(ds)]):
        assert after is before


def test_augment_origin_points_to_source_in_same_class():
    ds = _tiny_ds([3, 5, 4, 2])
    out = augment_to_count(ds, 6, seed=13)
    for item in out.items[len(ds):]:
        kind, src, descriptor = item.origin
        assert kind == "augmented"
        assert out.items[src].label_id == item.label_id
        assert out.items[src].origin[0] == "original"
        assert descriptor.split(":")[0] in {"rotate", "hflip", "vflip", "shear"}


def test_augment_class_at_target_unchanged():
    ds = _tiny_ds([6, 4, 6, 6])
    out = augment_to_count(ds, 6, seed=14)
    assert out.class_counts() == [6, 6, 6, 6]
    groups = out.class_indices()
    for label_id in (0, 2, 3):
        assert len(groups[label_id]) == 6
        assert all(out.items[i].origin[0] == "original" for i in groups[label_id])


def test_augment_never_downsamples():
    ds = _tiny_ds([8, 4, 4, 4])
    with pytest.raises(DataError, match="down-sample"):
        augment_to_count(ds, 6, seed=15)


def test_augment_deterministic_under_seed():
    ds = _tiny_ds([3, 3, 3, 3])
    a = augment_to_count(ds, 8, seed=42)
    b = augment_to_count(ds, 8, seed=42)
    for x, y in zip(a.items, b.items):
        assert x.label_id == y.label_id and x.origin == y.origin
        assert (x.pixels.data == y.pixels.data).all()


# -- split ---------------------------------------------------------------

def test_split_counts_small_scale():
    ds = _tiny_ds([20, 20, 20, 20])
    train, test, val = stratified_split(ds, SplitSpec(), seed=3)
    assert (len(train), len(test), len(val)) == (48, 24, 8)
    for part, per_class in ((train, 12), (test, 6), (val, 2)):
        assert part.class_counts() == [per_class] * 4


def test_split_thirds_on_three_items():
    ds = _tiny_ds([3, 3, 3, 3])
    train, test, val = stratified_split(ds, SplitSpec(1 / 3, 1 / 3, 1 / 3), seed=0)
    assert train.class_counts() == [1, 1, 1, 1]
    assert test.class_counts() == [1, 1, 1, 1]
    assert val.class_counts() == [1, 1, 1, 1]


def test_split_is_a_partition():
    ds = _tiny_ds([9, 11, 8, 10])
    train, test, val = stratified_split(ds, SplitSpec(), seed=5)
    seen = [id(item) for part in (train, test, val) for item in part.items]
    assert len(seen) == len(ds)
    assert set(seen) == {id(item) for item in ds.items}


def test_split_deterministic_membership():
    ds = _tiny_ds([10, 10, 10, 10])
    first = stratified_split(ds, SplitSpec(), seed=9)
    second = stratified_split(ds, SplitSpec(), seed=9)
    for a, b in zip(first, second):
        assert [id(i) for i in a.items] == [id(i) for i in b.items]


def test_split_empty_bucket_is_an_error():
    ds = _tiny_ds([3, 3, 3, 3])
    with pytest.raises(DataError, match="empty"):
        stratified_split(ds, SplitSpec(), seed=0)  # val gets round(2.7)..3 = 0 items


def test_split_spec_validation():
    with pytest.raises(ValueError):
        SplitSpec(0.5, 0.5, 0.1)
    with pytest.raises(ValueError):
        SplitSpec(0.9, 0.2, -0.1)


# -- batches -------------------------------------------------------------

def _counting_ds(n):
    enc = LabelEncoder(["a", "b"])
    shared = Tensor((2, 2, 3), 0.0)
    items = [LabeledImage(shared, i % 2, ("original", str(i))) for i in range(n)]
    return Dataset(items, enc)


def test_batches_full_corpus_arithmetic():
    ds = _counting_ds(14_000)
    got = batches(ds, 64, shuffle=False)
    assert len(got) == 219
    assert len(got[-1]) == 48
    assert all(len(b) == 64 for b in got[:-1])


def test_batches_order_without_shuffle():
    ds = _counting_ds(10)
    got = batches(ds, 4, shuffle=False)
    flat = [item.origin[1] for b in got for item in b]
    assert flat == [str(i) for i in range(10)]


def test_batches_deterministic_per_seed_and_epoch():
    ds = _counting_ds(50)
    a = batches(ds, 8, shuffle=True, seed=4, epoch=2)
    b = batches(ds, 8, shuffle=True, seed=4, epoch=2)
    assert [[i.origin for i in x] for x in a] == [[i.origin for i in x] for x in b]
    c = batches(ds, 8, shuffle=True, seed=4, epoch=3)
    assert [[i.origin for i in x] for x in a] != [[i.origin for i in x] for x in c]
