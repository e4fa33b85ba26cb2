"""Dataset invariants, loaders, partition/subsample/split operations."""

from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tlinv.dataset import (
    ClassPartition,
    ImageDataset,
    partition_classes,
    resize_bilinear,
    subsample_per_class,
    train_test_split,
)
from tlinv.errors import DataError, FormatError, InsufficientDataError
from tlinv.idx import (
    load_idx,
    load_image_folder,
    save_dataset_idx,
    write_idx_images,
    write_idx_labels,
)
from tlinv.synthetic import make_stroke_digits, make_texture_shapes


def small_ds(n=12, num_classes=3, seed=0):
    rng = np.random.default_rng(seed)
    return ImageDataset(
        images=rng.uniform(size=(n, 1, 4, 4)),
        labels=np.arange(n) % num_classes,
        num_classes=num_classes,
    )


# -- invariants ---------------------------------------------------------------


def test_dataset_rejects_out_of_range_pixels():
    with pytest.raises(DataError):
        ImageDataset(images=np.full((2, 1, 2, 2), 1.5), labels=np.zeros(2), num_classes=1)


def test_dataset_rejects_bad_labels():
    with pytest.raises(DataError):
        ImageDataset(images=np.zeros((2, 1, 2, 2)), labels=np.array([0, 5]), num_classes=3)


def test_dataset_rejects_count_mismatch():
    with pytest.raises(DataError):
        ImageDataset(images=np.zeros((3, 1, 2, 2)), labels=np.zeros(2), num_classes=1)


def test_dataset_rejects_empty():
    with pytest.raises(DataError):
        ImageDataset(images=np.zeros((0, 1, 2, 2)), labels=np.zeros(0), num_classes=1)


def test_dataset_images_are_immutable():
    ds = small_ds()
    with pytest.raises(ValueError):
        ds.images[0, 0, 0, 0] = 0.5


# -- IDX ---------------------------------------------------------------------


def test_idx_roundtrip(tmp_path):
    ds = make_stroke_digits(3, image_size=16, seed=0)
    save_dataset_idx(ds, tmp_path / "im.idx", tmp_path / "lb.idx")
    back = load_idx(tmp_path / "im.idx", tmp_path / "lb.idx", resize_to=(16, 16))
    assert len(back) == len(ds)
    assert back.num_classes == 10
    np.testing.assert_array_equal(back.labels, ds.labels)
    # 8-bit quantization error only
    assert np.abs(back.images - ds.images).max() <= (0.5 / 255) + 1e-12


def test_idx_resize_output_shape(tmp_path):
    rng = np.random.default_rng(0)
    write_idx_images(tmp_path / "im.idx", rng.integers(0, 256, (5, 28, 28), dtype=np.uint8))
    write_idx_labels(tmp_path / "lb.idx", np.arange(5, dtype=np.uint8))
    ds = load_idx(tmp_path / "im.idx", tmp_path / "lb.idx", resize_to=(32, 32))
    assert ds.images.shape == (5, 1, 32, 32)
    assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0


def test_idx_single_image(tmp_path):
    write_idx_images(tmp_path / "im.idx", np.zeros((1, 8, 8), dtype=np.uint8))
    write_idx_labels(tmp_path / "lb.idx", np.zeros(1, dtype=np.uint8))
    ds = load_idx(tmp_path / "im.idx", tmp_path / "lb.idx", resize_to=(8, 8))
    assert len(ds) == 1


def test_idx_bad_magic(tmp_path):
    (tmp_path / "im.idx").write_bytes(b"\x00\x00\x09\x03" + b"\x00" * 16)
    write_idx_labels(tmp_path / "lb.idx", np.zeros(1, dtype=np.uint8))
    with pytest.raises(FormatError):
        load_idx(tmp_path / "im.idx", tmp_path / "lb.idx", resize_to=(8, 8))


def test_idx_count_mismatch(tmp_path):
    write_idx_images(tmp_path / "im.idx", np.zeros((6, 4, 4), dtype=np.uint8))
    write_idx_labels(tmp_path / "lb.idx", np.zeros(5, dtype=np.uint8))
    with pytest.raises(DataError):
        load_idx(tmp_path / "im.idx", tmp_path / "lb.idx", resize_to=(4, 4))


def test_idx_truncated_payload(tmp_path):
    import struct

    with open(tmp_path / "im.idx", "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, 2, 4, 4))
        fh.write(b"\x00" * 20)  # 32 expected
    write_idx_labels(tmp_path / "lb.idx", np.zeros(2, dtype=np.uint8))
    with pytest.raises(FormatError):
        load_idx(tmp_path / "im.idx", tmp_path / "lb.idx", resize_to=(4, 4))


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(1, 6),
    side=st.integers(2, 10),
    target=st.integers(2, 12),
    seed=st.integers(0, 10_000),
)
def test_idx_loader_emits_unit_range(tmp_path_factory, n, side, target, seed):
    tmp = tmp_path_factory.mktemp("idx")
    rng = np.random.default_rng(seed)
    write_idx_images(tmp / "im.idx", rng.integers(0, 256, (n, side, side), dtype=np.uint8))
    write_idx_labels(tmp / "lb.idx", rng.integers(0, 10, n, dtype=np.uint8))
    ds = load_idx(tmp / "im.idx", tmp / "lb.idx", resize_to=(target, target))
    assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0


# -- image folder --------------------------------------------------------------


def _write_folder(root, classes, per_class, size=10, color=False):
    from PIL import Image

    rng = np.random.default_rng(0)
    for name in classes:
        d = root / name
        d.mkdir(parents=True)
        for i in range(per_class):
            if color:
                arr = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
            else:
                arr = rng.integers(0, 256, (size, size), dtype=np.uint8)
            Image.fromarray(arr).save(d / f"{i}.png")


def test_image_folder_basic(tmp_path):
    _write_folder(tmp_path, ["cat", "dog"], 3)
    ds = load_image_folder(tmp_path, resize_to=(8, 8))
    assert len(ds) == 6
    assert ds.num_classes == 2
    assert ds.class_names == ["cat", "dog"]
    assert ds.image_shape == (1, 8, 8)


def test_image_folder_color(tmp_path):
    _write_folder(tmp_path, ["a", "b"], 2, color=True)
    ds = load_image_folder(tmp_path, resize_to=(8, 8))
    assert ds.image_shape == (3, 8, 8)


def test_image_folder_empty_class(tmp_path):
    _write_folder(tmp_path, ["a"], 2)
    (tmp_path / "empty").mkdir()
    with pytest.raises(DataError) as err:
        load_image_folder(tmp_path, resize_to=(8, 8))
    assert "empty" in str(err.value)


def test_image_folder_deterministic_labels(tmp_path):
    _write_folder(tmp_path, ["z_last", "a_first"], 2)
    a = load_image_folder(tmp_path, resize_to=(8, 8))
    b = load_image_folder(tmp_path, resize_to=(8, 8))
    np.testing.assert_array_equal(a.labels, b.labels)
    assert a.class_names == ["a_first", "z_last"]


# -- partition ----------------------------------------------------------------


def test_partition_roundtrip_preserves_images():
    ds = make_stroke_digits(4, image_size=8, seed=1)
    left, right = partition_classes(
        ds, ClassPartition(frozenset(range(5)), frozenset(range(5, 10)))
    )
    assert len(left) + len(right) == len(ds)
    assert left.num_classes == right.num_classes == 5
    merged = np.sort(
        np.concatenate([left.images, right.images]).reshape(len(ds), -1), axis=0
    )
    original = np.sort(ds.images.reshape(len(ds), -1), axis=0)
    np.testing.assert_array_equal(merged, original)


def test_partition_disjointness_enforced():
    with pytest.raises(DataError):
        ClassPartition(frozenset({0}), frozenset({0}))


def test_partition_relabels_to_zero():
    ds = small_ds(num_classes=3)
    left, right = partition_classes(ds, ClassPartition(frozenset({1}), frozenset({2})))
    assert set(left.labels) == {0}
    assert set(right.labels) == {0}
    assert left.num_classes == right.num_classes == 1


def test_partition_unknown_class():
    ds = small_ds(num_classes=3)
    with pytest.raises(DataError):
        partition_classes(ds, ClassPartition(frozenset({0}), frozenset({7})))


# -- subsample / split ----------------------------------------------------------


def test_subsample_counts_and_determinism():
    ds = make_stroke_digits(30, image_size=8, seed=2)
    a = subsample_per_class(ds, 10, seed=5)
    b = subsample_per_class(ds, 10, seed=5)
    c = subsample_per_class(ds, 10, seed=6)
    assert len(a) == 100
    assert all(len(a.class_indices(i)) == 10 for i in range(10))
    np.testing.assert_array_equal(a.images, b.images)
    assert not np.array_equal(a.images, c.images)


def test_subsample_insufficient():
    ds = small_ds(n=6, num_classes=3)  # 2 per class
    with pytest.raises(InsufficientDataError) as err:
        subsample_per_class(ds, 3, seed=0)
    assert "class 0" in str(err.value)


def test_split_sizes_and_determinism():
    ds = make_stroke_digits(10, image_size=8, seed=3)
    train, test = train_test_split(ds, 0.8, seed=1)
    assert len(train) == 80 and len(test) == 20
    train2, test2 = train_test_split(ds, 0.8, seed=1)
    np.testing.assert_array_equal(train.images, train2.images)
    np.testing.assert_array_equal(test.labels, test2.labels)


def test_split_is_stratified():
    ds = make_stroke_digits(10, image_size=8, seed=3)
    train, test = train_test_split(ds, 0.5, seed=2)
    for c in range(10):
        assert len(train.class_indices(c)) == 5
        assert len(test.class_indices(c)) == 5


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2, 1.7])
def test_split_fraction_out_of_range(fraction):
    with pytest.raises(ValueError):
        train_test_split(small_ds(), fraction, seed=0)


# -- resize / synthetic ----------------------------------------------------------


def test_resize_identity():
    x = np.random.default_rng(0).uniform(size=(2, 1, 8, 8))
    np.testing.assert_array_equal(resize_bilinear(x, (8, 8)), x)


def test_resize_constant_preserved():
    x = np.full((1, 1, 7, 7), 0.25)
    out = resize_bilinear(x, (13, 13))
    np.testing.assert_allclose(out, 0.25, atol=1e-12)


def test_resize_stays_in_range():
    rng = np.random.default_rng(1)
    x = rng.uniform(size=(3, 2, 9, 11))
    out = resize_bilinear(x, (17, 5))
    assert out.shape == (3, 2, 17, 5)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_synthetic_determinism_and_balance():
    a = make_texture_shapes(5, image_size=16, seed=9)
    b = make_texture_shapes(5, image_size=16, seed=9)
    np.testing.assert_array_equal(a.images, b.images)
    assert all(len(a.class_indices(c)) == 5 for c in range(10))
    assert a.images.min() >= 0.0 and a.images.max() <= 1.0


def test_synthetic_domains_differ():
    digits = make_stroke_digits(20, image_size=16, seed=0)
    shapes = make_texture_shapes(20, image_size=16, seed=0)
    # filled shapes carry much more ink than stroke digits
    assert shapes.images.mean() > 2 * digits.images.mean()


def test_real_idx_corpus_if_available():
    # point TLINV_MNIST_DIR at the classic IDX files to run this check
    import os

    root = os.environ.get("TLINV_MNIST_DIR")
    if not root:
        pytest.skip("TLINV_MNIST_DIR not set; real IDX corpus unavailable")
    ds = load_idx(
        Path(root) / "train-images-idx3-ubyte",
        Path(root) / "train-labels-idx1-ubyte",
        resize_to=(32, 32),
    )
    assert len(ds) == 60000
    assert ds.num_classes == 10
    assert ds.image_shape == (1, 32, 32)
