"""Labeled image collections and the partition/subsample operations.

Datasets are immutable once constructed: images (N, C, H, W) float in
[0, 1], integer labels below ``num_classes``. All derived datasets share
no mutable state with their source, so they are safe to pass across
threads and to hash for manifests.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InsufficientDataError


@dataclass(frozen=True)
class ImageDataset:
    images: np.ndarray
    labels: np.ndarray
    num_classes: int
    class_names: list[str] | None = None

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)
        if images.ndim != 4:
            raise DataError(f"images must be (N, C, H, W), got shape {images.shape}")
        if len(images) != len(labels):
            raise DataError(f"{len(images)} images but {len(labels)} labels")
        if len(images) < 1:
            raise DataError("dataset is empty")
        if self.num_classes < 1:
            raise DataError("num_classes must be positive")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise DataError(
                f"labels must lie in [0, {self.num_classes}), found "
                f"[{labels.min()}, {labels.max()}]"
            )
        if images.min() < 0.0 or images.max() > 1.0:
            raise DataError("pixel values must lie in [0, 1]")
        if self.class_names is not None and len(self.class_names) != self.num_classes:
            raise DataError("class_names length must equal num_classes")
        images.setflags(write=False)
        labels.setflags(write=False)

    def __len__(self) -> int:
        return len(self.images)

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(self.images.shape[1:])

    def subset(self, indices) -> "ImageDataset":
        return ImageDataset(
            images=self.images[indices].copy(),
            labels=self.labels[indices].copy(),
            num_classes=self.num_classes,
            class_names=self.class_names,
        )

    def class_indices(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.images).tobytes())
        digest.update(np.ascontiguousarray(self.labels).tobytes())
        return digest.hexdigest()[:16]

    @staticmethod
    def concatenate(parts: list["ImageDataset"]) -> "ImageDataset":
        if not parts:
            raise DataError("nothing to concatenate")
        num_classes = parts[0].num_classes
        if any(p.num_classes != num_classes for p in parts):
            raise DataError("parts disagree on num_classes")
        return ImageDataset(
            images=np.concatenate([p.images for p in parts]),
            labels=np.concatenate([p.labels for p in parts]),
            num_classes=num_classes,
            class_names=parts[0].class_names,
        )


@dataclass(frozen=True)
class ClassPartition:
    teacher_class_ids: frozenset = field(default_factory=frozenset)
    student_class_ids: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        teacher = frozenset(self.teacher_class_ids)
        student = frozenset(self.student_class_ids)
        object.__setattr__(self, "teacher_class_ids", teacher)
        object.__setattr__(self, "student_class_ids", student)
        if not teacher or not student:
            raise DataError("both class sets must be non-empty")
        if teacher & student:
            raise DataError(f"class sets overlap: {sorted(teacher & student)}")


def _relabeled_subset(ds: ImageDataset, class_ids) -> ImageDataset:
    ordered = sorted(class_ids)
    mapping = {orig: new for new, orig in enumerate(ordered)}
    mask = np.isin(ds.labels, ordered)
    labels = np.array([mapping[c] for c in ds.labels[mask]], dtype=np.int64)
    names = None
    if ds.class_names is not None:
        names = [ds.class_names[c] for c in ordered]
    return ImageDataset(
        images=ds.images[mask].copy(), labels=labels, num_classes=len(ordered), class_names=names
    )


def partition_classes(ds: ImageDataset, part: ClassPartition):
    """Split by class membership into (teacher part, student part).

    Class ids are relabeled to contiguous [0, k) by ascending original id.
    """
    known = set(range(ds.num_classes))
    for side, ids in (("teacher", part.teacher_class_ids), ("student", part.student_class_ids)):
        missing = set(ids) - known
        if missing:
            raise DataError(f"{side} set references unknown classes {sorted(missing)}")
    return _relabeled_subset(ds, part.teacher_class_ids), _relabeled_subset(
        ds, part.student_class_ids
    )


def restrict_classes(ds: ImageDataset, class_ids) -> ImageDataset:
    """Keep only the given classes, relabeled contiguously by ascending id."""
    ids = sorted(set(class_ids))
    if not ids:
        raise DataError("class restriction is empty")
    missing = set(ids) - set(range(ds.num_classes))
    if missing:
        raise DataError(f"unknown classes {sorted(missing)}")
    return _relabeled_subset(ds, ids)


def subsample_per_class(ds: ImageDataset, k: int, seed: int) -> ImageDataset:
    """Exactly k samples from every class, chosen by the seed alone."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    chosen = []
    for c in range(ds.num_classes):
        idx = ds.class_indices(c)
        if len(idx) < k:
            raise InsufficientDataError(
                f"class {c} has {len(idx)} samples, needs {k}"
            )
        pick = rng.choice(len(idx), size=k, replace=False)
        chosen.append(np.sort(idx[pick]))
    return ds.subset(np.concatenate(chosen))


def train_test_split(ds: ImageDataset, train_fraction: float, seed: int):
    """Stratified deterministic split into (train, test)."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in range(ds.num_classes):
        idx = ds.class_indices(c)
        perm = idx[rng.permutation(len(idx))]
        cut = int(train_fraction * len(idx))
        train_idx.append(np.sort(perm[:cut]))
        test_idx.append(np.sort(perm[cut:]))
    train_idx = np.concatenate(train_idx)
    test_idx = np.concatenate(test_idx)
    if len(train_idx) == 0 or len(test_idx) == 0:
        raise DataError("split produced an empty side; dataset too small for the fraction")
    return ds.subset(train_idx), ds.subset(test_idx)


def resize_bilinear(images: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Exact separable bilinear resize of an (N, C, H, W) stack.

    Sample centers align as in common image libraries:
    src = (dst + 0.5) * scale - 0.5, clamped to the edges, so values remain
    convex combinations of inputs (a [0, 1] range is preserved).
    """
    n, c, h, w = images.shape
    th, tw = size
    if (h, w) == (th, tw):
        return images.copy()

    def weights(src: int, dst: int) -> np.ndarray:
        pos = np.clip((np.arange(dst) + 0.5) * (src / dst) - 0.5, 0, src - 1)
        lo = np.floor(pos).astype(int)
        hi = np.minimum(lo + 1, src - 1)
        frac = pos - lo
        mat = np.zeros((dst, src))
        mat[np.arange(dst), lo] += 1 - frac
        mat[np.arange(dst), hi] += frac
        return mat

    rows = weights(h, th)
    cols = weights(w, tw)
    out = np.einsum("ij,ncjk->ncik", rows, images, optimize=True)
    return np.einsum("kj,ncij->ncik", cols, out, optimize=True)
