"""Datasets: synthetic corpora, IDX files, partitioning, and subsampling.

Run from the repository root:  python demos/01_datasets_and_loaders.py
Outputs land in demos/output/.
"""

from pathlib import Path

import numpy as np

from tlinv import (
    ClassPartition,
    load_idx,
    make_stroke_digits,
    make_texture_shapes,
    partition_classes,
    subsample_per_class,
    train_test_split,
)
from tlinv.evaluate import reconstruction_grid
from tlinv.idx import save_dataset_idx

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# Two deterministic 10-class corpora with a built-in domain gap: thin-stroke
# digit glyphs vs filled/textured silhouettes.
digits = make_stroke_digits(30, image_size=32, seed=0)
shapes = make_texture_shapes(30, image_size=32, seed=0)
print(f"digits: {len(digits)} images {digits.image_shape}, classes {digits.class_names}")
print(f"shapes: {len(shapes)} images {shapes.image_shape}, classes {shapes.class_names}")

first_digit = [digits.images[digits.class_indices(c)[0]] for c in range(10)]
first_shape = [shapes.images[shapes.class_indices(c)[0]] for c in range(10)]
reconstruction_grid(np.stack(first_digit), np.stack(first_shape), OUT / "corpora.png")
print(f"wrote one sample per class -> {OUT / 'corpora.png'} (top: digits, bottom: shapes)")

# The corpora round-trip through genuine IDX files (same binary layout as the
# classic handwritten-digit distribution), so the IDX loader is the normal
# entry point for experiments.
save_dataset_idx(digits, OUT / "digits-images.idx", OUT / "digits-labels.idx")
reloaded = load_idx(OUT / "digits-images.idx", OUT / "digits-labels.idx", resize_to=(32, 32))
quantization = np.abs(reloaded.images - digits.images).max()
print(f"IDX round trip: N={len(reloaded)}, max 8-bit quantization error {quantization:.5f}")

# Class partitioning relabels each side to contiguous ids - the usual way to
# carve one corpus into disjoint teacher/student tasks.
teacher_part, student_part = partition_classes(
    digits, ClassPartition(frozenset(range(5)), frozenset(range(5, 10)))
)
print(
    f"partition: teacher split {len(teacher_part)} samples over "
    f"{teacher_part.num_classes} classes, student split {len(student_part)} over "
    f"{student_part.num_classes}"
)

# Stratified splitting and per-class subsampling are both pure functions of
# their seed.
train, test = train_test_split(digits, 0.8, seed=1)
few = subsample_per_class(test, 3, seed=2)
again = subsample_per_class(test, 3, seed=2)
assert np.array_equal(few.images, again.images)
print(f"split: {len(train)} train / {len(test)} test; 3-shot subsample is seed-stable")
