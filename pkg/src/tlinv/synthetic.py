"""Deterministic synthetic image corpora for desk-scale experiments.

Two 10-class families with a deliberate domain gap:

- ``stroke_digits`` -- thin-stroke digit glyphs (seven-segment geometry with
  per-sample jitter), standing in for handwritten-digit data;
- ``texture_shapes`` -- filled/textured silhouettes (disks, bars, checker
  patches), standing in for garment-like data.

Generation is a pure function of (n_per_class, image_size, seed), so
corpora can be regenerated anywhere and shipped as IDX files.
"""

from __future__ import annotations

import numpy as np

from .dataset import ImageDataset

# seven-segment endpoints in [-1, 1]^2, y growing downward
_SEG = {
    "A": ((-0.55, -1.0), (0.55, -1.0)),
    "B": ((0.55, -1.0), (0.55, 0.0)),
    "C": ((0.55, 0.0), (0.55, 1.0)),
    "D": ((-0.55, 1.0), (0.55, 1.0)),
    "E": ((-0.55, 0.0), (-0.55, 1.0)),
    "F": ((-0.55, -1.0), (-0.55, 0.0)),
    "G": ((-0.55, 0.0), (0.55, 0.0)),
}

_DIGIT_SEGMENTS = {
    0: "ABCDEF",
    1: "BC",
    2: "ABGED",
    3: "ABGCD",
    4: "FGBC",
    5: "AFGCD",
    6: "AFGECD",
    7: "ABC",
    8: "ABCDEFG",
    9: "ABCDFG",
}


def _segment_distance(px, py, a, b):
    ax, ay = a
    bx, by = b
    vx, vy = bx - ax, by - ay
    norm = vx * vx + vy * vy
    t = np.clip(((px - ax) * vx + (py - ay) * vy) / norm, 0.0, 1.0)
    dx = px - (ax + t * vx)
    dy = py - (ay + t * vy)
    return np.sqrt(dx * dx + dy * dy)


def _render_strokes(segments, size, rng):
    scale = rng.uniform(0.30, 0.38) * size / 2
    angle = np.deg2rad(rng.uniform(-12, 12))
    cx = size / 2 + rng.uniform(-2.2, 2.2)
    cy = size / 2 + rng.uniform(-2.2, 2.2)
    width = rng.uniform(0.055, 0.085) * size
    aa = 0.7

    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    cos, sin = np.cos(-angle), np.sin(-angle)
    ux = ((xs - cx) * cos - (ys - cy) * sin) / scale
    uy = ((xs - cx) * sin + (ys - cy) * cos) / scale

    img = np.zeros((size, size))
    for name in segments:
        a, b = _SEG[name]
        a = (a[0] + rng.normal(0, 0.045), a[1] + rng.normal(0, 0.045))
        b = (b[0] + rng.normal(0, 0.045), b[1] + rng.normal(0, 0.045))
        dist = _segment_distance(ux, uy, a, b) * scale
        stroke = np.clip((width / 2 + aa - dist) / aa, 0.0, 1.0)
        img = np.maximum(img, stroke)
    return img


def make_stroke_digits(n_per_class: int, image_size: int = 32, seed: int = 0) -> ImageDataset:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5D161]))
    images, labels = [], []
    for digit in range(10):
        for _ in range(n_per_class):
            img = _render_strokes(_DIGIT_SEGMENTS[digit], image_size, rng)
            img *= rng.uniform(0.8, 1.0)
            img += rng.normal(0, 0.02, img.shape)
            images.append(np.clip(img, 0.0, 1.0))
            labels.append(digit)
    order = rng.permutation(len(images))
    return ImageDataset(
        images=np.stack(images)[order][:, None],
        labels=np.array(labels)[order],
        num_classes=10,
        class_names=[str(d) for d in range(10)],
    )


def _rot_coords(size, rng, max_angle=15.0, max_shift=2.0):
    angle = np.deg2rad(rng.uniform(-max_angle, max_angle))
    cx = size / 2 + rng.uniform(-max_shift, max_shift)
    cy = size / 2 + rng.uniform(-max_shift, max_shift)
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    cos, sin = np.cos(-angle), np.sin(-angle)
    ux = (xs - cx) * cos - (ys - cy) * sin
    uy = (xs - cx) * sin + (ys - cy) * cos
    return ux, uy


def _soft(mask_dist, aa=0.8):
    return np.clip((aa - mask_dist) / (2 * aa) + 0.5, 0.0, 1.0)


def _render_shape(class_id, size, rng):
    ux, uy = _rot_coords(size, rng)
    r = rng.uniform(0.30, 0.40) * size
    rad = np.sqrt(ux * ux + uy * uy)
    box = np.maximum(np.abs(ux), np.abs(uy))
    if class_id == 0:  # filled disk
        img = _soft(rad - r)
    elif class_id == 1:  # ring
        img = _soft(np.abs(rad - r) - 0.28 * r)
    elif class_id == 2:  # filled square
        img = _soft(box - r)
    elif class_id == 3:  # square outline
        img = _soft(np.abs(box - r) - 0.26 * r)
    elif class_id == 4:  # filled triangle
        img = _soft(np.maximum(uy - 0.8 * r, np.abs(ux) * 1.35 - (0.8 * r - uy) * 0.9))
    elif class_id == 5:  # diamond
        img = _soft(np.abs(ux) + np.abs(uy) - 1.2 * r)
    elif class_id == 6:  # plus sign
        bar = 0.34 * r
        img = np.maximum(
            _soft(np.maximum(np.abs(ux) - bar, np.abs(uy) - r)),
            _soft(np.maximum(np.abs(uy) - bar, np.abs(ux) - r)),
        )
    elif class_id == 7:  # horizontal bars in a square window
        period = rng.uniform(0.42, 0.52) * r
        bars = _soft(np.abs(((uy + size) % period) - period / 2) - period / 4, aa=0.6)
        img = bars * _soft(box - r)
    elif class_id == 8:  # vertical bars
        period = rng.uniform(0.42, 0.52) * r
        bars = _soft(np.abs(((ux + size) % period) - period / 2) - period / 4, aa=0.6)
        img = bars * _soft(box - r)
    else:  # checker patch
        period = rng.uniform(0.55, 0.7) * r
        cells = (np.floor((ux + size) / period) + np.floor((uy + size) / period)) % 2
        img = cells * _soft(box - r)
    return img


def make_texture_shapes(n_per_class: int, image_size: int = 32, seed: int = 0) -> ImageDataset:
    names = [
        "disk", "ring", "square", "frame", "triangle",
        "diamond", "plus", "hbars", "vbars", "checker",
    ]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7E45]))
    images, labels = [], []
    for class_id in range(10):
        for _ in range(n_per_class):
            img = _render_shape(class_id, image_size, rng)
            img *= rng.uniform(0.8, 1.0)
            img += rng.normal(0, 0.02, img.shape)
            images.append(np.clip(img, 0.0, 1.0))
            labels.append(class_id)
    order = rng.permutation(len(images))
    return ImageDataset(
        images=np.stack(images)[order][:, None],
        labels=np.array(labels)[order],
        num_classes=10,
        class_names=names,
    )


GENERATORS = {
    "stroke_digits": make_stroke_digits,
    "texture_shapes": make_texture_shapes,
}


def make_corpus(name: str, n_per_class: int, image_size: int = 32, seed: int = 0) -> ImageDataset:
    if name not in GENERATORS:
        raise ValueError(f"unknown synthetic corpus {name!r}; have {sorted(GENERATORS)}")
    return GENERATORS[name](n_per_class, image_size=image_size, seed=seed)
