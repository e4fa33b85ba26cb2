"""IDX binary format reader/writer and the dataset loaders.

The IDX layout is big-endian: a 4-byte magic whose third byte is the
element type (0x08 = unsigned byte) and whose fourth byte is the number
of dimensions, followed by one 4-byte big-endian size per dimension and
the raw data. Image files carry magic 0x00000803 (3-D), label files
0x00000801 (1-D).
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .dataset import ImageDataset, resize_bilinear
from .errors import DataError, FormatError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def read_idx(path, expected_magic: int) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
        if len(head) < 4:
            raise FormatError(f"{path}: truncated header")
        (magic,) = struct.unpack(">I", head)
        if magic != expected_magic:
            raise FormatError(
                f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
            )
        ndim = magic & 0xFF
        dims = struct.unpack(f">{ndim}I", fh.read(4 * ndim))
        data = np.frombuffer(fh.read(), dtype=np.uint8)
    if data.size != int(np.prod(dims)):
        raise FormatError(f"{path}: payload holds {data.size} bytes, header says {dims}")
    return data.reshape(dims)


def write_idx_images(path, images_u8: np.ndarray) -> None:
    """Write an (N, H, W) uint8 stack as an IDX image file."""
    n, h, w = images_u8.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGES_MAGIC, n, h, w))
        fh.write(np.ascontiguousarray(images_u8, dtype=np.uint8).tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", LABELS_MAGIC, len(labels)))
        fh.write(np.ascontiguousarray(labels, dtype=np.uint8).tobytes())


def save_dataset_idx(ds: ImageDataset, images_path, labels_path) -> None:
    """Persist a single-channel dataset as a standard IDX pair (8-bit)."""
    if ds.image_shape[0] != 1:
        raise DataError("IDX export supports single-channel datasets")
    write_idx_images(images_path, np.round(ds.images[:, 0] * 255).astype(np.uint8))
    write_idx_labels(labels_path, ds.labels)


def load_idx(images_path, labels_path, resize_to: tuple[int, int]) -> ImageDataset:
    """Read an IDX image/label pair into a dataset, rescaled to [0, 1].

    Images are bilinear-resized to ``resize_to``; the class count is taken
    from the label range.
    """
    raw = read_idx(images_path, IMAGES_MAGIC)
    labels = read_idx(labels_path, LABELS_MAGIC).astype(np.int64)
    if raw.shape[0] != labels.shape[0]:
        raise DataError(
            f"{raw.shape[0]} images but {labels.shape[0]} labels "
            f"({images_path} / {labels_path})"
        )
    images = raw.astype(np.float64)[:, None, :, :] / 255.0
    images = resize_bilinear(images, tuple(resize_to))
    return ImageDataset(images=images, labels=labels, num_classes=int(labels.max()) + 1)


IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


def load_image_folder(root_dir, resize_to: tuple[int, int]) -> ImageDataset:
    """Load ``root/<class_name>/<file>`` trees; class ids by sorted directory name."""
    root = Path(root_dir)
    if not root.is_dir():
        raise FileNotFoundError(root)
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise DataError(f"{root} holds no class subdirectories")

    files_per_class = []
    for d in class_dirs:
        files = sorted(f for f in d.iterdir() if f.suffix.lower() in IMAGE_SUFFIXES)
        if not files:
            raise DataError(f"class directory {d} holds no images")
        files_per_class.append(files)

    color = False
    for files in files_per_class:
        for f in files:
            with Image.open(f) as im:
                if im.mode not in ("L", "I;16", "1"):
                    color = True
    mode = "RGB" if color else "L"

    images, labels = [], []
    for class_id, files in enumerate(files_per_class):
        for f in files:
            with Image.open(f) as im:
                arr = np.asarray(im.convert(mode), dtype=np.float64) / 255.0
            if arr.ndim == 2:
                arr = arr[None, :, :]
            else:
                arr = arr.transpose(2, 0, 1)
            images.append(resize_bilinear(arr[None], tuple(resize_to))[0])
            labels.append(class_id)
    return ImageDataset(
        images=np.stack(images),
        labels=np.array(labels, dtype=np.int64),
        num_classes=len(class_dirs),
        class_names=[d.name for d in class_dirs],
    )
