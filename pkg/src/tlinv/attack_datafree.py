"""Inversion attack for an adversary with no teacher-distribution data.

The few held student samples are expanded by learned-mask augmentation
(see :mod:`tlinv.augment`), a shadow classifier is trained on the
augmented pool with the same transfer mode as the victim, and a decoder
learns to invert the shadow's confidence vectors. The decoder then inverts
the student's observed outputs directly. The student model itself is never
queried before evaluation.
"""

from __future__ import annotations

import numpy as np

from .dataset import ImageDataset
from .errors import ShapeError
from .nn.models import Classifier, InversionDecoder, transfer_student
from .nn.train import TrainConfig, fit_reconstruction, predict_confidences


def train_shadow_model(
    teacher: Classifier,
    mode: str,
    d_aug: ImageDataset,
    cfg: TrainConfig,
    fc_dims: tuple[int, ...] | None = None,
) -> Classifier:
    """Train the shadow with the same transfer method the victim used.

    ``fc_dims`` lets the shadow use different fully-connected widths than
    the (unknown) student; the conv transfer comes from the teacher either
    way.
    """
    return transfer_student(teacher, mode, d_aug.num_classes, d_aug, cfg, fc_dims=fc_dims)


def train_attack_model(
    decoder: InversionDecoder,
    shadow: Classifier,
    data: ImageDataset,
    cfg: TrainConfig,
) -> InversionDecoder:
    """Fit the decoder to reconstruct samples from the shadow's confidences.

    The shadow is read-only here: its outputs are precomputed once and it
    receives no gradient updates.
    """
    if decoder.input_dim != shadow.num_classes:
        raise ShapeError(
            f"decoder expects {decoder.input_dim}-d input, shadow outputs "
            f"{shadow.num_classes} classes"
        )
    confidences = predict_confidences(shadow, data.images)
    fit_reconstruction(decoder, confidences, data.images, cfg)
    return decoder


def invert_from_confidence(decoder: InversionDecoder, y: np.ndarray) -> np.ndarray:
    """Reconstruct input image(s) directly from confidence vector(s)."""
    y = np.asarray(y, dtype=np.float64)
    single = y.ndim == 1
    batch = y[None] if single else y
    if batch.shape[1] != decoder.input_dim:
        raise ShapeError(f"confidence dim {batch.shape[1]} != decoder input {decoder.input_dim}")
    images = decoder.decode(batch)
    return images[0] if single else images
