"""Attack evaluation: per-sample metrics, reports, and image grids."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image

from .dataset import ImageDataset
from .errors import DataError
from .nn.models import Classifier
from .nn.train import predict_confidences


@dataclass
class MetricsReport:
    """Self-describing record of one evaluated attack."""

    method: str
    dataset: str
    num_classes: int
    student_samples_per_class: int
    defense: dict | None
    mean_inversion_error: float
    mean_confidence_error: float | None
    argmax_preservation_rate: float | None
    seeds: dict = field(default_factory=dict)
    wall_clock_sec: float = 0.0
    student_queries_pre_eval: int = 0
    student_queries_total: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mean_inversion_error < 0:
            raise ValueError("inversion error must be >= 0")
        if self.mean_confidence_error is not None and self.mean_confidence_error < 0:
            raise ValueError("confidence error must be >= 0")

    def to_dict(self) -> dict:
        from dataclasses import asdict

        return {"kind": "tlinv-metrics-report", "version": 1, **asdict(self)}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        d = json.loads(text)
        d.pop("kind", None)
        d.pop("version", None)
        return cls(**d)


def evaluate_attack(
    inverter: Callable[[np.ndarray], np.ndarray],
    student: Classifier,
    eval_set: ImageDataset,
    defense: Callable[[np.ndarray], np.ndarray] | None = None,
    shadow: Classifier | None = None,
    method: str = "unknown",
    dataset: str = "unknown",
    student_samples_per_class: int = 0,
    defense_info: dict | None = None,
    seeds: dict | None = None,
) -> MetricsReport:
    """Query the student once per eval sample, optionally defend the outputs,
    invert, and accumulate both error metrics.

    The confidence-vector error compares raw student outputs to shadow
    outputs (the defense applies to what the inverter sees, not to the
    shadow-fidelity metric). The argmax preservation rate tracks whether
    the defense kept each sample's predicted class.
    """
    if len(eval_set) == 0:
        raise DataError("evaluation set is empty")
    y = predict_confidences(student, eval_set.images)
    y_seen = defense(y) if defense is not None else y
    preserved = None
    if defense is not None:
        preserved = float(np.mean(y_seen.argmax(axis=1) == y.argmax(axis=1)))

    recon = np.asarray(inverter(y_seen))
    if recon.shape != eval_set.images.shape:
        raise DataError(
            f"inverter returned shape {recon.shape}, expected {eval_set.images.shape}"
        )
    inv_err = float(np.mean((recon - eval_set.images) ** 2))

    conf_err = None
    if shadow is not None:
        y_shadow = predict_confidences(shadow, eval_set.images)
        conf_err = float(np.mean(np.linalg.norm(y - y_shadow, axis=1)))

    return MetricsReport(
        method=method,
        dataset=dataset,
        num_classes=eval_set.num_classes,
        student_samples_per_class=student_samples_per_class,
        defense=defense_info,
        mean_inversion_error=inv_err,
        mean_confidence_error=conf_err,
        argmax_preservation_rate=preserved,
        seeds=seeds or {},
    )


def constant_image_baseline_error(train_images: np.ndarray, eval_images: np.ndarray) -> float:
    """MSE of the best constant predictor (the training-pool mean image).

    Any useful inverter must beat this floor-of-ignorance on average.
    """
    mean_image = np.asarray(train_images, dtype=np.float64).mean(axis=0)
    return float(np.mean((eval_images - mean_image) ** 2))


def reconstruction_grid(
    originals: np.ndarray, reconstructions: np.ndarray, path, max_cols: int = 10
) -> None:
    """Write a two-row (original | reconstruction) PNG comparison grid."""
    n = min(len(originals), max_cols)
    c, h, w = originals.shape[1:]
    pad = 2
    canvas = np.ones((2 * h + 3 * pad, n * (w + pad) + pad), dtype=np.float64)
    for i in range(n):
        x0 = pad + i * (w + pad)
        canvas[pad : pad + h, x0 : x0 + w] = originals[i].mean(axis=0)
        canvas[2 * pad + h : 2 * pad + 2 * h, x0 : x0 + w] = reconstructions[i].mean(axis=0)
    img = np.round(np.clip(canvas, 0, 1) * 255).astype(np.uint8)
    Image.fromarray(img).save(path)
