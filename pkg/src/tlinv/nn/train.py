"""Training loops: cross-entropy for classifiers, MSE for decoders.

Both loops are deterministic functions of (initial parameters, dataset,
TrainConfig): batch order comes from the config seed's "batch" substream
and nothing else draws randomness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .models import Classifier
from .network import LayeredModel
from .optim import make_optimizer
from .rng import substream


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 10
    batch_size: int = 64
    seed: int = 0
    optimizer: str = "sgd-momentum"
    momentum: float = 0.9
    weight_decay: float = 0.0
    label_smoothing: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0:
            raise ValueError("learning_rate and batch_size must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ValueError("label_smoothing must lie in [0, 1)")

    def replace(self, **kw) -> "TrainConfig":
        from dataclasses import replace

        return replace(self, **kw)

    def to_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)


def cross_entropy_from_logits(logits: np.ndarray, labels: np.ndarray,
                              label_smoothing: float = 0.0) -> float:
    zmax = logits.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(logits - zmax).sum(axis=1))
    if label_smoothing == 0.0:
        return float(np.mean(lse - logits[np.arange(len(labels)), labels]))
    k = logits.shape[1]
    eps = label_smoothing
    target_logit = (1 - eps) * logits[np.arange(len(labels)), labels] + (
        eps / k
    ) * logits.sum(axis=1)
    return float(np.mean(lse - target_logit))


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _frozen_prefix_depth(model: Classifier) -> int:
    depth = 0
    for block in model.blocks:
        if block.trainable:
            break
        depth += 1
    return depth


def train_classifier(model: Classifier, train_ds, test_ds, cfg: TrainConfig):
    """Train in place with softmax cross-entropy; returns (model, test accuracy).

    Frozen blocks are skipped by the optimizer and keep their batch-norm
    running statistics pinned. A frozen block prefix is a fixed function,
    so its activations are precomputed once per run (bit-identical to the
    naive pass, just cheaper). Test accuracy is None when ``test_ds`` is None.
    """
    from .network import LayeredModel

    if train_ds.labels.max() >= model.num_classes:
        raise DataError(
            f"label {int(train_ds.labels.max())} out of range for "
            f"{model.num_classes}-class model"
        )
    rng = substream(cfg.seed, "batch")
    opt = make_optimizer(cfg.optimizer, cfg.learning_rate, cfg.momentum, cfg.weight_decay)
    model.training_log = []
    n = len(train_ds)

    prefix_depth = _frozen_prefix_depth(model)
    if prefix_depth and cfg.epochs > 0:
        prefix = LayeredModel(model.blocks[:prefix_depth])
        inputs = np.concatenate(
            [prefix.forward(train_ds.images[s : s + 256]) for s in range(0, n, 256)]
        )
        trained = LayeredModel(model.blocks[prefix_depth:])
    else:
        inputs = train_ds.images
        trained = model

    for epoch in range(cfg.epochs):
        losses = []
        for idx in _batches(n, cfg.batch_size, rng):
            y = train_ds.labels[idx]
            probs = trained.forward(inputs[idx], train=True)
            logits = model.last_logits
            losses.append(cross_entropy_from_logits(logits, y, cfg.label_smoothing))
            eps = cfg.label_smoothing
            dlogits = probs.copy()
            dlogits -= eps / model.num_classes
            dlogits[np.arange(len(y)), y] -= 1.0 - eps
            dlogits /= len(y)
            trained.backward(dlogits, skip_last_layers=1)
            opt.step(trained)
        model.training_log.append({"epoch": epoch, "loss": float(np.mean(losses))})
    accuracy = evaluate_accuracy(model, test_ds) if test_ds is not None else None
    return model, accuracy


def evaluate_accuracy(model: Classifier, ds, batch_size: int = 256) -> float:
    hits = 0
    for start in range(0, len(ds), batch_size):
        probs = model.forward(ds.images[start : start + batch_size], train=False)
        hits += int((probs.argmax(axis=1) == ds.labels[start : start + batch_size]).sum())
    return hits / len(ds)


def predict_confidences(model, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
    out = [
        model.forward(images[start : start + batch_size], train=False)
        for start in range(0, len(images), batch_size)
    ]
    return np.concatenate(out, axis=0)


def fit_reconstruction(model: LayeredModel, inputs: np.ndarray, targets: np.ndarray,
                       cfg: TrainConfig):
    """Train any vector->image model to minimize per-pixel MSE against targets.

    Used by every inversion-decoder phase. Returns the per-epoch loss log.
    """
    rng = substream(cfg.seed, "batch")
    opt = make_optimizer(cfg.optimizer, cfg.learning_rate, cfg.momentum, cfg.weight_decay)
    # keep the model in its own dtype; float64 targets must not upcast it
    inputs = np.asarray(inputs, dtype=model.dtype)
    targets = np.asarray(targets, dtype=model.dtype)
    log = []
    n = len(inputs)
    for epoch in range(cfg.epochs):
        losses = []
        for idx in _batches(n, cfg.batch_size, rng):
            out = model.forward(inputs[idx], train=True)
            diff = out - targets[idx]
            losses.append(float(np.mean(diff**2)))
            model.backward(2.0 * diff / diff.size)
            opt.step(model)
        log.append({"epoch": epoch, "loss": float(np.mean(losses))})
    if hasattr(model, "training_log"):
        model.training_log = log
    return log


def reconstruction_mse(model, inputs: np.ndarray, targets: np.ndarray,
                       batch_size: int = 256) -> float:
    total, count = 0.0, 0
    for start in range(0, len(inputs), batch_size):
        out = model.forward(inputs[start : start + batch_size], train=False)
        diff = out - targets[start : start + batch_size]
        total += float((diff**2).sum())
        count += diff.size
    return total / count
