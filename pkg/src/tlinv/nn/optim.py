"""Gradient-descent optimizers over block-structured models.

Optimizers skip frozen layers entirely, so frozen parameters stay
bit-identical through training (no zero-step drift).
"""

from __future__ import annotations

import numpy as np

from .network import LayeredModel


class Optimizer:
    def __init__(self, lr: float, weight_decay: float = 0.0):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.lr = lr
        self.weight_decay = weight_decay
        self.state: dict[tuple, dict] = {}

    def step(self, model: LayeredModel) -> None:
        for key, layer, name, value in model.named_params():
            if not layer.trainable:
                continue
            grad = layer.grads.get(name)
            if grad is None:
                continue
            if self.weight_decay and value.ndim > 1:  # no decay on biases/batch-norm
                grad = grad + self.weight_decay * value
            self._update((key,), layer, name, grad)

    def _update(self, key, layer, name, grad):
        raise NotImplementedError


class SGDMomentum(Optimizer):
    def __init__(self, lr: float, momentum: float = 0.9, weight_decay: float = 0.0):
        super().__init__(lr, weight_decay)
        self.momentum = momentum

    def _update(self, key, layer, name, grad):
        st = self.state.setdefault(key, {"v": np.zeros_like(grad)})
        st["v"] = self.momentum * st["v"] + grad
        layer.params[name] = layer.params[name] - self.lr * st["v"]


class Adam(Optimizer):
    def __init__(self, lr: float = 1e-3, betas=(0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        super().__init__(lr, weight_decay)
        self.betas = betas
        self.eps = eps

    def _update(self, key, layer, name, grad):
        b1, b2 = self.betas
        st = self.state.setdefault(
            key, {"m": np.zeros_like(grad), "v": np.zeros_like(grad), "t": 0}
        )
        st["t"] += 1
        st["m"] = b1 * st["m"] + (1 - b1) * grad
        st["v"] = b2 * st["v"] + (1 - b2) * grad * grad
        mhat = st["m"] / (1 - b1 ** st["t"])
        vhat = st["v"] / (1 - b2 ** st["t"])
        layer.params[name] = layer.params[name] - self.lr * mhat / (np.sqrt(vhat) + self.eps)


def make_optimizer(name: str, lr: float, momentum: float = 0.9, weight_decay: float = 0.0):
    if name == "sgd-momentum":
        return SGDMomentum(lr, momentum=momentum, weight_decay=weight_decay)
    if name == "adam":
        return Adam(lr, weight_decay=weight_decay)
    raise ValueError(f"unknown optimizer {name!r}")
