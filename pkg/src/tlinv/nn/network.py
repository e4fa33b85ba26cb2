"""Block-structured models: ordered groups of layers with shared freeze flags.

A "block" is the unit the transfer-learning modes reason about: a conv
block (conv + batch-norm + max-pool + ReLU) or a fully-connected block.
Freezing operates on whole blocks. Models count forward passes in
``query_count`` (in samples); the experiment runner uses this counter to
prove that attack training never touched the target student model.
"""

from __future__ import annotations

import copy
import hashlib

import numpy as np

from .layers import Layer


class Block:
    def __init__(self, name: str, layers: list[Layer]):
        self.name = name
        self.layers = layers

    @property
    def trainable(self) -> bool:
        return all(layer.trainable for layer in self.layers)

    @trainable.setter
    def trainable(self, flag: bool) -> None:
        for layer in self.layers:
            layer.trainable = flag

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dout: np.ndarray, need_dx: bool = True) -> np.ndarray:
        for i, layer in enumerate(reversed(self.layers)):
            last = i == len(self.layers) - 1
            dout = layer.backward(dout, need_dx=need_dx or not last)
        return dout


class LayeredModel:
    """Sequential stack of blocks with parameter bookkeeping."""

    def __init__(self, blocks: list[Block]):
        self.blocks = blocks
        self.query_count = 0  # samples seen by forward()

    @property
    def dtype(self):
        cached = getattr(self, "_dtype", None)
        if cached is None:
            cached = next((v.dtype for _, _, _, v in self.named_params()), np.dtype(np.float64))
            self._dtype = cached
        return cached

    # -- forward / backward ------------------------------------------------

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self.query_count += x.shape[0]
        x = np.asarray(x, dtype=self.dtype)
        for block in self.blocks:
            x = block.forward(x, train=train)
        return x

    def backward(self, dout: np.ndarray, skip_last_layers: int = 0,
                 need_input_grad: bool = False) -> np.ndarray | None:
        """Backpropagate from the output; optionally start below the top layers.

        ``skip_last_layers=1`` is used with fused softmax/cross-entropy
        gradients, which are taken w.r.t. the logits. Unless
        ``need_input_grad`` is set, the bottom layer skips computing the
        gradient w.r.t. the network input (parameter grads still land).
        """
        layers = [layer for block in self.blocks for layer in block.layers]
        if skip_last_layers:
            layers = layers[:-skip_last_layers]
        for i, layer in enumerate(reversed(layers)):
            bottom = i == len(layers) - 1
            dout = layer.backward(dout, need_dx=need_input_grad or not bottom)
        return dout

    # -- parameters ---------------------------------------------------------

    def named_params(self):
        for bi, block in enumerate(self.blocks):
            for li, layer in enumerate(block.layers):
                for name, value in layer.params.items():
                    yield f"{bi}.{block.name}.{li}.{name}", layer, name, value

    def named_buffers(self):
        for bi, block in enumerate(self.blocks):
            for li, layer in enumerate(block.layers):
                for name, value in layer.buffers().items():
                    yield f"{bi}.{block.name}.{li}.{name}", value

    def param_hash(self, blocks: list[int] | None = None) -> str:
        """SHA-256 over parameters and buffers (optionally a block subset)."""
        digest = hashlib.sha256()
        keep = set(range(len(self.blocks))) if blocks is None else set(blocks)
        for key, _, _, value in self.named_params():
            if int(key.split(".", 1)[0]) in keep:
                digest.update(key.encode())
                digest.update(np.ascontiguousarray(value).tobytes())
        for key, value in self.named_buffers():
            if int(key.split(".", 1)[0]) in keep:
                digest.update(key.encode())
                digest.update(np.ascontiguousarray(value).tobytes())
        return digest.hexdigest()

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {key: value.copy() for key, _, _, value in self.named_params()}
        state.update({key: value.copy() for key, value in self.named_buffers()})
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = {key: (layer, name) for key, layer, name, _ in self.named_params()}
        buffer_keys = {key for key, _ in self.named_buffers()}
        dtype = self.dtype
        for key, value in state.items():
            if key in own:
                layer, name = own[key]
                if layer.params[name].shape != value.shape:
                    raise ValueError(f"shape mismatch for {key}")
                layer.params[name] = np.array(value, dtype=dtype)
            elif key in buffer_keys:
                bi, bname, li, name = key.split(".")
                setattr(self.blocks[int(bi)].layers[int(li)], name, np.array(value, dtype=dtype))
            else:
                raise ValueError(f"unknown state entry {key}")

    @property
    def trainable_mask(self) -> list[bool]:
        return [block.trainable for block in self.blocks]

    def clone(self) -> "LayeredModel":
        model = copy.deepcopy(self)
        model.query_count = 0
        return model
