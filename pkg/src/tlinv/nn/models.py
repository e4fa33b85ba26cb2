"""Model family: classifiers, feature extractors, decoders, conversion nets.

Classifiers follow a fixed block grammar: each conv block is
conv -> batch-norm -> 2x2 max-pool -> ReLU, then fully-connected blocks,
with a softmax fused into the last one. "Layer K" in the transfer modes
refers to these blocks.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from .layers import (
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    Dense,
    Flatten,
    MaxPool2d,
    ReLU,
    Reshape,
    Sigmoid,
    Softmax,
    Tanh,
)
from .network import Block, LayeredModel
from .rng import substream


@dataclass(frozen=True)
class ArchitectureSpec:
    """Classifier layout: conv blocks as (out_channels, kernel, stride), then fc widths.

    The final fc width must equal ``num_classes``; every conv block is
    followed by a 2x2 max-pool, so the input sides must survive
    ``len(conv_blocks)`` halvings.
    """

    conv_blocks: tuple[tuple[int, int, int], ...]
    fc_dims: tuple[int, ...]
    num_classes: int
    input_shape: tuple[int, int, int]

    def __post_init__(self):
        if not self.conv_blocks:
            raise ValueError("classifier needs at least one conv block")
        if not self.fc_dims or self.fc_dims[-1] != self.num_classes:
            raise ShapeError(
                f"last fc width {self.fc_dims[-1] if self.fc_dims else None} "
                f"!= num_classes {self.num_classes}"
            )
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")

    @property
    def num_layers(self) -> int:
        return len(self.conv_blocks) + len(self.fc_dims)

    def conv_output_shape(self) -> tuple[int, int, int]:
        c, h, w = self.input_shape
        for out_c, kernel, stride in self.conv_blocks:
            h = (h + 2 * ((kernel - 1) // 2) - kernel) // stride + 1
            w = (w + 2 * ((kernel - 1) // 2) - kernel) // stride + 1
            if h < 2 or w < 2 or h % 2 or w % 2:
                raise ShapeError(f"conv chain leaves {h}x{w}, cannot 2x2-pool")
            h, w = h // 2, w // 2
            c = out_c
        return c, h, w

    @property
    def feature_dim(self) -> int:
        c, h, w = self.conv_output_shape()
        return c * h * w

    def to_dict(self) -> dict:
        return {
            "conv_blocks": [list(b) for b in self.conv_blocks],
            "fc_dims": list(self.fc_dims),
            "num_classes": self.num_classes,
            "input_shape": list(self.input_shape),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchitectureSpec":
        return cls(
            conv_blocks=tuple(tuple(b) for b in d["conv_blocks"]),
            fc_dims=tuple(d["fc_dims"]),
            num_classes=int(d["num_classes"]),
            input_shape=tuple(d["input_shape"]),
        )


class Classifier(LayeredModel):
    def __init__(self, spec: ArchitectureSpec, blocks: list[Block]):
        super().__init__(blocks)
        self.spec = spec
        self.training_log: list[dict] = []

    @property
    def num_classes(self) -> int:
        return self.spec.num_classes

    @property
    def conv_depth(self) -> int:
        return len(self.spec.conv_blocks)

    @property
    def num_layers(self) -> int:
        return len(self.blocks)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Confidence vectors for a batch; counts as queries."""
        return self.forward(x, train=False)

    @property
    def last_logits(self) -> np.ndarray:
        return self.blocks[-1].layers[-1].logits

    def freeze_first(self, k: int) -> None:
        for i, block in enumerate(self.blocks):
            block.trainable = i >= k

    def activation_at(self, x: np.ndarray, k: int) -> np.ndarray:
        """Flattened activation after block ``k`` (1-based), without query counting."""
        if not 0 < k <= len(self.blocks):
            raise ValueError(f"layer index {k} outside 1..{len(self.blocks)}")
        x = np.asarray(x, dtype=self.dtype)
        for block in self.blocks[:k]:
            x = block.forward(x, train=False)
        return x.reshape(x.shape[0], -1)

    def input_gradient_at(self, dfeat: np.ndarray, k: int, shape_after_k) -> np.ndarray:
        """Gradient w.r.t. the input of the truncated forward pass ``activation_at(.., k)``.

        Must be called right after ``activation_at`` so layer caches are fresh.
        """
        dout = dfeat.reshape(shape_after_k)
        for block in reversed(self.blocks[:k]):
            dout = block.backward(dout)
        return dout


def build_classifier(spec: ArchitectureSpec, seed: int = 0, dtype=np.float32) -> Classifier:
    """Randomly initialized classifier; identical parameters for identical seeds.

    float32 is the speed-oriented default; tests that compare against
    finite differences build float64 models.
    """
    rng = substream(seed, "init")
    blocks = []
    in_c = spec.input_shape[0]
    for i, (out_c, kernel, stride) in enumerate(spec.conv_blocks):
        blocks.append(
            Block(
                f"conv{i + 1}",
                [
                    Conv2d(in_c, out_c, kernel=kernel, stride=stride, rng=rng, dtype=dtype),
                    BatchNorm2d(out_c, dtype=dtype),
                    MaxPool2d(2),
                    ReLU(),
                ],
            )
        )
        in_c = out_c
    dims = (spec.feature_dim,) + spec.fc_dims
    for j in range(len(spec.fc_dims)):
        layers: list = [Flatten()] if j == 0 else []
        layers.append(Dense(dims[j], dims[j + 1], rng=rng, dtype=dtype))
        if j < len(spec.fc_dims) - 1:
            layers.append(ReLU())
        else:
            layers.append(Softmax())
        blocks.append(Block(f"fc{j + 1}", layers))
    return Classifier(spec, blocks)


class FeatureExtractor(LayeredModel):
    """Conv-block prefix of a classifier, output flattened; always frozen."""

    def __init__(self, blocks: list[Block], output_shape: tuple[int, int, int]):
        super().__init__(blocks + [Block("flatten", [Flatten()])])
        self.output_shape = output_shape
        self.output_dim = int(np.prod(output_shape))
        for block in self.blocks:
            block.trainable = False

    def forward(self, x, train=False):
        # a feature extractor is a fixed function; ignore the train flag
        return super().forward(x, train=False)


def strip_to_extractor(model: Classifier) -> FeatureExtractor:
    """Drop the fully-connected blocks, keeping a frozen copy of the conv prefix."""
    if model.conv_depth < 1:
        raise ValueError("model has no conv blocks to keep")
    blocks = copy.deepcopy(model.blocks[: model.conv_depth])
    return FeatureExtractor(blocks, model.spec.conv_output_shape())


def activation_at(model: Classifier, x: np.ndarray, k: int) -> np.ndarray:
    return model.activation_at(x, k)


class InversionDecoder(LayeredModel):
    """Vector -> image decoder built from transposed-conv blocks.

    All blocks but the last use batch-norm + Tanh; the last applies a
    Sigmoid so outputs live in [0, 1].
    """

    def __init__(self, input_dim: int, output_shape: tuple[int, int, int], blocks: list[Block]):
        super().__init__(blocks)
        self.input_dim = input_dim
        self.output_shape = output_shape
        self.training_log: list[dict] = []

    def decode(self, v: np.ndarray) -> np.ndarray:
        if v.ndim != 2 or v.shape[1] != self.input_dim:
            raise ShapeError(f"decoder expects (N, {self.input_dim}), got {v.shape}")
        return self.forward(v, train=False)


def default_decoder_blocks(output_shape: tuple[int, int, int], width: int = 128):
    """Transposed-conv chain reaching ``output_shape`` from a 1x1 start.

    Doubles the spatial side per block after an initial 1->4 step, so the
    target side must be ``4 * 2**k``; e.g. four blocks reach 32x32 and five
    reach 64x64.
    """
    c, h, w = output_shape
    if h != w or h < 8 or (h & (h - 1)) or h % 4:
        raise ShapeError(f"no default transposed-conv chain for {h}x{w}")
    specs = [(width, 4, 1, 0)]
    side, channels = 4, width
    while side < h:
        channels = max(channels // 2, 8)
        specs.append((channels, 4, 2, 1))
        side *= 2
    specs[-1] = (c, 4, 2, 1)
    return specs


def build_decoder(
    input_dim: int,
    output_shape: tuple[int, int, int],
    blocks,
    seed: int = 0,
    dtype=np.float32,
) -> InversionDecoder:
    """Decoder per block spec list [(out_channels, kernel, stride, pad), ...]."""
    if len(blocks) < 2:
        raise ValueError("decoder needs at least 2 transposed-conv blocks")
    rng = substream(seed, "init")
    model_blocks = [Block("reshape", [Reshape((input_dim, 1, 1))])]
    in_c, side = input_dim, 1
    for i, (out_c, kernel, stride, pad) in enumerate(blocks):
        tconv = ConvTranspose2d(in_c, out_c, kernel=kernel, stride=stride, pad=pad, rng=rng,
                                dtype=dtype)
        side = tconv.out_size(side)
        last = i == len(blocks) - 1
        layers: list = [tconv]
        if not last:
            layers += [BatchNorm2d(out_c, dtype=dtype), Tanh()]
        else:
            layers.append(Sigmoid())
        model_blocks.append(Block(f"tconv{i + 1}", layers))
        in_c = out_c
    if (in_c, side, side) != tuple(output_shape):
        raise ShapeError(
            f"transposed-conv chain yields {(in_c, side, side)}, wanted {tuple(output_shape)}"
        )
    decoder = InversionDecoder(input_dim, tuple(output_shape), model_blocks)
    decoder.block_specs = [tuple(b) for b in blocks]
    return decoder


class ConversionNet(LayeredModel):
    """Three fully-connected layers mapping confidence vectors to feature space."""

    def __init__(self, input_dim: int, output_dim: int, hidden=(64, 256), seed: int = 0,
                 dtype=np.float32):
        if len(hidden) != 2:
            raise ValueError("conversion net is exactly three fully-connected layers")
        rng = substream(seed, "init")
        blocks = [
            Block("fc1", [Dense(input_dim, hidden[0], rng=rng, dtype=dtype), ReLU()]),
            Block("fc2", [Dense(hidden[0], hidden[1], rng=rng, dtype=dtype), ReLU()]),
            Block("fc3", [Dense(hidden[1], output_dim, rng=rng, dtype=dtype)]),
        ]
        super().__init__(blocks)
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.hidden = tuple(hidden)
        self.training_log: list[dict] = []

    def convert(self, y: np.ndarray) -> np.ndarray:
        if y.ndim != 2 or y.shape[1] != self.input_dim:
            raise ShapeError(f"conversion net expects (N, {self.input_dim}), got {y.shape}")
        return self.forward(y, train=False)


TRANSFER_MODES = ("deep", "mid", "full")


def transfer_student(
    teacher: Classifier,
    mode: str,
    num_classes: int,
    student_train_ds,
    cfg,
    fc_dims: tuple[int, ...] | None = None,
) -> Classifier:
    """Build a student from a trained teacher and fine-tune it per the mode.

    deep: freeze everything except a fresh last classification layer.
    mid:  freeze the conv blocks, rebuild the fc stack fresh.
    full: copy all weights as initialization, train every block.
    The last classification layer is always re-initialized at ``num_classes``
    outputs; fresh-layer seeds and batch order come from ``cfg.seed``.
    """
    from .train import train_classifier  # cycle: train uses models for typing

    if mode not in TRANSFER_MODES:
        raise ValueError(f"unknown transfer mode {mode!r}; expected one of {TRANSFER_MODES}")

    t_spec = teacher.spec
    if fc_dims is not None and mode in ("deep",):
        raise ValueError("deep mode keeps the teacher fc stack; fc_dims cannot change")
    new_fc = tuple(fc_dims) if fc_dims is not None else t_spec.fc_dims[:-1] + (num_classes,)
    if new_fc[-1] != num_classes:
        raise ShapeError("fc_dims must end at num_classes")
    spec = ArchitectureSpec(
        conv_blocks=t_spec.conv_blocks,
        fc_dims=new_fc,
        num_classes=num_classes,
        input_shape=t_spec.input_shape,
    )
    student = build_classifier(spec, seed=cfg.seed, dtype=teacher.dtype)

    n_conv = teacher.conv_depth
    copy_upto = {"deep": len(teacher.blocks) - 1, "mid": n_conv, "full": len(teacher.blocks) - 1}[
        mode
    ]
    state = teacher.state_dict()
    own = student.state_dict()
    copied = {}
    for key, value in state.items():
        bi = int(key.split(".", 1)[0])
        if bi < copy_upto and key in own and own[key].shape == value.shape:
            copied[key] = value
    student.load_state_dict(copied)

    k_frozen = {"deep": len(student.blocks) - 1, "mid": n_conv, "full": 0}[mode]
    student.freeze_first(k_frozen)

    train_classifier(student, student_train_ds, None, cfg)
    return student
