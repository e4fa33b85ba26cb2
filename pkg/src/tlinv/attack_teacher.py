"""Inversion attack for an adversary holding teacher-distribution data.

Three phases, none of which touches the target student model:

1. train a decoder to invert the teacher's conv features on teacher data;
2. build a shadow classifier from the teacher (fresh last layer at the
   student's output width) and jointly train it with a conversion net so
   that conversion(shadow(x)) approximates the teacher features of x,
   using teacher data plus the few student samples;
3. invert any observed student confidence vector via
   decoder(conversion(y)).
"""

from __future__ import annotations

import copy

import numpy as np

from .dataset import ImageDataset
from .errors import ShapeError
from .nn.layers import Dense, Softmax
from .nn.models import Classifier, ConversionNet, FeatureExtractor, InversionDecoder
from .nn.network import Block, LayeredModel
from .nn.optim import make_optimizer
from .nn.rng import substream
from .nn.train import TrainConfig, fit_reconstruction, predict_confidences


def extract_features(extractor: FeatureExtractor, images: np.ndarray,
                     batch_size: int = 256) -> np.ndarray:
    out = [
        extractor.forward(images[s : s + batch_size])
        for s in range(0, len(images), batch_size)
    ]
    return np.concatenate(out)


def train_teacher_inversion(
    decoder: InversionDecoder,
    extractor: FeatureExtractor,
    teacher_ds: ImageDataset,
    cfg: TrainConfig,
) -> InversionDecoder:
    """Fit the decoder to reconstruct teacher-distribution images from
    frozen conv features, by mean squared error."""
    if decoder.input_dim != extractor.output_dim:
        raise ShapeError(
            f"decoder expects {decoder.input_dim}-d input, extractor yields "
            f"{extractor.output_dim}-d features"
        )
    feats = extract_features(extractor, teacher_ds.images)
    fit_reconstruction(decoder, feats, teacher_ds.images, cfg)
    return decoder


def build_shadow_from_teacher(teacher: Classifier, student_num_classes: int,
                              seed: int = 0) -> Classifier:
    """Copy of the teacher with its last classification layer replaced by a
    freshly initialized one of the student's output width."""
    from .nn.models import ArchitectureSpec

    spec = ArchitectureSpec(
        conv_blocks=teacher.spec.conv_blocks,
        fc_dims=teacher.spec.fc_dims[:-1] + (student_num_classes,),
        num_classes=student_num_classes,
        input_shape=teacher.spec.input_shape,
    )
    rng = substream(seed, "init")
    blocks = copy.deepcopy(teacher.blocks[:-1])
    in_dim = teacher.blocks[-1].layers[0].in_dim
    head = Dense(in_dim, student_num_classes, rng=rng, dtype=teacher.dtype)
    blocks.append(Block(f"fc{len(teacher.spec.fc_dims)}", [head, Softmax()]))
    shadow = Classifier(spec, blocks)
    shadow.freeze_first(0)
    return shadow


def train_shadow_and_conversion(
    shadow: Classifier,
    conv_net: ConversionNet,
    extractor: FeatureExtractor,
    d_t: ImageDataset,
    d_s: ImageDataset,
    cfg: TrainConfig,
    train_full_shadow: bool = False,
) -> tuple[Classifier, ConversionNet]:
    """Jointly train shadow + conversion so conversion(shadow(x)) matches the
    teacher features of x, over the union of teacher and student samples.

    By default the shadow's copied conv blocks stay frozen (they carry the
    teacher features the attack relies on) and only its fully-connected
    layers train, which also lets the conv features be precomputed once.
    """
    if conv_net.input_dim != shadow.num_classes:
        raise ShapeError(
            f"conversion input {conv_net.input_dim} != shadow classes {shadow.num_classes}"
        )
    if conv_net.output_dim != extractor.output_dim:
        raise ShapeError(
            f"conversion output {conv_net.output_dim} != feature dim {extractor.output_dim}"
        )
    images = np.concatenate([d_t.images, d_s.images])
    targets = extract_features(extractor, images)

    n_conv = shadow.conv_depth
    if train_full_shadow:
        shadow.freeze_first(0)
        trained = shadow
        inputs = images
    else:
        shadow.freeze_first(n_conv)
        # frozen conv prefix: precompute its output once and train the rest
        prefix = LayeredModel(shadow.blocks[:n_conv])
        inputs = np.concatenate(
            [
                prefix.forward(images[s : s + 256])
                for s in range(0, len(images), 256)
            ]
        )
        trained = LayeredModel(shadow.blocks[n_conv:])

    rng = substream(cfg.seed, "batch")
    opt_a = make_optimizer(cfg.optimizer, cfg.learning_rate, cfg.momentum, cfg.weight_decay)
    opt_i = make_optimizer(cfg.optimizer, cfg.learning_rate, cfg.momentum, cfg.weight_decay)
    log = []
    n = len(images)
    for epoch in range(cfg.epochs):
        losses = []
        order = rng.permutation(n)
        for s in range(0, n, cfg.batch_size):
            idx = order[s : s + cfg.batch_size]
            probs = trained.forward(inputs[idx], train=True)
            approx = conv_net.forward(probs, train=True)
            diff = approx - targets[idx]
            losses.append(float(np.mean(diff**2)))
            dprobs = conv_net.backward(2.0 * diff / diff.size, need_input_grad=True)
            trained.backward(dprobs)
            opt_a.step(trained)
            opt_i.step(conv_net)
        log.append({"epoch": epoch, "loss": float(np.mean(losses))})
    shadow.training_log = log
    conv_net.training_log = log
    return shadow, conv_net


def joint_feature_loss(
    shadow: Classifier,
    conv_net: ConversionNet,
    extractor: FeatureExtractor,
    ds: ImageDataset,
) -> float:
    """Held-out value of the joint objective mean((conversion(shadow(x)) - feat)^2)."""
    probs = predict_confidences(shadow, ds.images)
    approx = conv_net.convert(probs)
    targets = extract_features(extractor, ds.images)
    return float(np.mean((approx - targets) ** 2))


def invert_student_output(
    y: np.ndarray, conv_net: ConversionNet, decoder: InversionDecoder
) -> np.ndarray:
    """Reconstruct input image(s) from observed student confidence vector(s)."""
    y = np.asarray(y, dtype=np.float64)
    single = y.ndim == 1
    batch = y[None] if single else y
    if batch.shape[1] != conv_net.input_dim:
        raise ShapeError(
            f"confidence dim {batch.shape[1]} != conversion input {conv_net.input_dim}"
        )
    images = decoder.decode(conv_net.convert(batch))
    return images[0] if single else images
