"""tlinv: query-free model-inversion attacks against transfer-learning students.

Library layout:

- ``tlinv.dataset`` / ``tlinv.idx`` / ``tlinv.synthetic`` -- image datasets,
  IDX and image-folder loaders, deterministic stand-in corpora.
- ``tlinv.nn`` -- the numpy model family (classifiers, decoders) and training.
- ``tlinv.masks`` / ``tlinv.augment`` -- learned noise/jigsaw masks and the
  one-shot augmentation pipeline.
- ``tlinv.attack_teacher`` -- inversion using teacher-distribution data.
- ``tlinv.attack_datafree`` -- inversion without any teacher data.
- ``tlinv.baseline`` -- the query-based direct-inversion baseline.
- ``tlinv.metrics`` / ``tlinv.defenses`` / ``tlinv.evaluate`` -- error
  metrics, output-vector defenses, evaluation reports.
- ``tlinv.experiment`` / ``tlinv.cli`` -- configured end-to-end runs.
"""

from .dataset import (
    ClassPartition,
    ImageDataset,
    partition_classes,
    restrict_classes,
    subsample_per_class,
    train_test_split,
)
from .defenses import temperature_softmax, top_h_filter
from .evaluate import MetricsReport, evaluate_attack
from .experiment import ExperimentConfig, Pipeline, run_experiment, run_sweep
from .idx import load_idx, load_image_folder
from .masks import JigsawMask, NoiseMask, jigsaw_mix, learn_jigsaw_mask, learn_noise_mask, perturb
from .metrics import confidence_vector_error, data_inversion_error, lipschitz_chain_check
from .synthetic import make_corpus, make_stroke_digits, make_texture_shapes

__version__ = "0.1.0"

__all__ = [
    "ClassPartition",
    "ImageDataset",
    "partition_classes",
    "restrict_classes",
    "subsample_per_class",
    "train_test_split",
    "temperature_softmax",
    "top_h_filter",
    "MetricsReport",
    "evaluate_attack",
    "ExperimentConfig",
    "Pipeline",
    "run_experiment",
    "run_sweep",
    "load_idx",
    "load_image_folder",
    "JigsawMask",
    "NoiseMask",
    "jigsaw_mix",
    "learn_jigsaw_mask",
    "learn_noise_mask",
    "perturb",
    "confidence_vector_error",
    "data_inversion_error",
    "lipschitz_chain_check",
    "make_corpus",
    "make_stroke_digits",
    "make_texture_shapes",
]
