from .layers import DTYPE
from .models import (
    ArchitectureSpec,
    Classifier,
    ConversionNet,
    FeatureExtractor,
    InversionDecoder,
    TRANSFER_MODES,
    activation_at,
    build_classifier,
    build_decoder,
    default_decoder_blocks,
    strip_to_extractor,
    transfer_student,
)
from .network import Block, LayeredModel
from .rng import substream
from .train import (
    TrainConfig,
    cross_entropy_from_logits,
    evaluate_accuracy,
    fit_reconstruction,
    predict_confidences,
    reconstruction_mse,
    train_classifier,
)

__all__ = [
    "DTYPE",
    "ArchitectureSpec",
    "Classifier",
    "ConversionNet",
    "FeatureExtractor",
    "InversionDecoder",
    "TRANSFER_MODES",
    "activation_at",
    "build_classifier",
    "build_decoder",
    "default_decoder_blocks",
    "strip_to_extractor",
    "transfer_student",
    "Block",
    "LayeredModel",
    "substream",
    "TrainConfig",
    "cross_entropy_from_logits",
    "evaluate_accuracy",
    "fit_reconstruction",
    "predict_confidences",
    "reconstruction_mse",
    "train_classifier",
]
