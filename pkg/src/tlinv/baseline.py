"""Direct-inversion baseline: train the decoder on real target queries.

This is the comparison point the query-free attacks are measured against,
and the only code path allowed a nonzero target query count before
evaluation. Each query-set sample is sent to the target exactly once and
the confidence is cached for all training epochs.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .dataset import ImageDataset
from .errors import DataError, ShapeError
from .nn.models import InversionDecoder
from .nn.train import TrainConfig, fit_reconstruction


def direct_inversion_train(
    target_query: Callable[[np.ndarray], np.ndarray],
    query_set: ImageDataset,
    decoder: InversionDecoder,
    cfg: TrainConfig,
    batch_size: int = 256,
) -> InversionDecoder:
    """Query the target once per sample, then fit the decoder on the cache."""
    if len(query_set) == 0:
        raise DataError("query set is empty")
    confidences = np.concatenate(
        [
            np.asarray(target_query(query_set.images[s : s + batch_size]))
            for s in range(0, len(query_set), batch_size)
        ]
    )
    if confidences.shape[1] != decoder.input_dim:
        raise ShapeError(
            f"target outputs {confidences.shape[1]} classes, decoder expects "
            f"{decoder.input_dim}"
        )
    fit_reconstruction(decoder, confidences, query_set.images, cfg)
    return decoder
