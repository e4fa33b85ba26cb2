"""Deterministic named random substreams derived from one root seed."""

from __future__ import annotations

import hashlib

import numpy as np


def _label_entropy(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "little")


def substream(seed: int, label: str) -> np.random.Generator:
    """Generator for a named phase (init, batch, noise, masks, ...).

    Streams with different labels are independent; the same (seed, label)
    pair always yields the same sequence.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), _label_entropy(label)]))
