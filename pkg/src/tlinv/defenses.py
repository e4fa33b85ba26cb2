"""Output-vector defenses: top-h filtering and temperature scaling.

Both operate on confidence vectors (the last axis of the input), so they
accept single vectors or batches.
"""

from __future__ import annotations

import numpy as np


def top_h_filter(y: np.ndarray, h: int, renormalize: bool = False) -> np.ndarray:
    """Keep the h largest entries (ties broken toward the lowest index), zero the rest.

    Kept values are unchanged by default; ``renormalize`` rescales them to
    sum to one. The argmax is always among the kept entries, so the
    predicted class never changes.
    """
    y = np.asarray(y, dtype=np.float64)
    dim = y.shape[-1]
    if not 1 <= h <= dim:
        raise ValueError(f"h must lie in [1, {dim}], got {h}")
    flat = y.reshape(-1, dim)
    order = np.argsort(-flat, axis=-1, kind="stable")  # descending, ties by index
    out = np.zeros_like(flat)
    rows = np.arange(flat.shape[0])[:, None]
    keep = order[:, :h]
    out[rows, keep] = flat[rows, keep]
    if renormalize:
        sums = out.sum(axis=-1, keepdims=True)
        out = np.divide(out, sums, out=np.zeros_like(out), where=sums > 0)
    return out.reshape(y.shape)


def temperature_softmax(y: np.ndarray, t: float) -> np.ndarray:
    """Re-normalize a confidence vector through a temperature-t softmax."""
    if t <= 0:
        raise ValueError(f"temperature must be positive, got {t}")
    y = np.asarray(y, dtype=np.float64)
    z = y / t
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def make_defense(kind: str | None, value: float | None = None):
    """Defense factory used by configs: None, ("top-h", h) or ("temperature", t)."""
    if kind is None or kind == "none":
        return None
    if kind == "top-h":
        return lambda y: top_h_filter(y, int(value))
    if kind == "temperature":
        return lambda y: temperature_softmax(y, float(value))
    raise ValueError(f"unknown defense kind {kind!r}")
