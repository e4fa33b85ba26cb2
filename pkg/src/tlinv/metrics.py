"""Evaluation metrics and the Lipschitz-chain sanity check."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ShapeError


def data_inversion_error(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Per-pixel mean squared error between an input and its reconstruction."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ShapeError(f"shapes differ: {x.shape} vs {x_hat.shape}")
    return float(np.mean((x - x_hat) ** 2))


def confidence_vector_error(y_student: np.ndarray, y_shadow: np.ndarray) -> float:
    """Euclidean distance between two confidence vectors."""
    a = np.asarray(y_student, dtype=np.float64)
    b = np.asarray(y_shadow, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shapes differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def lipschitz_chain_check(
    x: np.ndarray,
    eta: np.ndarray,
    r: Callable[[np.ndarray], np.ndarray],
    tol: float = 1e-9,
) -> tuple[bool, tuple[float, float, float]]:
    """Verify the reconstruction-quality perturbation bound on one pair.

    For reconstruction map r, perturbation eta and input x, checks

        ||r(x+eta) - (x+eta)|| - ||r(x) - x||
            <= ||r(x+eta) - r(x)|| + ||eta||
            <= (l_hat + 1) * ||eta||,

    with the per-pair ratio l_hat = ||r(x+eta) - r(x)|| / ||eta||. Returns
    (holds, (left, middle, right)). With the empirical per-pair ratio, the
    outer inequality is an identity, so a failure flags an arithmetic bug
    rather than a model property.
    """
    x = np.asarray(x, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if x.shape != eta.shape:
        raise ShapeError(f"shapes differ: {x.shape} vs {eta.shape}")
    eta_norm = float(np.linalg.norm(eta))
    if eta_norm == 0.0:
        raise ValueError("perturbation must be nonzero")
    rx = np.asarray(r(x), dtype=np.float64)
    rxe = np.asarray(r(x + eta), dtype=np.float64)
    left = float(np.linalg.norm(rxe - (x + eta)) - np.linalg.norm(rx - x))
    dr = float(np.linalg.norm(rxe - rx))
    middle = dr + eta_norm
    l_hat = dr / eta_norm
    right = (l_hat + 1.0) * eta_norm
    holds = left <= middle + tol and middle <= right + tol
    return holds, (left, middle, right)
