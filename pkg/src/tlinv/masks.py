"""Learned masks for one-shot data augmentation.

Noise masks blend an image with Gaussian noise per pixel; the mask is
learned so that a frozen teacher's intermediate features barely move while
as much of the image as possible is noised away. Jigsaw masks swap a fixed
budget of grid patches with patches from an auxiliary image, placed so the
teacher features of the mix stay close to the original's.

Both objectives have a trivial all-keep optimum, so the learning problems
are shaped: noise masks start from all-zeros with a capped step count
(regions that matter to the features get protected first), and jigsaw
masks carry a hard aux-patch budget instead of a sparsity term.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import OptimizationError, ShapeError
from .nn.models import Classifier


@dataclass
class NoiseMask:
    """Per-pixel blend weights in [0, 1]; 1 keeps the pixel, 0 noises it."""

    mask: np.ndarray  # same shape as the image (C, H, W)
    class_id: int
    noise_std: float
    sparsity_weight: float
    objective_history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=np.float64)
        if self.mask.min() < 0.0 or self.mask.max() > 1.0:
            raise ValueError("mask entries must lie in [0, 1]")

    def sha(self) -> str:
        return hashlib.sha256(self.mask.tobytes()).hexdigest()[:16]


@dataclass
class JigsawMask:
    """Binary patch mask on a (rows, cols) grid; 0 marks auxiliary patches."""

    mask: np.ndarray  # (H, W), entries in {0, 1}, broadcast over channels
    grid: tuple[int, int]
    beta: float
    distance: float = float("nan")

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=np.float64)
        if not np.isin(self.mask, (0.0, 1.0)).all():
            raise ValueError("jigsaw mask must be binary")

    @property
    def aux_patch_count(self) -> int:
        rows, cols = self.grid
        ph, pw = self.mask.shape[0] // rows, self.mask.shape[1] // cols
        patches = self.mask.reshape(rows, ph, cols, pw)
        return int(rows * cols - patches[:, 0, :, 0].sum())

    def sha(self) -> str:
        return hashlib.sha256(self.mask.tobytes()).hexdigest()[:16]


def perturb(x: np.ndarray, mask: np.ndarray, sigma: float, rng: np.random.Generator):
    """Blend ``x`` with Gaussian noise: out[i] = m[i]*x[i] + (1-m[i])*noise.

    Noise is N(0, sigma^2) i.i.d. per element; the result is clipped to
    [0, 1]. An all-ones mask returns ``x`` exactly.
    """
    x = np.asarray(x, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != x.shape:
        raise ShapeError(f"mask shape {mask.shape} != image shape {x.shape}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    eta = rng.normal(0.0, sigma, size=x.shape)
    return np.clip(mask * x + (1.0 - mask) * eta, 0.0, 1.0)


# -- feature plumbing -----------------------------------------------------------


def _features(teacher: Classifier, x: np.ndarray, k: int):
    """Activation after block k, unflattened, via the teacher's frozen forward."""
    out = np.asarray(x, dtype=teacher.dtype)
    for block in teacher.blocks[:k]:
        out = block.forward(out, train=False)
    return out


def _feature_input_grad(teacher: Classifier, dfeat: np.ndarray, k: int) -> np.ndarray:
    dout = dfeat
    for block in reversed(teacher.blocks[:k]):
        dout = block.backward(dout)
    return dout


def feature_distance(teacher: Classifier, k: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance between block-k features of two image batches."""
    fa = _features(teacher, a, k).reshape(len(a), -1)
    fb = _features(teacher, b, k).reshape(len(b), -1)
    return ((fa - fb) ** 2).sum(axis=1).astype(np.float64)


# -- noise masks -----------------------------------------------------------------


def learn_noise_masks(
    images: np.ndarray,
    labels: np.ndarray,
    teacher: Classifier,
    k: int | None = None,
    lam: float = 0.1,
    sigma: float = 0.3,
    steps: int = 200,
    lr: float = 0.05,
    rng: np.random.Generator | None = None,
    init: np.ndarray | None = None,
) -> list[NoiseMask]:
    """Learn one noise mask per image (batched; samples are independent).

    Gradient descent on mask m of
    ``||phi(perturb(x; m)) - phi(x)||^2 - lam * ||m||_1`` with noise
    resampled every step, m clipped to [0, 1], starting from all-zeros
    (``init`` overrides the start, in [0, 1]). The best-so-far mask per
    sample (by the sampled objective) is returned.
    """
    if k is None:
        k = teacher.conv_depth
    elif not 0 < k <= len(teacher.blocks):
        raise ValueError(f"layer index {k} out of range")
    if rng is None:
        rng = np.random.default_rng(0)
    x = np.asarray(images, dtype=np.float64)
    n = len(x)
    target = _features(teacher, x, k)
    target_flat = target.reshape(n, -1)

    m = np.zeros_like(x) if init is None else np.broadcast_to(
        np.asarray(init, dtype=np.float64), x.shape
    ).copy()
    best_m = m.copy()
    best_obj = np.full(n, np.inf)
    history: list[float] = []
    for _ in range(steps):
        eta = rng.normal(0.0, sigma, size=x.shape)
        pre = m * x + (1.0 - m) * eta
        psi = np.clip(pre, 0.0, 1.0)
        feats = _features(teacher, psi, k)
        delta = feats.reshape(n, -1) - target_flat
        dist = (delta**2).sum(axis=1)
        obj = dist - lam * m.reshape(n, -1).sum(axis=1)
        if not np.isfinite(obj).all():
            raise OptimizationError("noise-mask objective became non-finite")
        improved = obj < best_obj
        best_obj = np.where(improved, obj, best_obj)
        best_m[improved] = m[improved]
        history.append(float(best_obj.mean()))

        dpsi = _feature_input_grad(teacher, (2.0 * delta).reshape(feats.shape), k)
        inside = (pre >= 0.0) & (pre <= 1.0)
        grad = np.asarray(dpsi, dtype=np.float64) * inside * (x - eta) - lam
        m = np.clip(m - lr * grad, 0.0, 1.0)

    return [
        NoiseMask(
            mask=best_m[i],
            class_id=int(labels[i]),
            noise_std=sigma,
            sparsity_weight=lam,
            objective_history=history,
        )
        for i in range(n)
    ]


def learn_noise_mask(
    x: np.ndarray,
    teacher: Classifier,
    k: int | None = None,
    lam: float = 0.1,
    sigma: float = 0.3,
    steps: int = 200,
    lr: float = 0.05,
    rng: np.random.Generator | None = None,
    class_id: int = 0,
    init: np.ndarray | None = None,
) -> NoiseMask:
    """Single-image form of :func:`learn_noise_masks`."""
    masks = learn_noise_masks(
        np.asarray(x)[None], np.array([class_id]), teacher, k=k, lam=lam, sigma=sigma,
        steps=steps, lr=lr, rng=rng, init=init,
    )
    return masks[0]


# -- jigsaw masks -----------------------------------------------------------------


def jigsaw_mix(x_star: np.ndarray, x_aux: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Patchwise mix: mask-one pixels from ``x_star``, mask-zero from ``x_aux``."""
    x_star = np.asarray(x_star, dtype=np.float64)
    x_aux = np.asarray(x_aux, dtype=np.float64)
    if x_star.shape != x_aux.shape:
        raise ShapeError(f"image shapes differ: {x_star.shape} vs {x_aux.shape}")
    m = np.asarray(mask, dtype=np.float64)
    if not np.isin(m, (0.0, 1.0)).all():
        raise ValueError("jigsaw mask must be binary")
    if m.shape != x_star.shape[-2:]:
        raise ShapeError(f"mask shape {m.shape} != image plane {x_star.shape[-2:]}")
    return m * x_star + (1.0 - m) * x_aux


def _project_capped_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Project onto {0 <= a <= 1, sum(a) = total} by bisection on a shift."""
    lo, hi = v.min() - 1.0, v.max()
    for _ in range(50):
        tau = 0.5 * (lo + hi)
        s = np.clip(v - tau, 0.0, 1.0).sum()
        if s > total:
            lo = tau
        else:
            hi = tau
    return np.clip(v - 0.5 * (lo + hi), 0.0, 1.0)


def _upsample(alpha: np.ndarray, ph: int, pw: int) -> np.ndarray:
    return np.kron(alpha, np.ones((ph, pw)))


def _mask_from_keep_patches(keep: np.ndarray, rows, cols, ph, pw) -> np.ndarray:
    return _upsample(keep.reshape(rows, cols).astype(np.float64), ph, pw)


def learn_jigsaw_mask(
    x_star: np.ndarray,
    x_aux: np.ndarray,
    teacher: Classifier,
    k: int | None = None,
    grid: tuple[int, int] = (4, 4),
    beta: float = 0.3,
    steps: int = 120,
    lr: float = 0.05,
) -> JigsawMask:
    """Choose aux-patch placement minimizing the teacher-feature distance.

    ``round(beta * rows * cols)`` patches must come from the auxiliary
    image; placement is optimized with a continuous per-patch relaxation
    (projected gradient on the capped simplex), rounded to the best keep
    set, then refined by single-swap local search on the true objective.
    """
    x_star = np.asarray(x_star, dtype=np.float64)
    x_aux = np.asarray(x_aux, dtype=np.float64)
    if x_star.shape != x_aux.shape:
        raise ShapeError(f"image shapes differ: {x_star.shape} vs {x_aux.shape}")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if k is None:
        k = teacher.conv_depth
    rows, cols = grid
    c, h, w = x_star.shape
    if h % rows or w % cols:
        raise ShapeError(f"grid {grid} does not divide image plane {h}x{w}")
    ph, pw = h // rows, w // cols
    n_patches = rows * cols
    k_aux = int(round(beta * n_patches))
    if k_aux < 1:
        raise OptimizationError(
            f"beta {beta} on a {rows}x{cols} grid yields zero auxiliary patches"
        )
    keep_total = n_patches - k_aux

    target = _features(teacher, x_star[None], k)
    target_flat = target.reshape(-1)

    def hard_distance(keeps: np.ndarray) -> np.ndarray:
        """True objective for a batch of keep-sets (bool arrays of n_patches)."""
        mixes = np.stack(
            [
                jigsaw_mix(x_star, x_aux, _mask_from_keep_patches(kp, rows, cols, ph, pw))
                for kp in keeps
            ]
        )
        feats = _features(teacher, mixes, k).reshape(len(keeps), -1)
        return ((feats - target_flat) ** 2).sum(axis=1).astype(np.float64)

    # continuous relaxation over keep scores
    alpha = np.full((rows, cols), keep_total / n_patches)
    diff = x_star - x_aux
    for _ in range(steps):
        up = _upsample(alpha, ph, pw)
        mix = up * x_star + (1.0 - up) * x_aux
        feats = _features(teacher, mix[None], k)
        delta = feats.reshape(-1) - target_flat
        if not np.isfinite(delta).all():
            raise OptimizationError("jigsaw objective became non-finite")
        dmix = _feature_input_grad(teacher, (2.0 * delta).reshape(feats.shape), k)[0]
        dup = (np.asarray(dmix, dtype=np.float64) * diff).sum(axis=0)
        dalpha = dup.reshape(rows, ph, cols, pw).sum(axis=(1, 3))
        alpha = _project_capped_simplex(alpha - lr * dalpha, keep_total)

    # round: keep the highest-score patches (ties by lowest index)
    order = np.argsort(-alpha.reshape(-1), kind="stable")
    keep = np.zeros(n_patches, dtype=bool)
    keep[order[:keep_total]] = True
    best = hard_distance(keep[None])[0]

    # single-swap refinement on the true objective
    for _ in range(n_patches):
        keep_idx = np.flatnonzero(keep)
        aux_idx = np.flatnonzero(~keep)
        candidates = []
        for i in keep_idx:
            for j in aux_idx:
                cand = keep.copy()
                cand[i], cand[j] = False, True
                candidates.append(cand)
        if not candidates:
            break
        dists = hard_distance(np.stack(candidates))
        if dists.min() < best - 1e-12:
            best = float(dists.min())
            keep = candidates[int(dists.argmin())]
        else:
            break

    mask = _mask_from_keep_patches(keep, rows, cols, ph, pw)
    return JigsawMask(mask=mask, grid=(rows, cols), beta=beta, distance=float(best))
