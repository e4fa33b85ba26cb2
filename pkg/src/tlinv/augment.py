"""One-shot data augmentation around the few samples an adversary holds.

For every held sample this produces noise-augmented neighbors (via learned
noise masks) plus either jigsaw mixes against an auxiliary pool or plain
geometric variants (random small rotation + shift with reflective padding;
the right choice for stroke-like images where patch swaps destroy the
class content).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .dataset import ImageDataset
from .errors import ConfigError
from .masks import learn_jigsaw_mask, learn_noise_masks, jigsaw_mix, perturb
from .nn.models import Classifier

MAX_ROTATION_DEG = 15.0
MAX_SHIFT_FRACTION = 0.10


@dataclass(frozen=True)
class AugmentationPolicy:
    n_noise: int = 20
    n_jigsaw_or_geometric: int = 20
    mode: str = "geometric"  # "jigsaw" | "geometric"
    aux_matching: str = "uniform"
    noise_sigma: float = 0.3
    noise_lambda: float = 0.1
    mask_steps: int = 200
    mask_lr: float = 0.05
    jigsaw_grid: tuple[int, int] = (4, 4)
    jigsaw_beta: float = 0.3
    jigsaw_steps: int = 60

    def __post_init__(self):
        if self.n_noise < 0 or self.n_jigsaw_or_geometric < 0:
            raise ConfigError("augmentation counts must be >= 0")
        if self.mode not in ("jigsaw", "geometric"):
            raise ConfigError(f"unknown augmentation mode {self.mode!r}")

    def to_dict(self) -> dict:
        from dataclasses import asdict

        d = asdict(self)
        d["jigsaw_grid"] = list(self.jigsaw_grid)
        return d


def geometric_transform(x: np.ndarray, angle_deg: float, shift: tuple[float, float]):
    """Rotate about the center then shift, bilinear with reflective padding."""
    c, h, w = x.shape
    theta = np.deg2rad(angle_deg)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    center = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
    # output coord -> input coord: undo shift, rotate back around the center
    offset = center - rot @ (center + np.asarray(shift))
    out = np.stack(
        [
            ndimage.affine_transform(plane, rot, offset=offset, order=1, mode="reflect")
            for plane in x
        ]
    )
    return np.clip(out, 0.0, 1.0)


def geometric_augment(x: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n random rotation/shift variants of one image, values kept in [0, 1]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    _, h, w = x.shape
    out = []
    for _ in range(n):
        angle = rng.uniform(-MAX_ROTATION_DEG, MAX_ROTATION_DEG)
        shift = (
            rng.uniform(-MAX_SHIFT_FRACTION, MAX_SHIFT_FRACTION) * h,
            rng.uniform(-MAX_SHIFT_FRACTION, MAX_SHIFT_FRACTION) * w,
        )
        out.append(geometric_transform(x, angle, shift))
    return np.stack(out)


def _pick_aux_index(policy: AugmentationPolicy, aux_set: ImageDataset,
                    rng: np.random.Generator) -> int:
    if policy.aux_matching == "uniform":
        return int(rng.integers(0, len(aux_set)))
    raise ConfigError(f"unknown aux matching rule {policy.aux_matching!r}")


def build_aug_dataset(
    d_s: ImageDataset,
    aux_set: ImageDataset | None,
    policy: AugmentationPolicy,
    teacher: Classifier,
    k: int | None = None,
    rng: np.random.Generator | None = None,
    with_provenance: bool = False,
):
    """Expand the adversary's samples into a labeled training pool.

    Every original sample contributes itself, ``n_noise`` noise-mask
    variants, and ``n_jigsaw_or_geometric`` jigsaw or geometric variants,
    all labeled with the sample's class.
    """
    if policy.mode == "jigsaw" and aux_set is None:
        raise ConfigError("jigsaw augmentation requires an auxiliary sample set")
    if rng is None:
        rng = np.random.default_rng(0)
    if k is None:
        k = teacher.conv_depth

    images = [d_s.images]
    labels = [d_s.labels]
    records = [
        {"source_index": i, "method": "original", "mask_sha": None}
        for i in range(len(d_s))
    ]

    masks = None
    if policy.n_noise > 0:
        masks = learn_noise_masks(
            d_s.images,
            d_s.labels,
            teacher,
            k=k,
            lam=policy.noise_lambda,
            sigma=policy.noise_sigma,
            steps=policy.mask_steps,
            lr=policy.mask_lr,
            rng=rng,
        )

    for i in range(len(d_s)):
        x = d_s.images[i]
        label = int(d_s.labels[i])
        if masks is not None:
            noisy = np.stack(
                [
                    perturb(x, masks[i].mask, policy.noise_sigma, rng)
                    for _ in range(policy.n_noise)
                ]
            )
            images.append(noisy)
            labels.append(np.full(policy.n_noise, label))
            records += [
                {"source_index": i, "method": "noise-mask", "mask_sha": masks[i].sha()}
                for _ in range(policy.n_noise)
            ]
        if policy.n_jigsaw_or_geometric > 0:
            if policy.mode == "geometric":
                moved = geometric_augment(x, policy.n_jigsaw_or_geometric, rng)
                images.append(moved)
                labels.append(np.full(policy.n_jigsaw_or_geometric, label))
                records += [
                    {"source_index": i, "method": "geometric", "mask_sha": None}
                    for _ in range(policy.n_jigsaw_or_geometric)
                ]
            else:
                mixes = []
                for _ in range(policy.n_jigsaw_or_geometric):
                    aux = aux_set.images[_pick_aux_index(policy, aux_set, rng)]
                    jig = learn_jigsaw_mask(
                        x,
                        aux,
                        teacher,
                        k=k,
                        grid=policy.jigsaw_grid,
                        beta=policy.jigsaw_beta,
                        steps=policy.jigsaw_steps,
                    )
                    mixes.append(jigsaw_mix(x, aux, jig.mask))
                    records.append(
                        {"source_index": i, "method": "jigsaw", "mask_sha": jig.sha()}
                    )
                images.append(np.stack(mixes))
                labels.append(np.full(policy.n_jigsaw_or_geometric, label))

    ds = ImageDataset(
        images=np.concatenate(images),
        labels=np.concatenate(labels),
        num_classes=d_s.num_classes,
        class_names=d_s.class_names,
    )
    if with_provenance:
        return ds, records
    return ds


def save_augmented(ds: ImageDataset, records: list[dict], out_dir, seed: int) -> None:
    """Persist to the image-folder layout plus a provenance JSON."""
    out = Path(out_dir)
    names = ds.class_names or [str(c) for c in range(ds.num_classes)]
    for i in range(len(ds)):
        d = out / names[int(ds.labels[i])]
        d.mkdir(parents=True, exist_ok=True)
        arr = np.round(ds.images[i] * 255).astype(np.uint8)
        img = arr[0] if arr.shape[0] == 1 else arr.transpose(1, 2, 0)
        Image.fromarray(img).save(d / f"{i:06d}.png")
    payload = {"seed": seed, "samples": records}
    (out / "provenance.json").write_text(json.dumps(payload, indent=2))
