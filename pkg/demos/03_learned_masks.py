"""Learned masks: noise blending that spares class-specific regions, and
budget-constrained jigsaw mixing.

The noise mask starts all-zeros (pure noise) and gradient steps raise it
where the teacher's conv features are most sensitive, so the class content
gets protected first. The jigsaw mask must hand a fixed fraction of grid
patches to an auxiliary image and places them where the teacher features
move least; on a 2x2 grid the result is checked against brute force.

Run:  python demos/03_learned_masks.py
"""

import itertools

import numpy as np

from tlinv import make_stroke_digits, make_texture_shapes, perturb
from tlinv.evaluate import reconstruction_grid
from tlinv.masks import feature_distance, jigsaw_mix, learn_jigsaw_mask, learn_noise_mask
from tlinv.nn import ArchitectureSpec, TrainConfig, build_classifier, train_classifier

from pathlib import Path

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

spec = ArchitectureSpec(
    conv_blocks=((8, 3, 1), (16, 3, 1), (32, 3, 1)),
    fc_dims=(64, 10),
    num_classes=10,
    input_shape=(1, 32, 32),
)
teacher = build_classifier(spec, seed=0)
shapes = make_texture_shapes(60, image_size=32, seed=5)
train_classifier(teacher, shapes, None, TrainConfig(epochs=5, seed=0))
digits = make_stroke_digits(2, image_size=32, seed=7)
x = digits.images[0]
k = teacher.conv_depth

# -- noise masks ---------------------------------------------------------------
mask = learn_noise_mask(x, teacher, steps=150, rng=np.random.default_rng(0),
                        class_id=int(digits.labels[0]))
print(f"noise mask: mean={mask.mask.mean():.3f} "
      f"(fraction of the image kept rather than noised)")
print(f"objective history: start {mask.objective_history[0]:.1f} "
      f"-> end {mask.objective_history[-1]:.1f} (best-so-far, non-increasing)")

rng = np.random.default_rng(1)
noisy_learned = perturb(x, mask.mask, 0.3, rng)
noisy_blind = perturb(x, np.zeros_like(x), 0.3, rng)
d_learned = feature_distance(teacher, k, noisy_learned[None], x[None])[0]
d_blind = feature_distance(teacher, k, noisy_blind[None], x[None])[0]
print(f"feature distance to original: learned mask {d_learned:.1f} "
      f"vs all-noise {d_blind:.1f} (learned must be closer)")
reconstruction_grid(
    np.stack([x, mask.mask, x]), np.stack([noisy_learned, noisy_blind, x * 0]),
    OUT / "noise_mask.png",
)
print(f"wrote {OUT / 'noise_mask.png'} (top: original, mask, original; "
      f"bottom: masked noise, blind noise)")

# -- jigsaw masks ---------------------------------------------------------------
aux = make_texture_shapes(1, image_size=32, seed=9).images[0]
jig = learn_jigsaw_mask(x, aux, teacher, grid=(2, 2), beta=0.25, steps=60)
print(f"jigsaw 2x2, one aux patch: achieved feature distance {jig.distance:.2f}")

best = np.inf
for cells in itertools.combinations(range(4), 1):
    hard = np.ones(4)
    hard[list(cells)] = 0
    m = np.kron(hard.reshape(2, 2), np.ones((16, 16)))
    best = min(best, feature_distance(teacher, k, jigsaw_mix(x, aux, m)[None], x[None])[0])
print(f"brute force over all single-patch placements: {best:.2f} (must match)")
mixed = jigsaw_mix(x, aux, jig.mask)
reconstruction_grid(np.stack([x, aux]), np.stack([mixed, jig.mask[None] * 1.0]),
                    OUT / "jigsaw.png")
print(f"wrote {OUT / 'jigsaw.png'}")
