"""Output-vector defenses and the evaluation metrics.

Top-h filtering zeroes all but the h largest confidences (never flipping
the predicted class); temperature scaling renormalizes the vector through
a softened softmax. The reconstruction-quality bound check verifies, pair
by pair, that perturbing an input cannot change inversion quality by more
than (l+1)||eta|| for the empirical stretch ratio l.

Run:  python demos/06_defenses_and_metrics.py
"""

import numpy as np

from tlinv import (
    confidence_vector_error,
    data_inversion_error,
    lipschitz_chain_check,
    make_stroke_digits,
    temperature_softmax,
    top_h_filter,
)
from tlinv.attack_datafree import invert_from_confidence, train_attack_model
from tlinv.nn import (
    ArchitectureSpec,
    TrainConfig,
    build_classifier,
    build_decoder,
    default_decoder_blocks,
    predict_confidences,
    train_classifier,
)

# -- defense mechanics ------------------------------------------------------------
y = np.array([0.55, 0.2, 0.1, 0.08, 0.07])
print(f"confidence vector      {y}")
print(f"top-2 filtered         {top_h_filter(y, 2)}  (argmax preserved, rest zeroed)")
print(f"temperature t=2        {np.round(temperature_softmax(y, 2.0), 4)}")
print(f"temperature t=1e6      {np.round(temperature_softmax(y, 1e6), 4)}  (-> uniform)")

# -- metrics ----------------------------------------------------------------------
a = np.zeros((1, 4, 4))
print(f"inversion error of an all-ones reconstruction of zeros: "
      f"{data_inversion_error(a, np.ones_like(a)):.1f}")
print(f"confidence error, opposite one-hots: "
      f"{confidence_vector_error(np.array([1.0, 0]), np.array([0, 1.0])):.4f}")

# -- the perturbation bound on a real reconstruction map -----------------------------
digits = make_stroke_digits(30, image_size=16, seed=0)
spec = ArchitectureSpec(conv_blocks=((4, 3, 1), (8, 3, 1)), fc_dims=(32, 10),
                        num_classes=10, input_shape=(1, 16, 16))
model = build_classifier(spec, seed=0)
train_classifier(model, digits, None, TrainConfig(epochs=6, seed=1))
decoder = build_decoder(10, (1, 16, 16), default_decoder_blocks((1, 16, 16), width=32),
                        seed=2)
train_attack_model(decoder, model, digits,
                   TrainConfig(epochs=10, optimizer="adam", learning_rate=1e-3, seed=3))


def reconstruct(x):
    return invert_from_confidence(decoder, model.predict(x[None]))[0]


rng = np.random.default_rng(4)
worst = -np.inf
for i in range(25):
    x = digits.images[rng.integers(len(digits))]
    eta = rng.normal(0, 0.05, size=x.shape)
    holds, (left, middle, right) = lipschitz_chain_check(x, eta, reconstruct)
    assert holds
    worst = max(worst, left - right)
print("perturbation bound held on 25 random pairs "
      f"(worst left-right slack {worst:.3e}; negative means satisfied)")
