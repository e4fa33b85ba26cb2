"""Attack pipeline contracts: access counting, frozen targets, shape checks."""

import numpy as np
import pytest

from tlinv.attack_datafree import invert_from_confidence, train_attack_model, train_shadow_model
from tlinv.attack_teacher import (
    build_shadow_from_teacher,
    invert_student_output,
    joint_feature_loss,
    train_shadow_and_conversion,
    train_teacher_inversion,
)
from tlinv.baseline import direct_inversion_train
from tlinv.dataset import ImageDataset, subsample_per_class, train_test_split
from tlinv.errors import DataError, ShapeError
from tlinv.evaluate import constant_image_baseline_error
from tlinv.nn import (
    ArchitectureSpec,
    ConversionNet,
    transfer_student,
    TrainConfig,
    build_classifier,
    build_decoder,
    default_decoder_blocks,
    reconstruction_mse,
    strip_to_extractor,
    train_classifier,
)
from tlinv.synthetic import make_stroke_digits, make_texture_shapes

SIZE = 16
SPEC = ArchitectureSpec(
    conv_blocks=((4, 3, 1), (8, 3, 1)), fc_dims=(32, 10), num_classes=10,
    input_shape=(1, SIZE, SIZE),
)
DEC_BLOCKS = default_decoder_blocks((1, SIZE, SIZE), width=32)


@pytest.fixture(scope="module")
def teacher_world():
    shapes = make_texture_shapes(40, image_size=SIZE, seed=0)
    train, test = train_test_split(shapes, 0.8, seed=0)
    teacher = build_classifier(SPEC, seed=0)
    train_classifier(teacher, train, None, TrainConfig(epochs=4, seed=0))
    return teacher, train, test


@pytest.fixture(scope="module")
def digits_world():
    digits = make_stroke_digits(40, image_size=SIZE, seed=1)
    return train_test_split(digits, 0.8, seed=0)


# -- teacher inversion (step 1) -----------------------------------------------


def test_train_teacher_inversion_learns_and_freezes(teacher_world):
    teacher, train, test = teacher_world
    ext = strip_to_extractor(teacher)
    ext_hash = ext.param_hash()
    dec = build_decoder(ext.output_dim, (1, SIZE, SIZE), DEC_BLOCKS, seed=0)
    train_teacher_inversion(dec, ext, train, TrainConfig(epochs=6, optimizer="adam",
                                                         learning_rate=1e-3, seed=0))
    assert dec.training_log[-1]["loss"] < dec.training_log[0]["loss"]
    assert ext.param_hash() == ext_hash
    from tlinv.attack_teacher import extract_features

    held = reconstruction_mse(dec, extract_features(ext, test.images), test.images)
    floor = constant_image_baseline_error(train.images, test.images)
    assert held < floor


def test_train_teacher_inversion_zero_epochs_noop(teacher_world):
    teacher, train, _ = teacher_world
    ext = strip_to_extractor(teacher)
    dec = build_decoder(ext.output_dim, (1, SIZE, SIZE), DEC_BLOCKS, seed=1)
    before = dec.param_hash()
    train_teacher_inversion(dec, ext, train, TrainConfig(epochs=0))
    assert dec.param_hash() == before


def test_train_teacher_inversion_dim_mismatch(teacher_world):
    teacher, train, _ = teacher_world
    ext = strip_to_extractor(teacher)
    dec = build_decoder(ext.output_dim + 1, (1, SIZE, SIZE), DEC_BLOCKS, seed=0)
    with pytest.raises(ShapeError):
        train_teacher_inversion(dec, ext, train, TrainConfig(epochs=1))


# -- shadow-from-teacher (step 2) -----------------------------------------------


def test_build_shadow_copies_all_but_head(teacher_world):
    teacher, _, _ = teacher_world
    shadow = build_shadow_from_teacher(teacher, 7, seed=3)
    body = list(range(len(teacher.blocks) - 1))
    assert shadow.param_hash(body) == teacher.param_hash(body)
    assert shadow.num_classes == 7
    out = shadow.predict(np.zeros((2, 1, SIZE, SIZE)))
    assert out.shape == (2, 7)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-5)


def test_build_shadow_same_width_fresh_head(teacher_world):
    teacher, _, _ = teacher_world
    shadow = build_shadow_from_teacher(teacher, 10, seed=3)
    last = len(teacher.blocks) - 1
    assert shadow.param_hash([last]) != teacher.param_hash([last])


def test_joint_training_decreases_loss_and_spares_student(teacher_world, digits_world):
    teacher, d_t, _ = teacher_world
    dg_train, dg_test = digits_world
    d_s = subsample_per_class(dg_train, 3, seed=0)
    ext = strip_to_extractor(teacher)
    shadow = build_shadow_from_teacher(teacher, 10, seed=1)
    conv = ConversionNet(10, ext.output_dim, seed=1)
    # a pretend victim: query_count must stay zero through training
    victim = build_classifier(SPEC, seed=9)
    train_shadow_and_conversion(shadow, conv, ext, d_t, d_s,
                                TrainConfig(epochs=5, optimizer="adam",
                                            learning_rate=1e-3, seed=0))
    assert shadow.training_log[-1]["loss"] < shadow.training_log[0]["loss"]
    assert victim.query_count == 0


def test_joint_training_union_beats_student_only(teacher_world, digits_world):
    # same-domain check: teacher pool drawn from the same corpus as the
    # student samples, so adding it must reveal a better input distribution
    digits_train, digits_test = digits_world
    teacher = build_classifier(SPEC, seed=4)
    train_classifier(teacher, digits_train, None, TrainConfig(epochs=4, seed=0))
    ext = strip_to_extractor(teacher)
    d_s = subsample_per_class(digits_train, 2, seed=1)
    cfg = TrainConfig(epochs=6, optimizer="adam", learning_rate=1e-3, seed=0)

    shadow_u = build_shadow_from_teacher(teacher, 10, seed=1)
    conv_u = ConversionNet(10, ext.output_dim, seed=1)
    train_shadow_and_conversion(shadow_u, conv_u, ext, digits_train, d_s, cfg)
    loss_union = joint_feature_loss(shadow_u, conv_u, ext, digits_test)

    shadow_s = build_shadow_from_teacher(teacher, 10, seed=1)
    conv_s = ConversionNet(10, ext.output_dim, seed=1)
    train_shadow_and_conversion(shadow_s, conv_s, ext, d_s, d_s, cfg)
    loss_student_only = joint_feature_loss(shadow_s, conv_s, ext, digits_test)

    assert loss_union < loss_student_only


def test_joint_training_dim_mismatch(teacher_world, digits_world):
    teacher, d_t, _ = teacher_world
    dg_train, _ = digits_world
    ext = strip_to_extractor(teacher)
    shadow = build_shadow_from_teacher(teacher, 10, seed=1)
    bad_conv = ConversionNet(10, ext.output_dim + 3, seed=1)
    with pytest.raises(ShapeError):
        train_shadow_and_conversion(shadow, bad_conv, ext, d_t, dg_train,
                                    TrainConfig(epochs=1))


# -- inversion entry points ----------------------------------------------------


def test_invert_student_output_pure_and_shaped(teacher_world):
    teacher, _, _ = teacher_world
    ext = strip_to_extractor(teacher)
    conv = ConversionNet(10, ext.output_dim, seed=0)
    dec = build_decoder(ext.output_dim, (1, SIZE, SIZE), DEC_BLOCKS, seed=0)
    y = np.full(10, 0.1)
    a = invert_student_output(y, conv, dec)
    b = invert_student_output(y, conv, dec)
    assert a.shape == (1, SIZE, SIZE)
    np.testing.assert_array_equal(a, b)
    assert a.min() >= 0.0 and a.max() <= 1.0
    with pytest.raises(ShapeError):
        invert_student_output(np.zeros(9), conv, dec)


def test_invert_from_confidence_pure_and_shaped():
    dec = build_decoder(10, (1, SIZE, SIZE), DEC_BLOCKS, seed=0)
    y = np.full(10, 0.1)
    a = invert_from_confidence(dec, y)
    b = invert_from_confidence(dec, y)
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ShapeError):
        invert_from_confidence(dec, np.zeros((2, 12)))


def test_one_hot_prototypes_distinct(teacher_world, digits_world):
    teacher, _, _ = teacher_world
    dg_train, _ = digits_world
    shadow = train_shadow_model(teacher, "full", dg_train,
                                TrainConfig(epochs=4, seed=0))
    dec = build_decoder(10, (1, SIZE, SIZE), DEC_BLOCKS, seed=0)
    train_attack_model(dec, shadow, dg_train,
                       TrainConfig(epochs=8, optimizer="adam", learning_rate=1e-3, seed=0))
    protos = invert_from_confidence(dec, np.eye(10))
    for i in range(10):
        for j in range(i + 1, 10):
            assert float(np.mean((protos[i] - protos[j]) ** 2)) > 0


# -- data-free attack pieces -----------------------------------------------------


def test_train_attack_model_shadow_read_only(teacher_world, digits_world):
    teacher, _, _ = teacher_world
    dg_train, _ = digits_world
    shadow = train_shadow_model(teacher, "mid", dg_train, TrainConfig(epochs=2, seed=0))
    before = shadow.param_hash()
    dec = build_decoder(10, (1, SIZE, SIZE), DEC_BLOCKS, seed=0)
    train_attack_model(dec, shadow, dg_train,
                       TrainConfig(epochs=2, optimizer="adam", learning_rate=1e-3, seed=0))
    assert shadow.param_hash() == before


def test_train_attack_model_zero_epochs_noop(teacher_world, digits_world):
    teacher, _, _ = teacher_world
    dg_train, _ = digits_world
    shadow = train_shadow_model(teacher, "deep", dg_train, TrainConfig(epochs=1, seed=0))
    dec = build_decoder(10, (1, SIZE, SIZE), DEC_BLOCKS, seed=2)
    before = dec.param_hash()
    train_attack_model(dec, shadow, dg_train, TrainConfig(epochs=0))
    assert dec.param_hash() == before


def test_train_attack_model_dim_mismatch(teacher_world, digits_world):
    teacher, _, _ = teacher_world
    dg_train, _ = digits_world
    shadow = train_shadow_model(teacher, "deep", dg_train, TrainConfig(epochs=1, seed=0))
    dec = build_decoder(12, (1, SIZE, SIZE), DEC_BLOCKS, seed=0)
    with pytest.raises(ShapeError):
        train_attack_model(dec, shadow, dg_train, TrainConfig(epochs=1))


# -- direct baseline ---------------------------------------------------------------


def test_direct_baseline_queries_once_per_sample(teacher_world, digits_world):
    teacher, _, _ = teacher_world
    dg_train, dg_test = digits_world
    student = train_shadow_model(teacher, "full", dg_train, TrainConfig(epochs=3, seed=0))
    student.query_count = 0
    dec = build_decoder(10, (1, SIZE, SIZE), DEC_BLOCKS, seed=0)
    direct_inversion_train(student.predict, dg_test, dec,
                           TrainConfig(epochs=5, optimizer="adam",
                                       learning_rate=1e-3, seed=0))
    assert student.query_count == len(dg_test)  # cached: one query per sample


def test_direct_baseline_rejects_empty_dataset():
    with pytest.raises(DataError):
        ImageDataset(images=np.zeros((0, 1, 4, 4)), labels=np.zeros(0), num_classes=1)


def test_direct_baseline_dim_mismatch(teacher_world, digits_world):
    teacher, _, _ = teacher_world
    dg_train, _ = digits_world
    student = train_shadow_model(teacher, "full", dg_train, TrainConfig(epochs=1, seed=0))
    dec = build_decoder(9, (1, SIZE, SIZE), DEC_BLOCKS, seed=0)
    with pytest.raises(ShapeError):
        direct_inversion_train(student.predict, dg_train, dec, TrainConfig(epochs=1))


def test_joint_training_loss_decreases_across_seeds(teacher_world, digits_world):
    from tlinv.nn import strip_to_extractor as strip

    teacher, d_t, _ = teacher_world
    dg_train, _ = digits_world
    d_s = subsample_per_class(dg_train, 3, seed=0)
    ext = strip(teacher)
    monotone_runs = 0
    for seed in range(5):
        shadow = build_shadow_from_teacher(teacher, 10, seed=seed)
        conv = ConversionNet(10, ext.output_dim, seed=seed)
        train_shadow_and_conversion(
            shadow, conv, ext, d_t, d_s,
            TrainConfig(epochs=5, optimizer="adam", learning_rate=1e-3, seed=seed),
        )
        losses = [e["loss"] for e in shadow.training_log]
        monotone_runs += int(all(b < a for a, b in zip(losses, losses[1:])))
    assert monotone_runs >= 4  # strictly decreasing on at least 90% of runs
