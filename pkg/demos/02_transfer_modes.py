"""Teacher training and the three transfer-learning modes.

The student copies the teacher's first K blocks: deep-layer transfer
freezes everything but the last classification layer, mid-layer transfer
freezes the conv blocks, and full fine-tuning trains every block from the
teacher initialization. With a strong domain gap (shapes -> digits), more
tunable layers means higher accuracy.

Run:  python demos/02_transfer_modes.py   (about a minute on one CPU core)
"""

from tlinv import make_stroke_digits, make_texture_shapes, subsample_per_class, train_test_split
from tlinv.nn import (
    ArchitectureSpec,
    TrainConfig,
    build_classifier,
    evaluate_accuracy,
    train_classifier,
    transfer_student,
)

spec = ArchitectureSpec(
    conv_blocks=((8, 3, 1), (16, 3, 1), (32, 3, 1)),
    fc_dims=(128, 10),
    num_classes=10,
    input_shape=(1, 32, 32),
)

shapes = make_texture_shapes(150, image_size=32, seed=100)
digits = make_stroke_digits(150, image_size=32, seed=101)
shapes_train, shapes_test = train_test_split(shapes, 0.8, seed=0)
digits_train, digits_test = train_test_split(digits, 0.8, seed=0)

teacher = build_classifier(spec, seed=0)
_, teacher_acc = train_classifier(
    teacher, shapes_train, shapes_test, TrainConfig(epochs=8, seed=1, label_smoothing=0.05)
)
print(f"teacher (shapes): test accuracy {teacher_acc:.3f}")

student_pool = subsample_per_class(digits_train, 100, seed=2)
print(f"student task (digits): {len(student_pool)} training samples")
for mode in ("deep", "mid", "full"):
    student = transfer_student(
        teacher, mode, 10, student_pool,
        TrainConfig(epochs=15, seed=3, label_smoothing=0.05, weight_decay=1e-3),
    )
    acc = evaluate_accuracy(student, digits_test)
    frozen = sum(not t for t in student.trainable_mask)
    print(f"  mode={mode:5s} frozen blocks={frozen}  test accuracy {acc:.3f}")
print("across a strong domain gap, full fine-tuning should win, deep-layer lose")
