"""Command-line interface.

Verbs compose over one output directory: each stage caches its artifacts
(checkpoint + manifest) keyed by config fingerprints, so e.g.
``train-teacher`` followed by ``attack`` followed by ``evaluate`` reuses
everything already built.

    tlinv train-teacher --config cfg.json --out runs/a
    tlinv train-student --config cfg.json --out runs/a
    tlinv augment      --config cfg.json --out runs/a
    tlinv attack       --method without-dt --config cfg.json --out runs/a
    tlinv evaluate     --defense top-h:5 --config cfg.json --out runs/a
    tlinv sweep        --axis classes --values 5,7,10 --out runs/sweep
    tlinv report       --out runs
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .augment import AugmentationPolicy, build_aug_dataset, save_augmented
from .errors import ConfigError, TlinvError
from .evaluate import MetricsReport
from .experiment import ExperimentConfig, Pipeline, phase_seed, run_sweep


def _load_config(args) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_json(args.config)
    else:
        config = ExperimentConfig.from_dict({})
    if args.seed is not None:
        config = config.with_overrides(seed=args.seed)
    return config


def _parse_defense(text: str | None) -> dict | None:
    if text is None or text == "none":
        return None
    try:
        kind, value = text.split(":", 1)
    except ValueError as err:
        raise ConfigError(f"defense must look like top-h:<h> or temp:<t>, got {text!r}") from err
    if kind == "top-h":
        return {"kind": "top-h", "value": int(value)}
    if kind == "temp":
        return {"kind": "temperature", "value": float(value)}
    raise ConfigError(f"unknown defense {kind!r}")


def cmd_train_teacher(args) -> int:
    pipe = Pipeline(_load_config(args), args.out)
    model = pipe.teacher()
    manifest = json.loads((Path(args.out) / "teacher.manifest.json").read_text())
    print(f"teacher ready: test accuracy {manifest['metrics'].get('test_accuracy'):.4f}")
    print(f"checkpoint: {Path(args.out) / 'teacher.npz'}")
    return 0


def cmd_train_student(args) -> int:
    pipe = Pipeline(_load_config(args), args.out)
    pipe.student()
    manifest = json.loads((Path(args.out) / "student.manifest.json").read_text())
    print(f"student ready: test accuracy {manifest['metrics'].get('test_accuracy'):.4f}")
    print(f"checkpoint: {Path(args.out) / 'student.npz'}")
    return 0


def cmd_augment(args) -> int:
    config = _load_config(args)
    pipe = Pipeline(config, args.out)
    data = pipe.datasets()
    teacher = pipe.teacher()
    policy = AugmentationPolicy(**config["augmentation"])
    seed = phase_seed(config.seed, "augment")
    ds, records = build_aug_dataset(
        data["d_s"], data["aux"], policy, teacher,
        rng=np.random.default_rng(seed), with_provenance=True,
    )
    out = Path(args.out) / "augmented"
    save_augmented(ds, records, out, seed=seed)
    print(f"augmented dataset: {len(ds)} samples ({len(data['d_s'])} originals) -> {out}")
    return 0


def cmd_attack(args) -> int:
    config = _load_config(args)
    if args.method:
        config = config.with_overrides(attack=args.method.replace("-", "_"))
    pipe = Pipeline(config, args.out)
    attack = pipe.run_attack()
    print(
        f"attack {attack['method']} trained; "
        f"student queries before evaluation: {attack['queries_pre_eval']}"
    )
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    if args.method:
        config = config.with_overrides(attack=args.method.replace("-", "_"))
    pipe = Pipeline(config, args.out)
    report = pipe.evaluate(defense_override=_parse_defense(args.defense))
    print(report.to_json())
    return 0


def cmd_sweep(args) -> int:
    config = _load_config(args)
    if args.method:
        config = config.with_overrides(attack=args.method.replace("-", "_"))
    values = [v for v in args.values.split(",") if v]
    reports = run_sweep(config, args.axis, [int(v) for v in values], args.out)
    for value, report in zip(values, reports):
        conf = (
            "-" if report.mean_confidence_error is None
            else f"{report.mean_confidence_error:.4f}"
        )
        print(
            f"{args.axis}={value}: inversion error {report.mean_inversion_error:.4f}, "
            f"confidence error {conf}"
        )
    print(f"table: {Path(args.out) / f'sweep-{args.axis}.csv'}")
    return 0


def cmd_report(args) -> int:
    root = Path(args.out)
    rows = []
    for path in sorted(root.rglob("metrics*.json")):
        try:
            report = MetricsReport.from_json(path.read_text())
        except (TypeError, KeyError, json.JSONDecodeError):
            continue
        rows.append((path, report))
    if not rows:
        print(f"no metrics files under {root}", file=sys.stderr)
        return 1
    table = root / "report.csv"
    with open(table, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["path", "method", "dataset", "classes", "samples_per_class", "defense",
             "inversion_error", "confidence_error", "argmax_preserved",
             "queries_pre_eval", "seed"]
        )
        for path, r in rows:
            defense = "-" if not r.defense else f"{r.defense['kind']}:{r.defense['value']:g}"
            writer.writerow(
                [
                    path.relative_to(root), r.method, r.dataset, r.num_classes,
                    r.student_samples_per_class, defense,
                    f"{r.mean_inversion_error:.6f}",
                    "" if r.mean_confidence_error is None else f"{r.mean_confidence_error:.6f}",
                    "" if r.argmax_preservation_rate is None
                    else f"{r.argmax_preservation_rate:.4f}",
                    r.student_queries_pre_eval,
                    r.seeds.get("seed"),
                ]
            )
    for path, r in rows:
        defense = "-" if not r.defense else f"{r.defense['kind']}:{r.defense['value']:g}"
        conf = "-" if r.mean_confidence_error is None else f"{r.mean_confidence_error:.4f}"
        print(
            f"{str(path.relative_to(root)):42s} {r.method:10s} defense={defense:10s} "
            f"inv={r.mean_inversion_error:.4f} conf={conf}"
        )
    print(f"table: {table}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlinv",
        description="Query-free model inversion against transfer-learning students",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, method_flag=False):
        p.add_argument("--config", type=str, default=None, help="experiment config JSON")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", type=str, default="tlinv-out", help="artifact directory")
        if method_flag:
            p.add_argument(
                "--method", choices=["with-dt", "without-dt", "direct"], default=None,
                help="attack method (overrides the config)",
            )

    common(sub.add_parser("train-teacher", help="train/cache the teacher model"))
    common(sub.add_parser("train-student", help="train/cache the victim student model"))
    common(sub.add_parser("augment", help="build and persist the augmented corpus"))
    common(sub.add_parser("attack", help="train the attack pipeline"), method_flag=True)
    eval_p = sub.add_parser("evaluate", help="evaluate the attack, optionally defended")
    common(eval_p, method_flag=True)
    eval_p.add_argument("--defense", type=str, default=None,
                        help="top-h:<h> or temp:<t>")
    sweep_p = sub.add_parser("sweep", help="sweep one factor, emit a combined CSV")
    common(sweep_p, method_flag=True)
    sweep_p.add_argument("--axis", choices=["classes", "data_size", "defense_h"],
                         required=True)
    sweep_p.add_argument("--values", type=str, required=True,
                         help="comma-separated values, e.g. 5,7,10")
    report_p = sub.add_parser("report", help="collect metrics files into one table")
    report_p.add_argument("--out", type=str, default="tlinv-out")
    return parser


HANDLERS = {
    "train-teacher": cmd_train_teacher,
    "train-student": cmd_train_student,
    "augment": cmd_augment,
    "attack": cmd_attack,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except TlinvError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
