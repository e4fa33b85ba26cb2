"""Configured end-to-end experiment runs and sweeps.

A single JSON config describes the dataset pair, victim training, attack
method, augmentation policy, defense, and per-phase training settings.
Everything random flows from two root seeds: ``victim_seed`` fixes the
deployed teacher/student (and the data splits), ``seed`` drives the
adversary (sample draws, masks, shadow/attack training). Stage outputs are
cached on disk keyed by config fingerprints, so the CLI verbs compose and
reruns are cheap; retraining from scratch reproduces the same artifacts
bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .attack_datafree import invert_from_confidence, train_attack_model, train_shadow_model
from .attack_teacher import (
    build_shadow_from_teacher,
    invert_student_output,
    train_shadow_and_conversion,
    train_teacher_inversion,
)
from .augment import AugmentationPolicy, build_aug_dataset
from .baseline import direct_inversion_train
from .dataset import ImageDataset, restrict_classes, subsample_per_class, train_test_split
from .defenses import make_defense
from .errors import AccessContractError, ConfigError
from .evaluate import MetricsReport, evaluate_attack, reconstruction_grid
from .idx import load_idx, load_image_folder
from .masks import feature_distance  # noqa: F401  (re-exported for demos)
from .metrics import lipschitz_chain_check  # noqa: F401
from .nn import (
    ArchitectureSpec,
    ConversionNet,
    TrainConfig,
    build_classifier,
    build_decoder,
    default_decoder_blocks,
    evaluate_accuracy,
    strip_to_extractor,
    train_classifier,
    transfer_student,
)
from .nn.checkpoint import load_classifier, save_classifier
from .synthetic import make_corpus

ATTACK_METHODS = ("with_dt", "without_dt", "direct")

_TRAIN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "learning_rate": {"type": "number", "exclusiveMinimum": 0},
        "epochs": {"type": "integer", "minimum": 0},
        "batch_size": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "optimizer": {"enum": ["sgd-momentum", "adam"]},
        "momentum": {"type": "number"},
        "weight_decay": {"type": "number", "minimum": 0},
        "label_smoothing": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    },
}

_DATASET_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["synthetic", "idx", "image_folder"]},
        "corpus": {"type": "string"},
        "n_per_class": {"type": "integer", "minimum": 2},
        "image_size": {"type": "integer", "minimum": 8},
        "seed": {"type": "integer"},
        "train_images": {"type": "string"},
        "train_labels": {"type": "string"},
        "test_images": {"type": "string"},
        "test_labels": {"type": "string"},
        "root": {"type": "string"},
        "resize_to": {
            "type": "array", "items": {"type": "integer", "minimum": 8},
            "minItems": 2, "maxItems": 2,
        },
        "train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
    "required": ["kind"],
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer"},
        "victim_seed": {"type": ["integer", "null"]},
        "teacher_dataset": _DATASET_SCHEMA,
        "student_dataset": _DATASET_SCHEMA,
        "student_classes": {
            "type": ["array", "null"], "items": {"type": "integer", "minimum": 0},
        },
        "transfer_mode": {"enum": ["deep", "mid", "full"]},
        "attack": {"enum": list(ATTACK_METHODS)},
        "samples_per_class": {"type": "integer", "minimum": 1},
        "student_train_per_class": {"type": "integer", "minimum": 1},
        "eval_per_class": {"type": ["integer", "null"], "minimum": 1},
        "query_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "conv_blocks": {
            "type": "array",
            "items": {
                "type": "array", "items": {"type": "integer", "minimum": 1},
                "minItems": 3, "maxItems": 3,
            },
            "minItems": 1,
        },
        "fc_hidden": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "shadow_fc_hidden": {"type": ["array", "null"],
                             "items": {"type": "integer", "minimum": 1}},
        "decoder_width": {"type": "integer", "minimum": 8},
        "augmentation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_noise": {"type": "integer", "minimum": 0},
                "n_jigsaw_or_geometric": {"type": "integer", "minimum": 0},
                "mode": {"enum": ["jigsaw", "geometric"]},
                "aux_matching": {"type": "string"},
                "noise_sigma": {"type": "number", "exclusiveMinimum": 0},
                "noise_lambda": {"type": "number", "minimum": 0},
                "mask_steps": {"type": "integer", "minimum": 1},
                "mask_lr": {"type": "number", "exclusiveMinimum": 0},
                "jigsaw_grid": {
                    "type": "array", "items": {"type": "integer", "minimum": 1},
                    "minItems": 2, "maxItems": 2,
                },
                "jigsaw_beta": {"type": "number", "exclusiveMinimum": 0,
                                "exclusiveMaximum": 1},
                "jigsaw_steps": {"type": "integer", "minimum": 1},
            },
        },
        "aux_dataset": {"anyOf": [_DATASET_SCHEMA, {"type": "null"}]},
        "defense": {
            "anyOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": ["top-h", "temperature"]},
                        "value": {"type": "number"},
                    },
                    "required": ["kind", "value"],
                },
            ]
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                phase: _TRAIN_SCHEMA
                for phase in (
                    "teacher", "student", "shadow", "attack_model",
                    "teacher_inversion", "conversion", "direct",
                )
            },
        },
    },
}

_DEFAULTS = {
    "name": "experiment",
    "seed": 0,
    "victim_seed": None,
    "teacher_dataset": {"kind": "synthetic", "corpus": "texture_shapes",
                        "n_per_class": 300, "image_size": 32, "seed": 100},
    "student_dataset": {"kind": "synthetic", "corpus": "stroke_digits",
                        "n_per_class": 300, "image_size": 32, "seed": 101},
    "student_classes": None,
    "transfer_mode": "full",
    "attack": "without_dt",
    "samples_per_class": 10,
    "student_train_per_class": 100,
    "eval_per_class": 30,
    "query_fraction": 0.5,
    "conv_blocks": [[8, 3, 1], [16, 3, 1], [32, 3, 1]],
    "fc_hidden": [128],
    "shadow_fc_hidden": [100],
    "decoder_width": 128,
    "augmentation": {},
    "aux_dataset": None,
    "defense": None,
    "train": {},
}

_TRAIN_DEFAULTS = {
    "teacher": {"optimizer": "sgd-momentum", "learning_rate": 0.01, "epochs": 8,
                "batch_size": 64, "label_smoothing": 0.07},
    "student": {"optimizer": "sgd-momentum", "learning_rate": 0.01, "epochs": 10,
                "batch_size": 64, "weight_decay": 1e-3, "label_smoothing": 0.07},
    "shadow": {"optimizer": "sgd-momentum", "learning_rate": 0.01, "epochs": 12,
               "batch_size": 64, "weight_decay": 1e-3, "label_smoothing": 0.07},
    "attack_model": {"optimizer": "adam", "learning_rate": 1e-3, "epochs": 40,
                     "batch_size": 64},
    "teacher_inversion": {"optimizer": "adam", "learning_rate": 1e-3, "epochs": 10,
                          "batch_size": 64},
    "conversion": {"optimizer": "adam", "learning_rate": 1e-3, "epochs": 10,
                   "batch_size": 64},
    "direct": {"optimizer": "adam", "learning_rate": 1e-3, "epochs": 200,
               "batch_size": 64},
}


def phase_seed(root: int, label: str) -> int:
    """Deterministic per-phase seed derived from a root seed and a name."""
    digest = hashlib.sha256(f"{root}:{label}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(d, CONFIG_SCHEMA)
        except jsonschema.ValidationError as err:
            raise ConfigError(f"invalid config: {err.message}") from err
        merged = _deep_merge(_DEFAULTS, d)
        if merged["attack"] == "with_dt" and merged["teacher_dataset"] is None:
            raise ConfigError("attack 'with_dt' requires teacher data")
        return cls(raw=merged)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __getitem__(self, key):
        return self.raw[key]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        d = _deep_merge(self.raw, kw)
        return ExperimentConfig.from_dict(d)

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def victim_seed(self) -> int:
        v = self.raw["victim_seed"]
        return self.seed if v is None else v

    def train_config(self, phase: str, seed_label: str | None = None) -> TrainConfig:
        spec = _deep_merge(_TRAIN_DEFAULTS[phase], self.raw["train"].get(phase, {}))
        if "seed" not in spec:
            root = self.victim_seed if phase in ("teacher", "student") else self.seed
            spec["seed"] = phase_seed(root, seed_label or phase)
        return TrainConfig(**spec)

    def fingerprint(self, *sections: str, extra: dict | None = None) -> str:
        payload = {k: self.raw[k] for k in sections}
        if extra:
            payload["__extra"] = extra
        text = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True)


def load_dataset_pair(spec: dict, split_seed: int):
    """Resolve a dataset spec into (train, test) datasets."""
    kind = spec["kind"]
    if kind == "synthetic":
        ds = make_corpus(
            spec.get("corpus", "stroke_digits"),
            spec.get("n_per_class", 300),
            image_size=spec.get("image_size", 32),
            seed=spec.get("seed", 0),
        )
        return train_test_split(ds, spec.get("train_fraction", 0.8), seed=split_seed)
    if kind == "idx":
        resize = tuple(spec.get("resize_to", [32, 32]))
        train = load_idx(spec["train_images"], spec["train_labels"], resize)
        if "test_images" in spec:
            test = load_idx(spec["test_images"], spec["test_labels"], resize)
            return train, test
        return train_test_split(train, spec.get("train_fraction", 0.8), seed=split_seed)
    if kind == "image_folder":
        ds = load_image_folder(spec["root"], tuple(spec.get("resize_to", [32, 32])))
        return train_test_split(ds, spec.get("train_fraction", 0.8), seed=split_seed)
    raise ConfigError(f"unknown dataset kind {kind!r}")


class Pipeline:
    """Stage-cached experiment pipeline rooted at an output directory."""

    def __init__(self, config: ExperimentConfig, out_dir, victim_cache_dir=None):
        self.config = config
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.victim_cache = Path(victim_cache_dir) if victim_cache_dir else None
        if self.victim_cache:
            self.victim_cache.mkdir(parents=True, exist_ok=True)
        self._datasets = None
        self._teacher = None
        self._student = None
        self._attack = None

    def _victim_path(self, stem: str, fingerprint: str) -> Path:
        if self.victim_cache:
            return self.victim_cache / f"{stem}-{fingerprint.split(':')[0][:10]}"
        return self.out / stem

    # -- data ------------------------------------------------------------------

    def datasets(self) -> dict:
        if self._datasets is not None:
            return self._datasets
        cfg = self.config
        split_seed = phase_seed(cfg.victim_seed, "splits")
        t_train, t_test = load_dataset_pair(cfg["teacher_dataset"], split_seed)
        s_train, s_test = load_dataset_pair(cfg["student_dataset"], split_seed)
        if cfg["student_classes"] is not None:
            ids = cfg["student_classes"]
            s_train = restrict_classes(s_train, ids)
            s_test = restrict_classes(s_test, ids)
        student_pool = subsample_per_class(
            s_train, cfg["student_train_per_class"], seed=phase_seed(cfg.victim_seed, "victim-pool")
        )
        query_half, eval_half = train_test_split(
            s_test, cfg["query_fraction"], seed=phase_seed(cfg.victim_seed, "query-split")
        )
        d_s = subsample_per_class(
            query_half, cfg["samples_per_class"], seed=phase_seed(cfg.seed, "adversary-samples")
        )
        if cfg["eval_per_class"] is not None:
            cap = min(cfg["eval_per_class"], min(
                len(eval_half.class_indices(c)) for c in range(eval_half.num_classes)
            ))
            eval_set = subsample_per_class(eval_half, cap, seed=phase_seed(cfg.victim_seed, "eval"))
        else:
            eval_set = eval_half
        aux = None
        if cfg["aux_dataset"] is not None:
            aux_train, _ = load_dataset_pair(cfg["aux_dataset"], split_seed)
            aux = aux_train
        self._datasets = {
            "teacher_train": t_train, "teacher_test": t_test,
            "student_train": s_train, "student_test": s_test,
            "student_pool": student_pool, "query_half": query_half,
            "eval_set": eval_set, "d_s": d_s, "aux": aux,
        }
        return self._datasets

    def architecture(self, num_classes: int, image_shape) -> ArchitectureSpec:
        cfg = self.config
        return ArchitectureSpec(
            conv_blocks=tuple(tuple(b) for b in cfg["conv_blocks"]),
            fc_dims=tuple(cfg["fc_hidden"]) + (num_classes,),
            num_classes=num_classes,
            input_shape=tuple(image_shape),
        )

    # -- victim models ------------------------------------------------------------

    def _cached_classifier(self, path: Path, fingerprint: str):
        manifest_path = path.with_suffix(".manifest.json")
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text())
            if manifest.get("dataset_fingerprint") == fingerprint:
                model, _ = load_classifier(path)
                return model
        return None

    def teacher(self):
        if self._teacher is not None:
            return self._teacher
        cfg = self.config
        data = self.datasets()
        fp = cfg.fingerprint(
            "teacher_dataset", "conv_blocks", "fc_hidden",
            extra={"train": cfg.raw["train"].get("teacher", {})},
        ) + f":{cfg.victim_seed}"
        path = self._victim_path("teacher", fp)
        model = self._cached_classifier(path, fp)
        if model is None:
            spec = self.architecture(
                data["teacher_train"].num_classes, data["teacher_train"].image_shape
            )
            model = build_classifier(spec, seed=phase_seed(cfg.victim_seed, "teacher-init"))
            _, acc = train_classifier(
                model, data["teacher_train"], data["teacher_test"],
                cfg.train_config("teacher"),
            )
            save_classifier(model, path, seed=cfg.victim_seed, dataset_fingerprint=fp,
                            metrics={"test_accuracy": acc})
        self._teacher = model
        return model

    def student(self):
        if self._student is not None:
            return self._student
        cfg = self.config
        data = self.datasets()
        fp = cfg.fingerprint(
            "teacher_dataset", "student_dataset", "student_classes", "transfer_mode",
            "student_train_per_class", "conv_blocks", "fc_hidden",
            extra={
                "train": {
                    phase: cfg.raw["train"].get(phase, {})
                    for phase in ("teacher", "student")
                }
            },
        ) + f":{cfg.victim_seed}"
        path = self._victim_path("student", fp)
        model = self._cached_classifier(path, fp)
        if model is None:
            teacher = self.teacher()
            model = transfer_student(
                teacher, cfg["transfer_mode"], data["student_pool"].num_classes,
                data["student_pool"], cfg.train_config("student"),
            )
            acc = evaluate_accuracy(model, data["student_test"])
            save_classifier(model, path, seed=cfg.victim_seed, dataset_fingerprint=fp,
                            metrics={"test_accuracy": acc})
        model.query_count = 0
        self._student = model
        return model

    # -- attack phase ----------------------------------------------------------------

    def attack_fingerprint(self) -> str:
        cfg = self.config
        sections = [k for k in cfg.raw if k not in ("name", "defense", "eval_per_class")]
        return cfg.fingerprint(*sections)

    def _load_cached_attack(self) -> dict | None:
        from .nn.checkpoint import load_classifier, load_conversion, load_decoder

        manifest_path = self.out / "attack.manifest.json"
        if not manifest_path.exists():
            return None
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("fingerprint") != self.attack_fingerprint():
            return None
        method = manifest["method"]
        decoder, _ = load_decoder(self.out / "attack-decoder")
        shadow = None
        if (self.out / "attack-shadow.manifest.json").exists():
            shadow, _ = load_classifier(self.out / "attack-shadow")
        if method == "with_dt":
            conv, _ = load_conversion(self.out / "attack-conversion")
            inverter = lambda y: invert_student_output(y, conv, decoder)  # noqa: E731
        else:
            inverter = lambda y: invert_from_confidence(decoder, y)  # noqa: E731
        return {
            "inverter": inverter,
            "method": method,
            "queries_pre_eval": manifest["queries_pre_eval"],
            "wall_clock": manifest["wall_clock"],
            "shadow": shadow,
            "decoder": decoder,
        }

    def _save_attack(self, attack: dict) -> None:
        from .nn.checkpoint import save_classifier as save_cls
        from .nn.checkpoint import save_conversion, save_decoder

        fp = self.attack_fingerprint()
        save_decoder(attack["decoder"], self.out / "attack-decoder",
                     seed=self.config.seed, dataset_fingerprint=fp)
        if attack.get("shadow") is not None:
            save_cls(attack["shadow"], self.out / "attack-shadow",
                     seed=self.config.seed, dataset_fingerprint=fp)
        if attack.get("conversion") is not None:
            save_conversion(attack["conversion"], self.out / "attack-conversion",
                            seed=self.config.seed, dataset_fingerprint=fp)
        manifest = {
            "kind": "tlinv-attack",
            "fingerprint": fp,
            "method": attack["method"],
            "queries_pre_eval": attack["queries_pre_eval"],
            "wall_clock": attack["wall_clock"],
        }
        (self.out / "attack.manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True)
        )

    def run_attack(self) -> dict:
        """Train the configured attack; returns inverter and bookkeeping.

        For the two query-free methods the student model must not receive a
        single query here; the direct baseline must query exactly its query
        set once per sample.
        """
        if self._attack is not None:
            return self._attack
        cached = self._load_cached_attack()
        if cached is not None:
            self._attack = cached
            return cached
        cfg = self.config
        data = self.datasets()
        student = self.student()
        student.query_count = 0
        method = cfg["attack"]
        t0 = time.perf_counter()
        num_classes = data["d_s"].num_classes
        image_shape = data["d_s"].image_shape
        dec_blocks = default_decoder_blocks(image_shape, width=cfg["decoder_width"])

        logs = {}
        if method == "without_dt":
            teacher = self.teacher()
            policy = AugmentationPolicy(**cfg["augmentation"])
            d_aug = build_aug_dataset(
                data["d_s"], data["aux"], policy, teacher,
                rng=np.random.default_rng(phase_seed(cfg.seed, "augment")),
            )
            shadow_fc = (
                tuple(cfg["shadow_fc_hidden"]) + (num_classes,)
                if cfg["shadow_fc_hidden"] is not None else None
            )
            shadow = train_shadow_model(
                teacher, cfg["transfer_mode"], d_aug, cfg.train_config("shadow"),
                fc_dims=shadow_fc,
            )
            decoder = build_decoder(
                num_classes, image_shape, dec_blocks,
                seed=phase_seed(cfg.seed, "decoder-init"),
            )
            train_attack_model(decoder, shadow, d_aug, cfg.train_config("attack_model"))
            inverter = lambda y: invert_from_confidence(decoder, y)  # noqa: E731
            logs = {"shadow": shadow.training_log, "attack_model": decoder.training_log}
            artifacts = {"shadow": shadow, "decoder": decoder, "d_aug_size": len(d_aug)}
        elif method == "with_dt":
            teacher = self.teacher()
            extractor = strip_to_extractor(teacher)
            decoder = build_decoder(
                extractor.output_dim, image_shape, dec_blocks,
                seed=phase_seed(cfg.seed, "decoder-init"),
            )
            train_teacher_inversion(
                decoder, extractor, data["teacher_train"],
                cfg.train_config("teacher_inversion"),
            )
            shadow = build_shadow_from_teacher(
                teacher, num_classes, seed=phase_seed(cfg.seed, "shadow-head")
            )
            conv = ConversionNet(
                num_classes, extractor.output_dim,
                seed=phase_seed(cfg.seed, "conversion-init"),
            )
            train_shadow_and_conversion(
                shadow, conv, extractor, data["teacher_train"], data["d_s"],
                cfg.train_config("conversion"),
            )
            inverter = lambda y: invert_student_output(y, conv, decoder)  # noqa: E731
            logs = {"teacher_inversion": decoder.training_log, "conversion": conv.training_log}
            artifacts = {"shadow": shadow, "decoder": decoder, "conversion": conv}
        elif method == "direct":
            decoder = build_decoder(
                num_classes, image_shape, dec_blocks,
                seed=phase_seed(cfg.seed, "decoder-init"),
            )
            direct_inversion_train(
                student.predict, data["query_half"], decoder, cfg.train_config("direct")
            )
            inverter = lambda y: invert_from_confidence(decoder, y)  # noqa: E731
            logs = {"attack_model": decoder.training_log}
            artifacts = {"shadow": None, "decoder": decoder}
        else:
            raise ConfigError(f"unknown attack method {method!r}")

        queries = student.query_count
        if method in ("without_dt", "with_dt") and queries != 0:
            raise AccessContractError(
                f"attack {method} queried the student {queries} times during training"
            )
        if method == "direct" and queries != len(data["query_half"]):
            raise AccessContractError(
                f"direct baseline made {queries} queries, expected {len(data['query_half'])}"
            )
        self._write_logs(logs)
        self._attack = {
            "inverter": inverter,
            "method": method,
            "queries_pre_eval": queries,
            "wall_clock": time.perf_counter() - t0,
            **artifacts,
        }
        self._save_attack(self._attack)
        return self._attack

    def _write_logs(self, logs: dict) -> None:
        for phase, entries in logs.items():
            path = self.out / f"log-{phase}.jsonl"
            with open(path, "w") as fh:
                for entry in entries:
                    fh.write(json.dumps(entry) + "\n")

    # -- evaluation ---------------------------------------------------------------------

    def evaluate(self, defense_override: dict | None = None,
                 write_artifacts: bool = True) -> MetricsReport:
        cfg = self.config
        data = self.datasets()
        attack = self.run_attack()
        student = self.student()
        defense_info = defense_override if defense_override is not None else cfg["defense"]
        defense = (
            make_defense(defense_info["kind"], defense_info["value"])
            if defense_info else None
        )
        start = time.perf_counter()
        pre_eval = attack["queries_pre_eval"]
        report = evaluate_attack(
            attack["inverter"],
            student,
            data["eval_set"],
            defense=defense,
            shadow=attack["shadow"],
            method=attack["method"],
            dataset=cfg["student_dataset"].get("corpus", cfg["student_dataset"]["kind"]),
            student_samples_per_class=cfg["samples_per_class"],
            defense_info=defense_info,
            seeds={"seed": cfg.seed, "victim_seed": cfg.victim_seed},
        )
        report.student_queries_pre_eval = pre_eval
        report.student_queries_total = student.query_count
        report.wall_clock_sec = attack["wall_clock"] + (time.perf_counter() - start)
        report.extra["name"] = cfg["name"]
        if write_artifacts:
            tag = ""
            if defense_info:
                tag = f"-{defense_info['kind']}{defense_info['value']:g}"
            report.to_json(self.out / f"metrics{tag}.json")
            (self.out / "config.json").write_text(cfg.to_json())
            from .nn.train import predict_confidences

            sample = data["eval_set"].images[:10]
            y = predict_confidences(student, sample)
            recon = attack["inverter"](defense(y) if defense else y)
            reconstruction_grid(sample, recon, self.out / f"grid{tag}.png")
        return report


def run_experiment(config: ExperimentConfig, out_dir) -> MetricsReport:
    """Train victim, run the configured attack under its access contract,
    evaluate, and persist checkpoints, metrics, logs, and image grids."""
    return Pipeline(config, out_dir).evaluate()


SWEEP_AXES = ("classes", "data_size", "defense_h")


def run_sweep(base_config: ExperimentConfig, axis: str, values, out_root) -> list[MetricsReport]:
    """One run per value along a single axis; everything else stays fixed.

    Emits a combined CSV next to the per-run artifacts.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; have {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    out_root = Path(out_root)
    reports = []
    for value in values:
        if axis == "classes":
            cfg = base_config.with_overrides(student_classes=list(range(int(value))))
        elif axis == "data_size":
            cfg = base_config.with_overrides(samples_per_class=int(value))
        else:
            cfg = base_config.with_overrides(defense={"kind": "top-h", "value": int(value)})
        reports.append(run_experiment(cfg, out_root / f"{axis}-{value}"))
    write_sweep_csv(out_root / f"sweep-{axis}.csv", axis, values, reports)
    return reports


def write_sweep_csv(path, axis: str, values, reports: list[MetricsReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [axis, "method", "mean_inversion_error", "mean_confidence_error",
             "argmax_preservation_rate", "queries_pre_eval", "seed", "victim_seed"]
        )
        for value, report in zip(values, reports):
            writer.writerow(
                [
                    value,
                    report.method,
                    f"{report.mean_inversion_error:.6f}",
                    "" if report.mean_confidence_error is None
                    else f"{report.mean_confidence_error:.6f}",
                    "" if report.argmax_preservation_rate is None
                    else f"{report.argmax_preservation_rate:.4f}",
                    report.student_queries_pre_eval,
                    report.seeds.get("seed"),
                    report.seeds.get("victim_seed"),
                ]
            )
