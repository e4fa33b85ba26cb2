"""Experiment config validation, pipeline contracts, sweeps, and the CLI."""

import json

import numpy as np
import pytest

from tlinv.cli import main as cli_main
from tlinv.errors import ConfigError
from tlinv.evaluate import MetricsReport
from tlinv.experiment import ExperimentConfig, Pipeline, run_experiment, run_sweep

# a deliberately tiny grid so pipeline tests stay fast
TINY = {
    "name": "tiny",
    "seed": 0,
    "teacher_dataset": {"kind": "synthetic", "corpus": "texture_shapes",
                        "n_per_class": 40, "image_size": 16, "seed": 1},
    "student_dataset": {"kind": "synthetic", "corpus": "stroke_digits",
                        "n_per_class": 40, "image_size": 16, "seed": 2},
    "student_train_per_class": 16,
    "samples_per_class": 3,
    "eval_per_class": 4,
    "conv_blocks": [[4, 3, 1], [8, 3, 1]],
    "fc_hidden": [32],
    "shadow_fc_hidden": [24],
    "decoder_width": 32,
    "augmentation": {"n_noise": 2, "n_jigsaw_or_geometric": 2, "mask_steps": 5},
    "train": {
        "teacher": {"epochs": 3},
        "student": {"epochs": 3},
        "shadow": {"epochs": 3},
        "attack_model": {"epochs": 3},
        "teacher_inversion": {"epochs": 2},
        "conversion": {"epochs": 2},
        "direct": {"epochs": 3},
    },
}


def tiny_config(**overrides):
    d = dict(TINY)
    d.update(overrides)
    return ExperimentConfig.from_dict(d)


# -- config validation ------------------------------------------------------------


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"sed": 3})


def test_nested_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"train": {"teacher": {"lerning_rate": 0.1}}})


def test_unknown_attack_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"attack": "sideways"})


def test_defaults_fill_in():
    cfg = ExperimentConfig.from_dict({})
    assert cfg["attack"] == "without_dt"
    assert cfg.victim_seed == cfg.seed
    assert cfg.train_config("teacher").epochs > 0


def test_overrides_and_victim_seed():
    cfg = tiny_config(victim_seed=7)
    assert cfg.victim_seed == 7
    cfg2 = cfg.with_overrides(seed=5)
    assert cfg2.seed == 5 and cfg2.victim_seed == 7
    # victim phases key off victim_seed, adversary phases off seed
    assert cfg.train_config("teacher").seed == cfg2.train_config("teacher").seed
    assert cfg.train_config("shadow").seed != cfg2.train_config("shadow").seed


# -- pipeline ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def without_dt_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run-without-dt")
    report = run_experiment(tiny_config(), out)
    return report, out


def test_run_experiment_contract_and_artifacts(without_dt_run):
    report, out = without_dt_run
    assert report.method == "without_dt"
    assert report.student_queries_pre_eval == 0
    assert report.mean_inversion_error > 0
    assert report.mean_confidence_error is not None
    assert (out / "metrics.json").exists()
    assert (out / "teacher.npz").exists()
    assert (out / "student.npz").exists()
    assert (out / "attack-decoder.npz").exists()
    assert (out / "grid.png").exists()
    assert (out / "config.json").exists()
    assert (out / "log-attack_model.jsonl").exists()


def test_metrics_report_roundtrip(without_dt_run):
    report, out = without_dt_run
    back = MetricsReport.from_json((out / "metrics.json").read_text())
    assert back.mean_inversion_error == report.mean_inversion_error
    assert back.seeds == report.seeds


def test_rerun_reuses_cache_and_reproduces(without_dt_run, tmp_path):
    report, out = without_dt_run
    again = run_experiment(tiny_config(), out)  # cached teacher/student/attack
    assert again.mean_inversion_error == report.mean_inversion_error
    fresh = run_experiment(tiny_config(), tmp_path / "fresh")  # full retrain
    assert fresh.mean_inversion_error == report.mean_inversion_error
    assert fresh.mean_confidence_error == report.mean_confidence_error


def test_direct_baseline_queries_recorded(tmp_path):
    report = run_experiment(tiny_config(attack="direct"), tmp_path)
    assert report.student_queries_pre_eval > 0
    assert report.mean_confidence_error is None


def test_with_dt_runs_query_free(tmp_path):
    report = run_experiment(tiny_config(attack="with_dt"), tmp_path)
    assert report.student_queries_pre_eval == 0
    assert (tmp_path / "attack-conversion.npz").exists()


def test_defended_evaluation(tmp_path):
    cfg = tiny_config(defense={"kind": "top-h", "value": 2})
    report = run_experiment(cfg, tmp_path)
    assert report.argmax_preservation_rate == 1.0
    assert (tmp_path / "metrics-top-h2.json").exists()


def test_class_restriction(tmp_path):
    cfg = tiny_config(student_classes=[0, 1, 2])
    report = run_experiment(cfg, tmp_path)
    assert report.num_classes == 3


def test_sweep_axes_and_csv(tmp_path):
    reports = run_sweep(tiny_config(), "defense_h", [8, 2], tmp_path)
    assert len(reports) == 2
    csv_path = tmp_path / "sweep-defense_h.csv"
    assert csv_path.exists()
    lines = csv_path.read_text().strip().splitlines()
    assert len(lines) == 3
    with pytest.raises(ConfigError):
        run_sweep(tiny_config(), "volume", [1], tmp_path)
    with pytest.raises(ConfigError):
        run_sweep(tiny_config(), "classes", [], tmp_path)


# -- CLI ------------------------------------------------------------------------------


def test_cli_verbs_compose(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(TINY))
    out = str(tmp_path / "run")
    assert cli_main(["train-teacher", "--config", str(cfg_path), "--out", out]) == 0
    assert cli_main(["train-student", "--config", str(cfg_path), "--out", out]) == 0
    assert cli_main(["augment", "--config", str(cfg_path), "--out", out]) == 0
    assert (tmp_path / "run" / "augmented" / "provenance.json").exists()
    assert cli_main(["attack", "--method", "without-dt", "--config", str(cfg_path),
                     "--out", out]) == 0
    assert cli_main(["evaluate", "--config", str(cfg_path), "--out", out,
                     "--defense", "top-h:2"]) == 0
    assert cli_main(["report", "--out", out]) == 0
    captured = capsys.readouterr()
    assert "inversion" in captured.out or "inv=" in captured.out
    assert (tmp_path / "run" / "report.csv").exists()


def test_cli_rejects_bad_defense(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(TINY))
    rc = cli_main(["evaluate", "--config", str(cfg_path), "--out", str(tmp_path / "o"),
                   "--defense", "blur:3"])
    assert rc == 2


def test_cli_seed_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(TINY))
    out = str(tmp_path / "r")
    assert cli_main(["attack", "--config", str(cfg_path), "--seed", "9",
                     "--out", out]) == 0
    manifest = json.loads((tmp_path / "r" / "attack.manifest.json").read_text())
    assert manifest["method"] == "without_dt"
