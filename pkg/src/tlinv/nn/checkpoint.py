"""Checkpoints: parameter blob (.npz) plus a sidecar JSON manifest.

The manifest is the stable cross-version contract: architecture spec,
seed, dataset fingerprint, per-block freeze mask, and metrics. The blob
layout is implementation-defined.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .models import (
    ArchitectureSpec,
    Classifier,
    ConversionNet,
    InversionDecoder,
    build_classifier,
    build_decoder,
)

MANIFEST_VERSION = 1


def save_classifier(
    model: Classifier,
    path,
    seed: int,
    dataset_fingerprint: str = "",
    metrics: dict | None = None,
) -> None:
    path = Path(path)
    np.savez_compressed(path.with_suffix(".npz"), **model.state_dict())
    manifest = {
        "kind": "tlinv-classifier",
        "version": MANIFEST_VERSION,
        "architecture": model.spec.to_dict(),
        "seed": seed,
        "dataset_fingerprint": dataset_fingerprint,
        "freeze_mask": [not t for t in model.trainable_mask],
        "dtype": str(np.dtype(model.dtype)),
        "metrics": metrics or {},
    }
    path.with_suffix(".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_classifier(path) -> tuple[Classifier, dict]:
    path = Path(path)
    manifest_path = path.with_suffix(".manifest.json")
    if not manifest_path.exists():
        raise FormatError(f"missing manifest {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("kind") != "tlinv-classifier":
        raise FormatError(f"{manifest_path} is not a classifier manifest")
    spec = ArchitectureSpec.from_dict(manifest["architecture"])
    model = build_classifier(spec, seed=manifest["seed"],
                             dtype=np.dtype(manifest.get("dtype", "float32")))
    with np.load(path.with_suffix(".npz")) as blob:
        model.load_state_dict({k: blob[k] for k in blob.files})
    for block, frozen in zip(model.blocks, manifest["freeze_mask"]):
        block.trainable = not frozen
    return model, manifest


def save_decoder(
    model: InversionDecoder,
    path,
    seed: int,
    dataset_fingerprint: str = "",
    metrics: dict | None = None,
) -> None:
    path = Path(path)
    np.savez_compressed(path.with_suffix(".npz"), **model.state_dict())
    manifest = {
        "kind": "tlinv-decoder",
        "version": MANIFEST_VERSION,
        "input_dim": model.input_dim,
        "output_shape": list(model.output_shape),
        "blocks": [list(b) for b in model.block_specs],
        "seed": seed,
        "dataset_fingerprint": dataset_fingerprint,
        "dtype": str(np.dtype(model.dtype)),
        "metrics": metrics or {},
    }
    path.with_suffix(".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_decoder(path) -> tuple[InversionDecoder, dict]:
    path = Path(path)
    manifest_path = path.with_suffix(".manifest.json")
    if not manifest_path.exists():
        raise FormatError(f"missing manifest {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("kind") != "tlinv-decoder":
        raise FormatError(f"{manifest_path} is not a decoder manifest")
    model = build_decoder(
        manifest["input_dim"],
        tuple(manifest["output_shape"]),
        [tuple(b) for b in manifest["blocks"]],
        seed=manifest["seed"],
        dtype=np.dtype(manifest.get("dtype", "float32")),
    )
    with np.load(path.with_suffix(".npz")) as blob:
        model.load_state_dict({k: blob[k] for k in blob.files})
    return model, manifest


def save_conversion(
    net: ConversionNet,
    path,
    seed: int,
    dataset_fingerprint: str = "",
) -> None:
    path = Path(path)
    np.savez_compressed(path.with_suffix(".npz"), **net.state_dict())
    manifest = {
        "kind": "tlinv-conversion",
        "version": MANIFEST_VERSION,
        "input_dim": net.input_dim,
        "output_dim": net.output_dim,
        "hidden": list(net.hidden),
        "seed": seed,
        "dataset_fingerprint": dataset_fingerprint,
        "dtype": str(np.dtype(net.dtype)),
    }
    path.with_suffix(".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_conversion(path) -> tuple[ConversionNet, dict]:
    path = Path(path)
    manifest_path = path.with_suffix(".manifest.json")
    if not manifest_path.exists():
        raise FormatError(f"missing manifest {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("kind") != "tlinv-conversion":
        raise FormatError(f"{manifest_path} is not a conversion-net manifest")
    net = ConversionNet(
        manifest["input_dim"],
        manifest["output_dim"],
        hidden=tuple(manifest["hidden"]),
        seed=manifest["seed"],
        dtype=np.dtype(manifest.get("dtype", "float32")),
    )
    with np.load(path.with_suffix(".npz")) as blob:
        net.load_state_dict({k: blob[k] for k in blob.files})
    return net, manifest
