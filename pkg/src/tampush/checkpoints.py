"""Checkpoint files: a JSON manifest plus a flat float64 payload.

Same layout discipline as the dataset files, so saves are byte-stable and
load(save(model)) reproduces policy outputs exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .bcq import BCQPolicy
from .gcbc import GCBCPolicy, GCBCRecurrentPolicy

MAGIC = b"TAMPUSH-CKPT v1\n"

_KINDS = {
    "gcbc": GCBCPolicy,
    "gcbc-rnn": GCBCRecurrentPolicy,
    "bcq": BCQPolicy,
}


class CheckpointError(Exception):
    pass


def save_checkpoint(path, spec: dict, arrays: dict) -> None:
    names = sorted(arrays)
    layout = [[n, list(arrays[n].shape)] for n in names]
    manifest = {"spec": spec, "layout": layout}
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(manifest, sort_keys=True).encode() + b"\n")
        for n in names:
            fh.write(np.ascontiguousarray(arrays[n], dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise CheckpointError(f"not a checkpoint file: {path}")
        manifest = json.loads(fh.readline().decode())
        arrays = {}
        for n, shape in manifest["layout"]:
            size = int(np.prod(shape)) if shape else 1
            data = fh.read(8 * size)
            if len(data) != 8 * size:
                raise CheckpointError("truncated checkpoint")
            arrays[n] = np.frombuffer(data, dtype="<f8").reshape(shape).copy()
    return manifest["spec"], arrays


def policy_from_checkpoint(path):
    spec, arrays = load_checkpoint(path)
    kind = spec.get("kind")
    if kind not in _KINDS:
        raise CheckpointError(f"unknown policy kind {kind!r}")
    return _KINDS[kind].from_arrays(spec, arrays)


def save_series(directory, result, prefix: str) -> list:
    """Write a training run's checkpoint series; returns the file paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for ck in result.checkpoints:
        p = directory / f"{prefix}-ep{ck.epoch:05d}.ckpt"
        save_checkpoint(p, ck.spec, ck.arrays)
        paths.append(p)
    return paths
