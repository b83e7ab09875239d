"""Demonstration records, the offline transition corpus, and file I/O.

File layout (see docs/dataset_format.md for the byte-level contract): a
text magic line, a one-line JSON manifest, then fixed-width little-endian
record blocks.  Numeric payloads are raw float64, so write -> read is the
identity bit for bit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import config
from .simulator import SimConfig, Trajectory

MAGIC = b"TAMPUSH-DEMOS v1\n"
FORMAT_VERSION = 1

OBS_DIM = 6
ACT_DIM = 3
GOAL_DIM = 2


@dataclass
class DemoRecord:
    trajectory: Trajectory
    relabeled_goal: np.ndarray | None = None  # (2,), base frame
    kept: bool = True
    prune_index: int = -1

    def __len__(self):
        return len(self.trajectory)


@dataclass
class Transitions:
    """Flat transition arrays over the kept records of a dataset."""

    obs: np.ndarray
    act: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray
    goal: np.ndarray
    record_id: np.ndarray

    def __len__(self):
        return self.obs.shape[0]


@dataclass
class Dataset:
    manifest: dict
    records: list

    @property
    def kept_records(self):
        return [r for r in self.records if r.kept]

    def split_ids(self):
        """Deterministic 90/10 record split; returns (train_ids, val_ids)."""
        kept = [i for i, r in enumerate(self.records) if r.kept]
        rng = np.random.default_rng(int(self.manifest["split_seed"]))
        perm = rng.permutation(len(kept))
        n_val = max(1, int(round(0.10 * len(kept)))) if len(kept) > 1 else 0
        val = {kept[int(i)] for i in perm[:n_val]}
        train = [i for i in kept if i not in val]
        return train, sorted(val)

    def transitions(self, record_ids=None) -> Transitions:
        ids = record_ids
        if ids is None:
            ids = [i for i, r in enumerate(self.records) if r.kept]
        obs, act, rew, nxt, done, goal, rid = [], [], [], [], [], [], []
        for i in ids:
            r = self.records[i]
            assert r.relabeled_goal is not None, "relabel before building transitions"
            T = len(r)
            g = r.relabeled_goal
            for t in range(T):
                obs.append(r.trajectory.observations[t])
                act.append(r.trajectory.actions[t])
                nxt.append(r.trajectory.observations[t + 1])
                dist = np.hypot(*(r.trajectory.observations[t + 1, 3:5] - g))
                rew.append(1.0 if dist <= config.SKILL_TOLERANCE else 0.0)
                done.append(1.0 if t == T - 1 else 0.0)
                goal.append(g)
                rid.append(i)
        return Transitions(
            obs=np.array(obs).reshape(-1, OBS_DIM),
            act=np.array(act).reshape(-1, ACT_DIM),
            reward=np.array(rew),
            next_obs=np.array(nxt).reshape(-1, OBS_DIM),
            done=np.array(done),
            goal=np.array(goal).reshape(-1, GOAL_DIM),
            record_id=np.array(rid, dtype=np.int64),
        )

    def n_transitions(self) -> int:
        return sum(len(r) for r in self.records if r.kept)


def make_manifest(sim_cfg: SimConfig, n_records: int, n_kept: int, n_transitions: int,
                  root_seed: int, split_seed: int, gamma: float = 0.99,
                  skill: str = "push", extra: dict | None = None) -> dict:
    manifest = {
        "version": FORMAT_VERSION,
        "obs_dim": OBS_DIM,
        "act_dim": ACT_DIM,
        "goal_dim": GOAL_DIM,
        "skill": skill,
        "n_records": n_records,
        "n_kept": n_kept,
        "n_transitions": n_transitions,
        "root_seed": int(root_seed),
        "split_seed": int(split_seed),
        "gamma": gamma,
        "sim_config": sim_cfg.values_dict(),
        "sim_config_hash": sim_cfg.digest(),
    }
    if extra:
        manifest.update(extra)
    return manifest


class DatasetError(Exception):
    pass


_HEAD = struct.Struct("<IIIiiQ")  # T, n_statics, object_id, kept, prune_index, seed


def _write_record(fh, r: DemoRecord):
    traj = r.trajectory
    T = len(traj)
    n_statics = traj.statics.shape[0]
    fh.write(_HEAD.pack(T, n_statics, traj.object_id, int(r.kept), r.prune_index, traj.seed))
    rg = r.relabeled_goal if r.relabeled_goal is not None else np.full(2, np.nan)
    for arr, shape in (
        (traj.base_pose, (3,)),
        (traj.planner_goal, (GOAL_DIM,)),
        (np.asarray(rg, dtype=float), (GOAL_DIM,)),
        (traj.observations, (T + 1, OBS_DIM)),
        (traj.actions, (T, ACT_DIM)),
        (traj.arm_confs, (T + 1, 3)),
        (traj.statics, (n_statics, 3)),
    ):
        a = np.ascontiguousarray(arr, dtype="<f8")
        if a.shape != shape:
            raise DatasetError(f"bad array shape {a.shape}, expected {shape}")
        fh.write(a.tobytes())


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise DatasetError("truncated file")
    return data


def _read_array(fh, shape) -> np.ndarray:
    n = int(np.prod(shape))
    data = _read_exact(fh, 8 * n)
    return np.frombuffer(data, dtype="<f8").reshape(shape).copy()


def _read_record(fh) -> DemoRecord:
    T, n_statics, object_id, kept, prune_index, seed = _HEAD.unpack(_read_exact(fh, _HEAD.size))
    base_pose = _read_array(fh, (3,))
    planner_goal = _read_array(fh, (GOAL_DIM,))
    relabeled = _read_array(fh, (GOAL_DIM,))
    observations = _read_array(fh, (T + 1, OBS_DIM))
    actions = _read_array(fh, (T, ACT_DIM))
    arm_confs = _read_array(fh, (T + 1, 3))
    statics = _read_array(fh, (n_statics, 3))
    traj = Trajectory(
        observations=observations,
        actions=actions,
        planner_goal=planner_goal,
        object_id=int(object_id),
        skill="push",
        seed=int(seed),
        arm_confs=arm_confs,
        base_pose=base_pose,
        statics=statics,
    )
    return DemoRecord(
        trajectory=traj,
        relabeled_goal=None if np.isnan(relabeled).all() else relabeled,
        kept=bool(kept),
        prune_index=int(prune_index),
    )


def write_dataset(dataset: Dataset, path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(dataset.manifest, sort_keys=True).encode() + b"\n")
        for r in dataset.records:
            _write_record(fh, r)


def read_dataset(path) -> Dataset:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise DatasetError(f"not a dataset file: {path}")
        manifest = json.loads(fh.readline().decode())
        if manifest.get("version") != FORMAT_VERSION:
            raise DatasetError(f"unsupported format version {manifest.get('version')}")
        if manifest["obs_dim"] != OBS_DIM or manifest["act_dim"] != ACT_DIM:
            raise DatasetError(
                f"dimension mismatch: file has obs={manifest['obs_dim']} "
                f"act={manifest['act_dim']}, expected {OBS_DIM}/{ACT_DIM}"
            )
        records = []
        for _ in range(manifest["n_records"]):
            records.append(_read_record(fh))
        trailing = fh.read(1)
        if trailing:
            raise DatasetError("trailing bytes after final record")
    return Dataset(manifest=manifest, records=records)
