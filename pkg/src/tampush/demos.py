"""Demonstration collection and offline processing.

collect: sample single-block push instances, solve each with the stream
planner under the 30 s budget, execute the plan's deterministic prefix,
then record the scripted open-loop push at 20 Hz.  Solver failures are
skipped and counted, never raised.

process: horizon filter, terminal goal relabeling, stop-motion pruning,
then packing into the transition dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import config
from .assets import default_domain, default_streams
from .collision import collision_free
from .dataset import Dataset, DemoRecord, make_manifest
from .execution import first_push_setup
from .geometry import Pose2
from .scene import push_instance, scene_to_problem
from .simulator import SimConfig, execute_subroutine_push
from .streams import solve_adaptive


@dataclass
class CollectStats:
    attempted: int = 0
    collected: int = 0
    solver_timeouts: int = 0
    solver_unsolvable: int = 0
    setup_failures: int = 0

    def as_dict(self) -> dict:
        return {
            "attempted": self.attempted,
            "collected": self.collected,
            "solver_timeouts": self.solver_timeouts,
            "solver_unsolvable": self.solver_unsolvable,
            "setup_failures": self.setup_failures,
        }


def _collect_one(index: int, root_seed: int, sim_cfg: SimConfig, budget: float):
    """One demonstration attempt; deterministic in (root_seed, index)."""
    scene_rng = np.random.default_rng([root_seed, index, 17])
    scene = push_instance(scene_rng)
    problem = scene_to_problem(scene, name=f"push-{index}")
    result = solve_adaptive(
        default_domain(), default_streams(), problem,
        budget=budget, seed=root_seed * 1_000_003 + index, scene=scene,
    )
    if not result.ok:
        return None, result.status
    setup = first_push_setup(scene, result.plan)
    if setup is None:
        return None, "no-push"
    roll_rng = np.random.default_rng([root_seed, index, 23])
    traj, _ = execute_subroutine_push(
        setup.state, setup.object_index, setup.path, setup.goal_world,
        sim_cfg, roll_rng, seed=index,
    )
    return DemoRecord(trajectory=traj), "ok"


def collect(n_demos: int, root_seed: int, sim_cfg: SimConfig | None = None,
            budget: float = config.SOLVE_BUDGET, workers: int = 1,
            progress=None):
    """Collect exactly n_demos push demonstrations (failures skipped)."""
    sim_cfg = SimConfig() if sim_cfg is None else sim_cfg
    stats = CollectStats()
    records = []
    index = 0
    limit = max(20, n_demos * 20)
    if workers > 1:
        import multiprocessing as mp

        pool = mp.Pool(workers)
    else:
        pool = None
    try:
        while len(records) < n_demos and index < limit:
            batch = min(max(workers * 4, 1), n_demos - len(records) + workers)
            args = [(index + k, root_seed, sim_cfg, budget) for k in range(batch)]
            index += batch
            if pool is None:
                results = [_collect_one(*a) for a in args]
            else:
                results = pool.starmap(_collect_one, args)
            for rec, status in results:
                stats.attempted += 1
                if rec is None:
                    if status == "timeout":
                        stats.solver_timeouts += 1
                    elif status == "unsolvable":
                        stats.solver_unsolvable += 1
                    else:
                        stats.setup_failures += 1
                    continue
                if len(records) < n_demos:
                    records.append(rec)
                    stats.collected += 1
            if progress is not None:
                progress(len(records))
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return records, stats


# -- processing --------------------------------------------------------------------


def filter_horizon(records, max_len: int = config.HORIZON):
    """Mark records with trajectories longer than max_len as dropped."""
    out = []
    for r in records:
        if len(r) > max_len:
            out.append(replace(r, kept=False))
        else:
            out.append(r)
    return out


def relabel(record: DemoRecord) -> DemoRecord:
    """Goal := the object position actually reached (terminal relabeling)."""
    assert len(record) > 0, "cannot relabel an empty trajectory"
    goal = record.trajectory.observations[-1, 3:5].copy()
    return replace(record, relabeled_goal=goal)


def prune(record: DemoRecord, eps: float = config.STATIONARY_EPS) -> DemoRecord:
    """Truncate to the last tick at which the object still moved.

    Requires relabel first; a record whose object never moved is dropped.
    The relabeled goal is re-read from the truncated endpoint, which the
    truncation rule keeps at the object's final resting position.
    """
    assert record.relabeled_goal is not None, "prune requires relabel first"
    obs = record.trajectory.observations
    disp = np.hypot(
        np.diff(obs[:, 3]), np.diff(obs[:, 4])
    )
    moving = np.nonzero(disp > eps)[0]
    if moving.size == 0:
        return replace(record, kept=False, prune_index=-1)
    last = int(moving[-1])
    traj = record.trajectory
    new_traj = replace(
        traj,
        observations=traj.observations[: last + 2].copy(),
        actions=traj.actions[: last + 1].copy(),
        arm_confs=traj.arm_confs[: last + 2].copy(),
    )
    return replace(
        record,
        trajectory=new_traj,
        prune_index=last,
        relabeled_goal=new_traj.observations[-1, 3:5].copy(),
    )


def process_records(records, max_len: int = config.HORIZON,
                    eps: float = config.STATIONARY_EPS):
    """filter -> relabel -> prune, preserving record order and drop flags."""
    out = []
    for r in filter_horizon(records, max_len):
        if not r.kept or len(r) == 0:
            out.append(replace(r, kept=False))
            continue
        out.append(prune(relabel(r), eps))
    return out


def augment_intra_goals(records, fraction: float = 0.5):
    """Optional intra-trajectory relabeling (off by default in the
    pipeline): each kept record also contributes its prefix up to an
    intermediate tick, relabeled to the pose reached there."""
    extra = []
    for r in records:
        if not r.kept:
            continue
        cut = int(len(r) * fraction)
        if cut < 2:
            continue
        traj = r.trajectory
        prefix = replace(
            traj,
            observations=traj.observations[: cut + 1].copy(),
            actions=traj.actions[:cut].copy(),
            arm_confs=traj.arm_confs[: cut + 1].copy(),
        )
        extra.append(prune(relabel(DemoRecord(trajectory=prefix)), config.STATIONARY_EPS))
    return list(records) + [e for e in extra if e.kept]


def build_dataset(records, sim_cfg: SimConfig, root_seed: int, split_seed: int,
                  gamma: float = 0.99, collect_stats: CollectStats | None = None,
                  intra_relabel: bool = False) -> Dataset:
    if intra_relabel:
        records = augment_intra_goals(records)
    kept = [r for r in records if r.kept]
    n_transitions = sum(len(r) for r in kept)
    manifest = make_manifest(
        sim_cfg,
        n_records=len(records),
        n_kept=len(kept),
        n_transitions=n_transitions,
        root_seed=root_seed,
        split_seed=split_seed,
        gamma=gamma,
        extra={"collect": collect_stats.as_dict()} if collect_stats else None,
    )
    return Dataset(manifest=manifest, records=list(records))


def record_collision_free(record: DemoRecord) -> bool:
    """Re-validate every recorded arm configuration against the static
    blocks (the pushed object itself is intentional contact)."""
    traj = record.trajectory
    base = Pose2.from_array(traj.base_pose)
    statics = traj.statics
    for q in traj.arm_confs:
        if not collision_free(statics, base, q, ignore=(traj.object_id,)):
            return False
    return True


def stats_report(dataset: Dataset) -> str:
    m = dataset.manifest
    kept = dataset.kept_records
    lengths = [len(r) for r in kept]
    rewards = 0
    if kept:
        tr = dataset.transitions()
        rewards = int(tr.reward.sum())
    lines = [
        f"records\t{m['n_records']}",
        f"kept\t{m['n_kept']}",
        f"dropped\t{m['n_records'] - m['n_kept']}",
        f"transitions\t{m['n_transitions']}",
        f"reward_total\t{rewards}",
        f"mean_length\t{float(np.mean(lengths)) if lengths else 0.0:.2f}",
        f"sim_config_hash\t{m['sim_config_hash']}",
    ]
    for key, value in sorted(m.get("collect", {}).items()):
        lines.append(f"collect_{key}\t{value}")
    return "\n".join(lines) + "\n"
