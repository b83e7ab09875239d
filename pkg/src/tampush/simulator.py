"""Stochastic quasi-static planar pushing simulator.

Blocks move only while the gripper face pushes them (quasi-static); the
push response is noisy, so an open-loop replay of the planned push path
drifts off-center and fails at a calibrated rate.  Arm motion is purely
kinematic: planned skills (move/pick/place/align) execute exactly, and
only the push skill runs tick by tick at 20 Hz.

Contact model, per tick and per free block: with the block within the
gripper face's half-width and not behind it, forward gripper motion closes
the gap up to the face clearance and imparts that displacement along the
face normal.  Lateral slip and block spin grow with the contact offset
(gain terms) plus white noise, so off-center contact compounds; contact is
lost once the offset exceeds the face half-width.  Motion that would drive
a block into another block or the table rim is dropped for that tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import config
from .accel import jit
from .collision import block_pose_free
from .geometry import Pose2, wrap_angle
from .kinematics import fk_tuple, forward_kinematics
from .scene import SceneSpec

REST = np.array(config.REST_ARM)


@dataclass(frozen=True)
class SimConfig:
    dt: float = config.DT
    max_joint_delta: float = config.MAX_JOINT_DELTA
    rot_gain: float = config.ROT_GAIN
    slip_gain: float = config.SLIP_GAIN
    sigma_rot: float = config.SIGMA_ROT
    sigma_slip: float = config.SIGMA_SLIP

    def values_dict(self) -> dict:
        return {
            "dt": self.dt,
            "max_joint_delta": self.max_joint_delta,
            "rot_gain": self.rot_gain,
            "slip_gain": self.slip_gain,
            "sigma_rot": self.sigma_rot,
            "sigma_slip": self.sigma_slip,
        }

    def digest(self) -> str:
        return config.sim_config_hash(self.values_dict())

    def without_noise(self) -> "SimConfig":
        return replace(self, sigma_rot=0.0, sigma_slip=0.0)


@dataclass
class StepFlags:
    clipped: bool = False
    blocked: bool = False


@dataclass
class WorldState:
    base: Pose2
    arm: np.ndarray
    block_poses: np.ndarray  # (n, 3)
    movable: np.ndarray  # (n,) bool, False for fixed scenery
    attached: tuple | None = None  # (block index, Pose2 block-in-gripper)
    tick: int = 0
    flags: StepFlags = field(default_factory=StepFlags)

    def copy(self) -> "WorldState":
        return WorldState(
            base=self.base,
            arm=self.arm.copy(),
            block_poses=self.block_poses.copy(),
            movable=self.movable,
            attached=self.attached,
            tick=self.tick,
            flags=StepFlags(self.flags.clipped, self.flags.blocked),
        )

    def ee_pose(self) -> Pose2:
        return forward_kinematics(self.base, self.arm)

    def block_pose(self, idx: int) -> Pose2:
        return Pose2.from_array(self.block_poses[idx])


def world_from_scene(scene: SceneSpec) -> WorldState:
    return WorldState(
        base=scene.base_start,
        arm=REST.copy(),
        block_poses=scene.poses_array(),
        movable=np.array([not b.fixed for b in scene.blocks], dtype=bool),
    )


@jit
def _contact_update(
    ox, oy, ex_old, ey_old, th_old, ex_new, ey_new, th_new,
    half, clearance, face_half, depth, slip_gain, rot_gain,
    slip_noise, rot_noise,
):
    """Push response of one block for one tick.

    Returns (engaged, dx, dy, dtheta): the block displacement in world
    coordinates, zero when the face is not engaged.
    """
    n_old_x, n_old_y = math.cos(th_old), math.sin(th_old)
    gap_old = (ox - ex_old) * n_old_x + (oy - ey_old) * n_old_y - half
    off_old = -(ox - ex_old) * n_old_y + (oy - ey_old) * n_old_x
    if abs(off_old) > face_half or gap_old < -depth:
        return False, 0.0, 0.0, 0.0
    n_new_x, n_new_y = math.cos(th_new), math.sin(th_new)
    gap_new = (ox - ex_new) * n_new_x + (oy - ey_new) * n_new_y - half
    limit = gap_old if gap_old < clearance else clearance
    push = limit - gap_new
    if push <= 0.0:
        return False, 0.0, 0.0, 0.0
    slip = slip_gain * off_old * push + slip_noise
    rot = rot_gain * off_old * push + rot_noise
    dx = n_new_x * push - n_new_y * slip
    dy = n_new_y * push + n_new_x * slip
    return True, dx, dy, rot


def step(state: WorldState, action, cfg: SimConfig, rng) -> WorldState:
    """One 20 Hz tick: clip and apply joint deltas, then resolve pushes."""
    action = np.asarray(action, dtype=float)
    clipped = np.clip(action, -cfg.max_joint_delta, cfg.max_joint_delta)
    was_clipped = bool(np.any(clipped != action))
    q_new = np.clip(state.arm + clipped, -config.JOINT_LIMIT, config.JOINT_LIMIT)

    b = state.base
    ex_old, ey_old, th_old = fk_tuple(b.x, b.y, b.theta, state.arm[0], state.arm[1], state.arm[2])
    ex_new, ey_new, th_new = fk_tuple(b.x, b.y, b.theta, q_new[0], q_new[1], q_new[2])

    out = state.copy()
    out.arm = q_new
    out.tick = state.tick + 1
    out.flags = StepFlags(clipped=was_clipped)

    noise_scale = math.sqrt(cfg.dt)
    attached_idx = state.attached[0] if state.attached else -1
    for i in range(state.block_poses.shape[0]):
        if i == attached_idx or not state.movable[i]:
            continue
        ox, oy, oth = out.block_poses[i]
        engaged, dx, dy, dth = _contact_update(
            ox, oy, ex_old, ey_old, th_old, ex_new, ey_new, th_new,
            config.BLOCK_HALF, config.FACE_CLEARANCE, config.FACE_HALF_WIDTH,
            config.CONTACT_DEPTH, cfg.slip_gain, cfg.rot_gain,
            cfg.sigma_slip * noise_scale * rng.normal() if cfg.sigma_slip > 0.0 else 0.0,
            cfg.sigma_rot * noise_scale * rng.normal() if cfg.sigma_rot > 0.0 else 0.0,
        )
        if not engaged:
            continue
        candidate = Pose2(ox + dx, oy + dy, wrap_angle(oth + dth))
        if block_pose_free(out.block_poses, candidate, ignore={i, attached_idx}):
            out.block_poses[i, 0] = candidate.x
            out.block_poses[i, 1] = candidate.y
            out.block_poses[i, 2] = candidate.theta
        else:
            out.flags.blocked = True

    if state.attached is not None:
        idx, rel = state.attached
        ee = Pose2(ex_new, ey_new, th_new)
        carried = ee.compose(rel)
        out.block_poses[idx] = carried.to_array()
    return out


# -- observations ---------------------------------------------------------------


def observe(state: WorldState, obj_idx: int) -> np.ndarray:
    """[ee x, y, theta, object x, y, theta] in the base frame."""
    inv = state.base.inverse()
    ee = inv.compose(state.ee_pose())
    obj = inv.compose(state.block_pose(obj_idx))
    return np.array([ee.x, ee.y, ee.theta, obj.x, obj.y, obj.theta])


def goal_to_base_frame(state: WorldState, goal_xy_world) -> np.ndarray:
    gx, gy = state.base.inverse().transform_point(float(goal_xy_world[0]), float(goal_xy_world[1]))
    return np.array([gx, gy])


def base_point_to_world(base: Pose2, xy) -> np.ndarray:
    x, y = base.transform_point(float(xy[0]), float(xy[1]))
    return np.array([x, y])


@dataclass
class Trajectory:
    observations: np.ndarray  # (T+1, obs_dim), base frame
    actions: np.ndarray  # (T, act_dim)
    planner_goal: np.ndarray  # (goal_dim,), base frame
    object_id: int
    skill: str
    seed: int
    arm_confs: np.ndarray  # (T+1, 3)
    base_pose: np.ndarray  # (3,) world frame
    statics: np.ndarray  # (n, 3) world block poses at skill start

    def __len__(self):
        return self.actions.shape[0]

    def final_object_xy(self) -> np.ndarray:
        return self.observations[-1, 3:5].copy()


def _record(state, obj_idx, obs_list, arm_list):
    obs_list.append(observe(state, obj_idx))
    arm_list.append(state.arm.copy())


def execute_subroutine_push(
    state: WorldState, obj_idx: int, path, goal_xy_world, cfg: SimConfig, rng,
    horizon: int = config.HORIZON, seed: int = 0,
):
    """Open-loop replay of the planned push path, one waypoint per tick."""
    goal_base = goal_to_base_frame(state, goal_xy_world)
    obs, arms, acts = [], [], []
    steps = min(max(1, path.shape[0] - 1), horizon)
    statics = state.block_poses.copy()
    for t in range(steps):
        _record(state, obj_idx, obs, arms)
        if path.shape[0] > 1:
            action = path[t + 1] - path[t]
        else:
            action = np.zeros(3)
        acts.append(np.clip(action, -cfg.max_joint_delta, cfg.max_joint_delta))
        state = step(state, acts[-1], cfg, rng)
    _record(state, obj_idx, obs, arms)
    traj = Trajectory(
        observations=np.array(obs),
        actions=np.array(acts),
        planner_goal=goal_base,
        object_id=obj_idx,
        skill="push",
        seed=seed,
        arm_confs=np.array(arms),
        base_pose=state.base.to_array(),
        statics=statics,
    )
    return traj, state


def execute_policy(
    state: WorldState, obj_idx: int, goal_xy_world, policy, horizon: int,
    cfg: SimConfig, rng, seed: int = 0,
):
    """Closed-loop rollout at 20 Hz; stops at the horizon or once the object
    has been stationary for 10 consecutive ticks after it first moved."""
    assert horizon >= 1
    goal_base = goal_to_base_frame(state, goal_xy_world)
    obs, arms, acts = [], [], []
    statics = state.block_poses.copy()
    hidden = policy.reset()
    moved = False
    still = 0
    for _ in range(horizon):
        o = observe(state, obj_idx)
        obs.append(o)
        arms.append(state.arm.copy())
        action, hidden = policy.act(o, goal_base, hidden)
        action = np.clip(np.asarray(action, dtype=float), -cfg.max_joint_delta, cfg.max_joint_delta)
        acts.append(action)
        before = state.block_poses[obj_idx, :2].copy()
        state = step(state, action, cfg, rng)
        disp = math.hypot(*(state.block_poses[obj_idx, :2] - before))
        if disp > config.STATIONARY_EPS:
            moved = True
            still = 0
        elif moved:
            still += 1
            if still >= config.STATIONARY_TICKS:
                break
    _record(state, obj_idx, obs, arms)
    traj = Trajectory(
        observations=np.array(obs),
        actions=np.array(acts),
        planner_goal=goal_base,
        object_id=obj_idx,
        skill="push",
        seed=seed,
        arm_confs=np.array(arms),
        base_pose=state.base.to_array(),
        statics=statics,
    )
    return traj, state


# -- success tests ----------------------------------------------------------------


def skill_success(state: WorldState, obj_idx: int, goal_xy_world) -> bool:
    dx = state.block_poses[obj_idx, 0] - float(goal_xy_world[0])
    dy = state.block_poses[obj_idx, 1] - float(goal_xy_world[1])
    return math.hypot(dx, dy) <= config.SKILL_TOLERANCE


def task_success(state: WorldState, scene: SceneSpec) -> bool:
    """All movable block centers inside the (closed) goal region."""
    for i, b in enumerate(scene.blocks):
        if b.fixed:
            continue
        x, y = state.block_poses[i, 0], state.block_poses[i, 1]
        if abs(x) > config.REGION_HALF or abs(y) > config.REGION_HALF:
            return False
    return True
