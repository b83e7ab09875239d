"""Fixture constants for the desk-scale planar world.

Every physical constant lives here so the world, the samplers and the
simulator agree on one geometry.  The push-noise constants were calibrated
once (see ``benchmarks/calibrate_noise.py``) so the scripted open-loop push
lands near a ~25% success rate, then frozen.
"""

import hashlib
import json

# table and workspace (meters)
TABLE_HALF = 0.5            # table is a 1.0 x 1.0 square centered at origin
REGION_HALF = 0.15          # goal region is a 0.3-side square at table center
WORKSPACE_HALF = 1.5        # outer room walls
BLOCK_HALF = 0.03           # blocks are 0.06-side squares
PLACEMENT_MARGIN = 0.12     # block start poses sampled this far from table edge

# robot
LINK_LENGTHS = (0.25, 0.20, 0.15)
JOINT_LIMIT = 2.9           # rad, symmetric, all three joints
CAPSULE_RADIUS = 0.02       # link collision capsules
BASE_RADIUS = 0.18          # base collision disc
REST_ARM = (2.4, 2.4, 2.4)  # tucked arm, end-effector well inside the base disc

# gripper / contact
FACE_HALF_WIDTH = 0.04      # contact lost when |lateral offset| exceeds this
FACE_CLEARANCE = 0.01       # gripper-to-block gap at alignment
CONTACT_DEPTH = 0.002       # contact rule tolerates this much numeric overlap

# control
DT = 0.05                   # 20 Hz
MAX_JOINT_DELTA = 0.05      # rad per tick, actions clipped to this
PUSH_RESOLUTION = 0.02      # rad per waypoint of the scripted push path
APPROACH_RESOLUTION = 0.05  # rad per waypoint of arm approach paths
BASE_RESOLUTION = 0.02      # m per waypoint of base paths
HORIZON = 200               # max ticks per skill execution
SKILL_TOLERANCE = 0.025     # m, skill-level success radius
STATIONARY_EPS = 1e-4       # m per tick, "object stopped" threshold
STATIONARY_TICKS = 10

# push stochasticity (calibrated, then frozen)
ROT_GAIN = 2.0              # rad of block spin per (m pushed x m offset)
SLIP_GAIN = 4.5             # lateral drift per (m pushed x m offset)
SIGMA_ROT = 0.08            # rad * sqrt(1/s), per-step std scales with sqrt(dt)
SIGMA_SLIP = 0.036          # m * sqrt(1/s)

# stream engine
SOLVE_BUDGET = 30.0         # s, wall-clock budget per solve
RETRY_CAP = 10              # sampler attempts per stream instance
LEVEL_CAP = 3               # optimistic instantiation depth


def sim_config_hash(values: dict) -> str:
    """Stable short hash of a simulator configuration dict."""
    blob = json.dumps(values, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
