"""Toy tabletop reach-and-lift task with a scripted expert.

World frame: origin at the robot base on the table surface, +z up. The
gripper is a free-floating point (rendered as a pair of finger boxes) that
moves by bounded deltas; grasping is kinematic attachment within a small
radius. An episode succeeds when the cube is lifted 10 cm above the table.

The default scene surrounds the workspace with a large backdrop dome so
that ground-truth depth is finite across the whole frame; the default
third-person camera sits on a 0.7106 m sphere around the base, which is
also the sphere the arc view distribution samples from.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import CameraPose, Intrinsics, RigidTransform
from .sampling import SeededRng, derive_key, look_at
from .scene import Box, Cylinder, Scene, Sphere, render

MAX_STEP = 0.02
GRASP_RADIUS = 0.03
HORIZON = 80
TABLE_HEIGHT = 0.0
LIFT_SUCCESS_DZ = 0.1
CUBE_HALF = 0.02
SPAWN_HALF = 0.10
APPROACH_HEIGHT = 0.08
_CLOSE_DIST = 0.025
_ALIGN_TOL = 0.005
HOME = np.array([0.0, -0.12, 0.28])

CAMERA_DISTANCE = 0.7106
CAMERA_ELEVATION_DEG = 42.0
DEFAULT_INTRINSICS = Intrinsics(fov_deg=45.0, width=256, height=256)

_TABLE_ALBEDO = (0.60, 0.48, 0.38)
_CUBE_ALBEDO = (0.85, 0.08, 0.08)
_DISTRACTOR_ALBEDO = (0.15, 0.25, 0.80)
_CYLINDER_ALBEDO = (0.10, 0.65, 0.20)
_FINGER_ALBEDO = (0.15, 0.15, 0.18)
_DOME_ALBEDO = (0.58, 0.72, 0.88)

_WRIST_OFFSET = np.array([0.0, -0.05, 0.0])
_WRIST_FORWARD = np.array([0.0, np.cos(np.deg2rad(45.0)), -np.sin(np.deg2rad(45.0))])


@dataclass
class TaskState:
    cube_pos: np.ndarray
    gripper_pos: np.ndarray
    gripper_closed: bool
    attached: bool
    t: int

    def to_dict(self) -> dict:
        return {
            "cube": [float(x) for x in self.cube_pos],
            "gripper": [float(x) for x in self.gripper_pos],
            "closed": bool(self.gripper_closed),
            "attached": bool(self.attached),
            "t": int(self.t),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TaskState":
        return cls(
            cube_pos=np.asarray(data["cube"], dtype=np.float64),
            gripper_pos=np.asarray(data["gripper"], dtype=np.float64),
            gripper_closed=bool(data["closed"]),
            attached=bool(data["attached"]),
            t=int(data["t"]),
        )


@dataclass
class Action:
    delta_gripper: np.ndarray
    close: bool

    def __post_init__(self):
        self.delta_gripper = np.asarray(self.delta_gripper, dtype=np.float64)

    def as_row(self) -> list:
        return [float(self.delta_gripper[0]), float(self.delta_gripper[1]),
                float(self.delta_gripper[2]), 1.0 if self.close else 0.0]

    @classmethod
    def from_row(cls, row) -> "Action":
        return cls(np.asarray(row[:3], dtype=np.float64), bool(row[3] > 0.5))


@dataclass
class Observation:
    third_person_rgb: np.ndarray
    wrist_rgb: Optional[np.ndarray]
    proprio: np.ndarray


def default_camera() -> CameraPose:
    elev = np.deg2rad(CAMERA_ELEVATION_DEG)
    eye = np.array(
        [0.0, -CAMERA_DISTANCE * np.cos(elev), CAMERA_DISTANCE * np.sin(elev)]
    )
    return look_at(eye, (0.0, 0.0, 0.0))


def scene_center() -> np.ndarray:
    """Robot base point; the arc distribution's default sphere center."""
    return np.zeros(3)


def build_scene(state: TaskState) -> Scene:
    finger_offset = 0.021 if state.gripper_closed else 0.045
    gx, gy, gz = state.gripper_pos
    objects = [
        Box(RigidTransform(translation=(0.0, 0.0, -0.02)), (2.2, 2.2, 0.02), _TABLE_ALBEDO),
        Sphere(RigidTransform(), 25.0, _DOME_ALBEDO),
        Box(RigidTransform(translation=(0.18, 0.12, 0.03)), (0.03, 0.03, 0.03), _DISTRACTOR_ALBEDO),
        Cylinder(RigidTransform(translation=(-0.17, 0.10, 0.05)), 0.025, 0.05, _CYLINDER_ALBEDO),
        Box(RigidTransform(translation=state.cube_pos), (CUBE_HALF,) * 3, _CUBE_ALBEDO),
        Box(RigidTransform(translation=(gx - finger_offset, gy, gz + 0.025)),
            (0.007, 0.007, 0.035), _FINGER_ALBEDO),
        Box(RigidTransform(translation=(gx + finger_offset, gy, gz + 0.025)),
            (0.007, 0.007, 0.035), _FINGER_ALBEDO),
    ]
    return Scene(objects=objects)


def reset(seed: int) -> TaskState:
    rng = SeededRng(seed)
    x = float(rng.uniform(-SPAWN_HALF, SPAWN_HALF))
    y = float(rng.uniform(-SPAWN_HALF, SPAWN_HALF))
    return TaskState(
        cube_pos=np.array([x, y, CUBE_HALF]),
        gripper_pos=HOME.copy(),
        gripper_closed=False,
        attached=False,
        t=0,
    )


def step(state: TaskState, action: Action):
    """Advance one timestep; returns (new_state, done, success)."""
    delta = np.clip(action.delta_gripper, -MAX_STEP, MAX_STEP)
    gripper = state.gripper_pos + delta
    closed = bool(action.close)
    cube = state.cube_pos.copy()
    attached = state.attached and closed
    if attached:
        cube = cube + delta
    elif closed and not state.attached and np.linalg.norm(gripper - cube) <= GRASP_RADIUS:
        attached = True
    new_state = TaskState(cube, gripper, closed, attached, state.t + 1)
    success = bool(cube[2] > TABLE_HEIGHT + LIFT_SUCCESS_DZ)
    done = success or new_state.t >= HORIZON
    return new_state, done, success


def expert_action(state: TaskState) -> Action:
    """Scripted expert: move above the cube, descend, close, lift."""
    if state.attached:
        return Action(np.array([0.0, 0.0, MAX_STEP]), True)
    cube = state.cube_pos
    grip = state.gripper_pos
    if np.linalg.norm((grip - cube)[:2]) > _ALIGN_TOL:
        target = cube + np.array([0.0, 0.0, APPROACH_HEIGHT])
        return Action(np.clip(target - grip, -MAX_STEP, MAX_STEP), False)
    if np.linalg.norm(grip - cube) > _CLOSE_DIST:
        return Action(np.clip(cube - grip, -MAX_STEP, MAX_STEP), False)
    return Action(np.zeros(3), True)


def wrist_pose(state: TaskState) -> CameraPose:
    """Camera rigidly attached to the gripper: 5 cm behind, pitched 45 degrees
    down. Independent of any third-person camera placement by construction."""
    eye = state.gripper_pos + _WRIST_OFFSET
    return look_at(eye, eye + _WRIST_FORWARD)


def proprio_vector(state: TaskState) -> np.ndarray:
    return np.array(
        [state.gripper_pos[0], state.gripper_pos[1], state.gripper_pos[2],
         1.0 if state.gripper_closed else 0.0]
    )


def observe(state: TaskState, camera: CameraPose, intr: Intrinsics = DEFAULT_INTRINSICS,
            with_wrist: bool = False) -> Observation:
    scene = build_scene(state)
    rgb, _ = render(scene, camera, intr)
    wrist = render(scene, wrist_pose(state), intr)[0] if with_wrist else None
    return Observation(third_person_rgb=rgb, wrist_rgb=wrist, proprio=proprio_vector(state))


class ScriptedExpertPolicy:
    """Privileged expert wrapped with the policy interface, for eval oracles."""

    needs_state = True
    use_wrist = False

    def predict_state(self, state: TaskState) -> Action:
        return expert_action(state)


def run_expert_episode(seed: int, camera: CameraPose, intr: Intrinsics = DEFAULT_INTRINSICS,
                       with_wrist: bool = False):
    """Roll the scripted expert from a seeded reset.

    Returns (frames, wrist_frames, action_rows, state_dicts, success).
    """
    state = reset(seed)
    frames, wrist_frames, rows, states = [], [], [], []
    success = False
    for _ in range(HORIZON):
        obs = observe(state, camera, intr, with_wrist)
        action = expert_action(state)
        frames.append(obs.third_person_rgb)
        if with_wrist:
            wrist_frames.append(obs.wrist_rgb)
        rows.append(action.as_row())
        states.append(state.to_dict())
        state, done, success = step(state, action)
        if done:
            break
    return frames, wrist_frames if with_wrist else None, rows, states, success


def gen_demos(n: int, seed: int, out_dir, camera: CameraPose | None = None,
              intr: Intrinsics = DEFAULT_INTRINSICS, with_wrist: bool = False,
              force: bool = False):
    """Generate `n` scripted-expert demonstrations and write a trajectory
    dataset rooted at `out_dir`. Deterministic in (n, seed)."""
    from .dataset import DatasetManifest, TrajectoryDataset

    if n < 1:
        raise ValueError("n must be >= 1")
    camera = camera or default_camera()
    manifest = DatasetManifest(
        fov_deg=intr.fov_deg,
        width=intr.width,
        height=intr.height,
        camera=camera,
        num_trajectories=n,
        seed=seed,
        wrist=with_wrist,
    )
    ds = TrajectoryDataset.create(out_dir, manifest, force=force)
    for i in range(n):
        episode_seed = derive_key(seed, i)
        frames, wrist_frames, rows, states, success = run_expert_episode(
            episode_seed, camera, intr, with_wrist
        )
        if not success:
            raise RuntimeError(f"scripted expert failed on demo {i} (seed {seed})")
        ds.write_trajectory(i, frames, rows, wrist_frames=wrist_frames, states=states)
    return ds
