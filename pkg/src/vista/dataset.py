"""On-disk trajectory dataset format (version 1).

Layout::

    <root>/manifest.json
    <root>/traj_00000/frames/000000.png      8-bit RGB, one per timestep
    <root>/traj_00000/wrist/000000.png       optional wrist view
    <root>/traj_00000/actions.json           T rows x 4 floats: dx, dy, dz, close
    <root>/traj_00000/poses.json             optional, per-frame 4x4 target extrinsics
    <root>/traj_00000/states.json            optional, frozen per-frame task state
    <root>/traj_00000/depth/000000.npy       optional, float32 planar depth
    <root>/traj_00000/augment_log.json       optional, per-frame augmentation log

The manifest records intrinsics (single vertical FOV), the context camera
extrinsics as a row-major 4x4 matrix of 16 floats, and, for augmented
datasets, the full augmentation configuration. ``states.json`` is the
frozen-scene record that lets the built-in renderer re-derive ground-truth
depth and oracle views; external datasets can instead ship a ``depth/``
directory with one float32 ``.npy`` map per frame.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional

import numpy as np
from PIL import Image

from .errors import DatasetError
from .geometry import CameraPose, Intrinsics, pose_from_flat, pose_to_flat

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"


@dataclass
class DatasetManifest:
    fov_deg: float
    width: int
    height: int
    camera: CameraPose
    num_trajectories: int
    seed: int
    wrist: bool
    augmentation: Optional[dict] = None
    version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "fov_deg": float(self.fov_deg),
            "width": int(self.width),
            "height": int(self.height),
            "camera_world_from_camera": pose_to_flat(self.camera),
            "num_trajectories": int(self.num_trajectories),
            "seed": int(self.seed),
            "wrist": bool(self.wrist),
            "augmentation": self.augmentation,
        }

    @classmethod
    def from_dict(cls, data: dict, path="<manifest>") -> "DatasetManifest":
        try:
            return cls(
                fov_deg=float(data["fov_deg"]),
                width=int(data["width"]),
                height=int(data["height"]),
                camera=pose_from_flat(data["camera_world_from_camera"]),
                num_trajectories=int(data["num_trajectories"]),
                seed=int(data["seed"]),
                wrist=bool(data["wrist"]),
                augmentation=data.get("augmentation"),
                version=int(data.get("version", FORMAT_VERSION)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"{path}: invalid manifest ({exc})") from exc

    @property
    def intrinsics(self) -> Intrinsics:
        return Intrinsics(fov_deg=self.fov_deg, width=self.width, height=self.height)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1), encoding="utf-8")


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DatasetError(f"{path}: missing file") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: invalid JSON ({exc})") from exc


def load_png(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError as exc:
        raise DatasetError(f"{path}: missing frame") from exc


def save_png(path: Path, rgb: np.ndarray) -> None:
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8), mode="RGB").save(path)


class TrajectoryDataset:
    """Reader/writer over the on-disk layout above."""

    def __init__(self, root, manifest: DatasetManifest):
        self.root = Path(root)
        self.manifest = manifest

    @classmethod
    def open(cls, root) -> "TrajectoryDataset":
        root = Path(root)
        manifest_path = root / MANIFEST_NAME
        manifest = DatasetManifest.from_dict(_read_json(manifest_path), path=str(manifest_path))
        return cls(root, manifest)

    @classmethod
    def create(cls, root, manifest: DatasetManifest, force: bool = False) -> "TrajectoryDataset":
        root = Path(root)
        if root.exists() and any(root.iterdir()):
            if not force:
                raise DatasetError(f"{root}: output directory exists and is not empty (use force)")
            shutil.rmtree(root)
        root.mkdir(parents=True, exist_ok=True)
        ds = cls(root, manifest)
        ds.write_manifest()
        return ds

    def write_manifest(self) -> None:
        _write_json(self.root / MANIFEST_NAME, self.manifest.to_dict())

    # -- path helpers -------------------------------------------------------

    def traj_dir(self, i: int) -> Path:
        return self.root / f"traj_{i:05d}"

    def frame_path(self, i: int, t: int) -> Path:
        return self.traj_dir(i) / "frames" / f"{t:06d}.png"

    def wrist_path(self, i: int, t: int) -> Path:
        return self.traj_dir(i) / "wrist" / f"{t:06d}.png"

    def depth_path(self, i: int, t: int) -> Path:
        return self.traj_dir(i) / "depth" / f"{t:06d}.npy"

    # -- readers ------------------------------------------------------------

    @property
    def num_trajectories(self) -> int:
        return self.manifest.num_trajectories

    @property
    def intrinsics(self) -> Intrinsics:
        return self.manifest.intrinsics

    @property
    def camera(self) -> CameraPose:
        return self.manifest.camera

    def traj_len(self, i: int) -> int:
        return len(self.actions(i))

    def load_frame(self, i: int, t: int) -> np.ndarray:
        return load_png(self.frame_path(i, t))

    def load_wrist(self, i: int, t: int) -> np.ndarray:
        return load_png(self.wrist_path(i, t))

    def load_depth(self, i: int, t: int) -> np.ndarray:
        path = self.depth_path(i, t)
        try:
            return np.load(path)
        except FileNotFoundError as exc:
            raise DatasetError(f"{path}: missing depth map") from exc

    def has_depth(self, i: int = 0) -> bool:
        return (self.traj_dir(i) / "depth").is_dir()

    def actions(self, i: int) -> List[list]:
        return _read_json(self.traj_dir(i) / "actions.json")

    def states(self, i: int) -> Optional[List[dict]]:
        path = self.traj_dir(i) / "states.json"
        if not path.exists():
            return None
        return _read_json(path)

    def poses(self, i: int) -> Optional[List[CameraPose]]:
        path = self.traj_dir(i) / "poses.json"
        if not path.exists():
            return None
        return [pose_from_flat(row) for row in _read_json(path)]

    def augment_log(self, i: int) -> Optional[List[dict]]:
        path = self.traj_dir(i) / "augment_log.json"
        if not path.exists():
            return None
        return _read_json(path)

    def iter_transitions(self) -> Iterator[tuple]:
        for i in range(self.num_trajectories):
            for t in range(self.traj_len(i)):
                yield i, t

    # -- writers ------------------------------------------------------------

    def write_trajectory(
        self,
        i: int,
        frames,
        action_rows,
        wrist_frames=None,
        poses=None,
        states=None,
        depths=None,
        augment_log=None,
    ) -> None:
        if len(frames) != len(action_rows):
            raise DatasetError(
                f"{self.traj_dir(i)}: {len(frames)} frames but {len(action_rows)} actions"
            )
        tdir = self.traj_dir(i)
        (tdir / "frames").mkdir(parents=True, exist_ok=True)
        for t, frame in enumerate(frames):
            save_png(self.frame_path(i, t), frame)
        if wrist_frames is not None:
            (tdir / "wrist").mkdir(parents=True, exist_ok=True)
            for t, frame in enumerate(wrist_frames):
                save_png(self.wrist_path(i, t), frame)
        if depths is not None:
            (tdir / "depth").mkdir(parents=True, exist_ok=True)
            for t, depth in enumerate(depths):
                np.save(self.depth_path(i, t), np.asarray(depth, dtype=np.float32))
        _write_json(tdir / "actions.json", action_rows)
        if poses is not None:
            _write_json(tdir / "poses.json", [pose_to_flat(p) for p in poses])
        if states is not None:
            _write_json(tdir / "states.json", states)
        if augment_log is not None:
            _write_json(tdir / "augment_log.json", augment_log)

    def copy_aux_files(self, src: "TrajectoryDataset", src_traj: int, dst_traj: int) -> None:
        """Copy actions/wrist/states byte-for-byte from a source trajectory."""
        sdir = src.traj_dir(src_traj)
        ddir = self.traj_dir(dst_traj)
        ddir.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(sdir / "actions.json", ddir / "actions.json")
        if (sdir / "states.json").exists():
            shutil.copyfile(sdir / "states.json", ddir / "states.json")
        if (sdir / "wrist").is_dir():
            shutil.copytree(sdir / "wrist", ddir / "wrist", dirs_exist_ok=True)
