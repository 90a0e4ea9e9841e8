"""Rigid transforms and the simplified pinhole camera model.

Conventions, fixed for the whole package:

* camera frame: +x right, +y up, the camera looks along -z; world +z is up
* extrinsics are stored as world-from-camera transforms
* pixel coordinates are continuous; u grows right, v grows down, and the
  center of the pixel in column i / row j is at (i + 0.5, j + 0.5)
* depth is planar: distance along the camera -z axis, not ray length
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BehindCameraError, GeometryError, InvalidDepthError

# Re-orthonormalize when ||R^T R - I||_inf drifts past this after composition.
ORTHONORMALITY_TRIGGER = 1e-7
# Reject matrices that are not even close to a rotation.
_ROTATION_REJECT = 1e-6


def orthonormalize(rotation: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix in the Frobenius norm (polar factor via SVD)."""
    u, _, vt = np.linalg.svd(rotation)
    if np.linalg.det(u @ vt) < 0.0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
    return u @ vt


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Right-handed rotation of `angle` radians about `axis` (Rodrigues)."""
    axis = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        raise GeometryError("rotation axis must be non-zero")
    x, y, z = axis / norm
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


class RigidTransform:
    """SE(3) element mapping points as p_out = rotation @ p_in + translation.

    The rotation is validated on construction and snapped back to the
    nearest rotation whenever numerical drift exceeds the trigger, so long
    composition chains stay orthonormal.
    """

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation=None, translation=None):
        r = np.eye(3) if rotation is None else np.array(rotation, dtype=np.float64)
        t = np.zeros(3) if translation is None else np.array(translation, dtype=np.float64)
        if r.shape != (3, 3):
            raise GeometryError(f"rotation must be 3x3, got {r.shape}")
        if t.shape != (3,):
            raise GeometryError(f"translation must be a 3-vector, got {t.shape}")
        err = np.max(np.abs(r.T @ r - np.eye(3)))
        if err > _ROTATION_REJECT or np.linalg.det(r) < 0.0:
            raise GeometryError(
                f"matrix is not a rotation (||R^T R - I||_inf = {err:.3g}, "
                f"det = {np.linalg.det(r):.3g})"
            )
        if err > ORTHONORMALITY_TRIGGER:
            r = orthonormalize(r)
        self.rotation = r
        self.translation = t

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_matrix(cls, matrix) -> "RigidTransform":
        """Build from a 4x4 homogeneous matrix (row-major nested or flat 16)."""
        m = np.asarray(matrix, dtype=np.float64).reshape(4, 4)
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
            raise GeometryError(f"bottom row of a rigid transform must be [0,0,0,1], got {m[3]}")
        return cls(m[:3, :3], m[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Transform applying `other` first, then `self`."""
        r = self.rotation @ other.rotation
        t = self.rotation @ other.translation + self.translation
        if np.max(np.abs(r.T @ r - np.eye(3))) > ORTHONORMALITY_TRIGGER:
            r = orthonormalize(r)
        return RigidTransform(r, t)

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def invert(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def apply(self, points) -> np.ndarray:
        """Apply to one point (3,) or a batch (..., 3)."""
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation

    def __repr__(self) -> str:
        return f"RigidTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Composition a after b: the result maps p to a(b(p))."""
    return a.compose(b)


def invert(t: RigidTransform) -> RigidTransform:
    return t.invert()


@dataclass(frozen=True)
class CameraPose:
    """Camera extrinsics stored as a world-from-camera transform."""

    world_from_camera: RigidTransform

    @classmethod
    def from_matrix(cls, matrix) -> "CameraPose":
        return cls(RigidTransform.from_matrix(matrix))

    @property
    def position(self) -> np.ndarray:
        return self.world_from_camera.translation

    def camera_from_world(self) -> RigidTransform:
        return self.world_from_camera.invert()


def relative_pose(context: CameraPose, target: CameraPose) -> RigidTransform:
    """Transform taking context-camera-frame points into the target camera frame.

    This is the only pose information view-synthesis backends consume;
    absolute extrinsics never cross that interface.
    """
    return target.world_from_camera.invert().compose(context.world_from_camera)


@dataclass(frozen=True)
class Intrinsics:
    """Simplified intrinsics: a single vertical field of view, centered
    principal point, square pixels."""

    fov_deg: float
    width: int
    height: int

    def __post_init__(self):
        if not 0.0 < self.fov_deg < 180.0:
            raise GeometryError(f"fov_deg must be in (0, 180), got {self.fov_deg}")
        if self.width < 1 or self.height < 1:
            raise GeometryError(f"image size must be >= 1, got {self.width}x{self.height}")

    @property
    def focal_px(self) -> float:
        return (self.height / 2.0) / np.tan(np.deg2rad(self.fov_deg) / 2.0)


class Pixel(NamedTuple):
    """Continuous image coordinates; may hold scalars or arrays."""

    u: float
    v: float

    def in_frame(self, intr: Intrinsics):
        return (self.u >= 0) & (self.u < intr.width) & (self.v >= 0) & (self.v < intr.height)


def project(point_camera, intr: Intrinsics) -> Pixel:
    """Project camera-frame points (..., 3) to continuous pixel coordinates.

    Points must be strictly in front of the camera (z < 0).
    """
    p = np.asarray(point_camera, dtype=np.float64)
    z = p[..., 2]
    if np.any(z >= -1e-9):
        raise BehindCameraError("point at or behind the camera plane (z >= -1e-9)")
    f = intr.focal_px
    u = f * (p[..., 0] / -z) + intr.width / 2.0
    v = -f * (p[..., 1] / -z) + intr.height / 2.0
    return Pixel(u, v)


def deproject(pixel, depth, intr: Intrinsics) -> np.ndarray:
    """Inverse of `project` at the given planar depth; returns (..., 3)."""
    u = np.asarray(pixel[0], dtype=np.float64)
    v = np.asarray(pixel[1], dtype=np.float64)
    d = np.asarray(depth, dtype=np.float64)
    if np.any(d <= 0.0) or not np.all(np.isfinite(d)):
        raise InvalidDepthError("depth must be strictly positive and finite")
    f = intr.focal_px
    x = (u - intr.width / 2.0) * d / f
    y = -(v - intr.height / 2.0) * d / f
    return np.stack([x, y, -d], axis=-1)


def pose_to_flat(pose: CameraPose) -> list:
    """4x4 row-major list of 16 floats, the on-disk pose encoding."""
    return [float(x) for x in pose.world_from_camera.matrix.reshape(-1)]


def pose_from_flat(values) -> CameraPose:
    vals = list(values)
    if len(vals) != 16:
        raise GeometryError(f"expected 16 floats for a 4x4 pose, got {len(vals)}")
    return CameraPose.from_matrix(np.asarray(vals, dtype=np.float64).reshape(4, 4))
