"""Novel-view-synthesis backends behind a single request interface.

A backend consumes an `NvsRequest` carrying the context image, the
simplified intrinsics, and the *relative* transform from the context camera
frame to the target camera frame; absolute extrinsics never cross this
interface. Two implementations are provided:

* ``reproject``: lifts every valid depth pixel to a 3D point, transforms the
  cloud by the relative pose, splats each point as a z-buffered disc of
  radius 0.007 in NDC (the [-1, 1] range spanning the shorter image side,
  keeping up to 8 nearest points per pixel, nearest point's color winning),
  and fills uncovered pixels with pull-push inpainting.
* ``oracle``: re-renders the frozen scene snapshot at the target pose; an
  upper bound for what per-frame view augmentation can achieve.

``reproject_noisydepth`` is ``reproject`` after `perturb_depth`, emulating
the error profile of an off-the-shelf metric depth estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numba import njit

from .errors import ConfigError, GeometryError, MissingDepthError, OracleUnavailableError
from .geometry import CameraPose, Intrinsics, RigidTransform, deproject, project
from .sampling import SeededRng
from .scene import Scene, render

SPLAT_RADIUS_NDC = 0.007
SPLAT_POINTS_PER_PIXEL = 8
_NEUTRAL_GREY = 128.0


@dataclass
class SceneHandle:
    """Opaque reference to a frozen simulator scene plus its context camera."""

    scene: Scene
    camera: CameraPose


@dataclass
class NvsRequest:
    rgb: np.ndarray
    intrinsics: Intrinsics
    relative: RigidTransform
    depth: Optional[np.ndarray] = None
    scene_handle: Optional[SceneHandle] = None

    def __post_init__(self):
        self.rgb = np.asarray(self.rgb, dtype=np.uint8)
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise GeometryError(f"rgb must be (H, W, 3), got {self.rgb.shape}")
        if self.rgb.shape[:2] != (self.intrinsics.height, self.intrinsics.width):
            raise GeometryError(
                f"rgb shape {self.rgb.shape[:2]} does not match intrinsics "
                f"{self.intrinsics.height}x{self.intrinsics.width}"
            )
        if self.depth is not None:
            self.depth = np.asarray(self.depth, dtype=np.float64)
            if self.depth.shape != self.rgb.shape[:2]:
                raise GeometryError(
                    f"depth shape {self.depth.shape} does not match rgb {self.rgb.shape[:2]}"
                )


@dataclass
class SynthResult:
    rgb: np.ndarray
    valid_mask: np.ndarray


@njit(cache=True)
def _splat_kernel(u, v, z, colors, height, width, radius, zbuf, cbuf):  # pragma: no cover
    n = u.shape[0]
    k = zbuf.shape[2]
    r2 = radius * radius
    for p in range(n):
        up = u[p]
        vp = v[p]
        zp = z[p]
        col_lo = int(np.floor(up - 0.5 - radius))
        col_hi = int(np.floor(up - 0.5 + radius)) + 1
        row_lo = int(np.floor(vp - 0.5 - radius))
        row_hi = int(np.floor(vp - 0.5 + radius)) + 1
        for row in range(row_lo, row_hi + 1):
            if row < 0 or row >= height:
                continue
            dy = (row + 0.5) - vp
            for col in range(col_lo, col_hi + 1):
                if col < 0 or col >= width:
                    continue
                dx = (col + 0.5) - up
                if dx * dx + dy * dy > r2:
                    continue
                if zp >= zbuf[row, col, k - 1]:
                    continue
                pos = k - 1
                while pos > 0 and zp < zbuf[row, col, pos - 1]:
                    zbuf[row, col, pos] = zbuf[row, col, pos - 1]
                    pos -= 1
                zbuf[row, col, pos] = zp
                if pos == 0:
                    cbuf[row, col, 0] = colors[p, 0]
                    cbuf[row, col, 1] = colors[p, 1]
                    cbuf[row, col, 2] = colors[p, 2]


def splat_points(points, colors, intr: Intrinsics, radius_ndc: float = SPLAT_RADIUS_NDC,
                 k: int = SPLAT_POINTS_PER_PIXEL):
    """Render a colored point cloud (target-camera frame) by disc splatting.

    Returns (rgb, valid_mask, zbuffer) where zbuffer is (H, W, k) planar
    depths, +inf beyond the covered count. Points behind the camera are
    dropped; ties in depth keep the earliest point, so the result is a pure
    function of the input order.
    """
    if radius_ndc <= 0.0:
        raise ConfigError("radius_ndc must be positive")
    if k < 1:
        raise ConfigError("k must be >= 1")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    cols = np.asarray(colors, dtype=np.uint8).reshape(-1, 3)
    if len(pts) != len(cols):
        raise GeometryError(f"{len(pts)} points but {len(cols)} colors")
    front = pts[:, 2] < -1e-9
    pts = pts[front]
    cols = cols[front]
    height, width = intr.height, intr.width
    zbuf = np.full((height, width, k), np.inf, dtype=np.float32)
    cbuf = np.zeros((height, width, 3), dtype=np.uint8)
    if len(pts):
        px = project(pts, intr)
        _splat_kernel(
            np.ascontiguousarray(px.u),
            np.ascontiguousarray(px.v),
            np.ascontiguousarray(-pts[:, 2]),
            cols,
            height,
            width,
            radius_ndc * (min(width, height) / 2.0),
            zbuf,
            cbuf,
        )
    valid = zbuf[:, :, 0] < np.inf
    return cbuf, valid, zbuf


def _bilinear_resize(img: np.ndarray, shape) -> np.ndarray:
    """Bilinear resample of (h, w[, C]) to `shape`, half-pixel-center convention."""
    out_h, out_w = shape
    in_h, in_w = img.shape[:2]
    ys = np.clip((np.arange(out_h) + 0.5) * in_h / out_h - 0.5, 0.0, in_h - 1.0)
    xs = np.clip((np.arange(out_w) + 0.5) * in_w / out_w - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    if img.ndim == 3:
        wy = wy[:, :, None]
        wx = wx[:, :, None]
    top = img[y0][:, x0] * (1.0 - wx) + img[y0][:, x1] * wx
    bottom = img[y1][:, x0] * (1.0 - wx) + img[y1][:, x1] * wx
    return top * (1.0 - wy) + bottom * wy


def _pull(color: np.ndarray, weight: np.ndarray):
    h, w = weight.shape
    if h % 2 or w % 2:
        color = np.pad(color, ((0, h % 2), (0, w % 2), (0, 0)))
        weight = np.pad(weight, ((0, h % 2), (0, w % 2)))
    wc = color * weight[:, :, None]
    wsum = weight[0::2, 0::2] + weight[1::2, 0::2] + weight[0::2, 1::2] + weight[1::2, 1::2]
    csum = wc[0::2, 0::2] + wc[1::2, 0::2] + wc[0::2, 1::2] + wc[1::2, 1::2]
    with np.errstate(invalid="ignore"):
        cnext = np.where(wsum[:, :, None] > 0.0, csum / np.maximum(wsum, 1e-300)[:, :, None], 0.0)
    return cnext, wsum * 0.25


def inpaint_pullpush(rgb: np.ndarray, valid_mask: np.ndarray) -> np.ndarray:
    """Fill invalid pixels from progressively coarser averages of valid ones.

    Valid pixels pass through unchanged; a fully invalid image comes back as
    uniform neutral grey.
    """
    rgb = np.asarray(rgb, dtype=np.uint8)
    mask = np.asarray(valid_mask, dtype=bool)
    if mask.all():
        return rgb.copy()
    color = rgb.astype(np.float64)
    weight = mask.astype(np.float64)
    levels = [(color, weight)]
    while color.shape[0] > 1 or color.shape[1] > 1:
        color, weight = _pull(color, weight)
        levels.append((color, weight))
    top_color, top_weight = levels[-1]
    filled = np.where(top_weight[:, :, None] > 0.0, top_color, _NEUTRAL_GREY)
    for color, weight in reversed(levels[:-1]):
        up = _bilinear_resize(filled, weight.shape)
        filled = np.where(weight[:, :, None] > 0.0, color, up)
    out = np.clip(np.rint(filled), 0, 255).astype(np.uint8)
    out[mask] = rgb[mask]
    return out


def perturb_depth(depth: np.ndarray, rng: SeededRng, scale_sigma: float = 0.05,
                  blob_sigma: float = 0.02) -> np.ndarray:
    """Emulate metric depth-estimator error: a global Gaussian scale factor
    plus a smooth multiplicative noise field (bilinear upsample of an 8x8
    Gaussian grid, scaled by blob_sigma relative to the mean scene depth).

    Draw order is fixed: one scale draw, then the 64 grid draws.
    """
    depth = np.asarray(depth, dtype=np.float64)
    scale = 1.0 + float(rng.normal()) * scale_sigma
    grid = rng.normal((8, 8))
    finite = np.isfinite(depth) & (depth > 0)
    mean_depth = float(depth[finite].mean()) if finite.any() else 1.0
    blob = _bilinear_resize(grid, depth.shape) * (blob_sigma / mean_depth)
    return depth * scale * (1.0 + blob)


def synthesize_reproject(req: NvsRequest) -> SynthResult:
    """Depth-reprojection view synthesis: deproject, transform, splat, inpaint."""
    if req.depth is None:
        raise MissingDepthError("reproject backend requires a depth map")
    intr = req.intrinsics
    valid = np.isfinite(req.depth) & (req.depth > 0)
    vv, uu = np.nonzero(valid)
    points = deproject((uu + 0.5, vv + 0.5), req.depth[valid], intr)
    points = req.relative.apply(points)
    colors = req.rgb[valid]
    rgb, mask, _ = splat_points(points, colors, intr)
    return SynthResult(rgb=inpaint_pullpush(rgb, mask), valid_mask=mask)


def synthesize_oracle(req: NvsRequest) -> SynthResult:
    """Ground-truth view synthesis by re-rendering the frozen scene."""
    if req.scene_handle is None:
        raise OracleUnavailableError("oracle backend requires a frozen scene handle")
    context = req.scene_handle.camera
    target = CameraPose(context.world_from_camera.compose(req.relative.invert()))
    rgb, _ = render(req.scene_handle.scene, target, req.intrinsics)
    return SynthResult(rgb=rgb, valid_mask=np.ones(rgb.shape[:2], dtype=bool))


def _backend_oracle(req: NvsRequest, rng: SeededRng) -> SynthResult:
    return synthesize_oracle(req)


def _backend_reproject(req: NvsRequest, rng: SeededRng) -> SynthResult:
    return synthesize_reproject(req)


def _backend_reproject_noisydepth(req: NvsRequest, rng: SeededRng) -> SynthResult:
    if req.depth is None:
        raise MissingDepthError("reproject_noisydepth backend requires a depth map")
    return synthesize_reproject(replace(req, depth=perturb_depth(req.depth, rng)))


BACKENDS = {
    "oracle": _backend_oracle,
    "reproject": _backend_reproject,
    "reproject_noisydepth": _backend_reproject_noisydepth,
}


def get_backend(name: str):
    try:
        return BACKENDS[name]
    except KeyError:
        raise ConfigError(
            f"unknown backend {name!r}; expected one of {sorted(BACKENDS)}"
        ) from None
