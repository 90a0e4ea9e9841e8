"""Camera viewpoint distributions and deterministic random streams.

Two families of target-view distributions are provided:

* ``perturbation``: independent Gaussian translation per world axis plus a
  rotation about a uniformly random axis with Gaussian magnitude, applied
  in the camera-local frame. Defaults sigma_t = 0.03 m, sigma_r = 0.075 rad;
  the ``perturbation_wide`` variant defaults to 0.15 m / 0.375 rad.
* ``arc``: positions on a sphere around a center point, keeping the initial
  camera height, uniform azimuth offset within a configurable span
  (default 90 degrees total) and Gaussian radius noise (default 0.05 m),
  re-aimed at the center with world-up.

Randomness comes from `SeededRng`, a thin wrapper over the Philox 4x64
counter-based generator, with stream keys derived from integer tuples by a
SplitMix64 mixing chain. Identical keys give identical streams on every
platform, so work can be partitioned arbitrarily without changing results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateGeometryError, SamplingFailedError
from .geometry import CameraPose, RigidTransform, rotation_about_axis

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def mix64(value: int) -> int:
    """SplitMix64 finalizer (Steele et al. constants); bijective on uint64."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_key(master_seed: int, *indices: int) -> int:
    """Fold (master_seed, *indices) into a 64-bit stream key.

    key_0 = mix64(master_seed); key_{i+1} = mix64(key_i + GAMMA + index_i).
    Distinct tuples yield independently behaving keys.
    """
    key = mix64(master_seed)
    for value in indices:
        key = mix64((key + _SPLITMIX_GAMMA + (int(value) & _MASK64)) & _MASK64)
    return key


class SeededRng:
    """Deterministic pseudo-random stream (Philox 4x64 keyed by a uint64).

    Philox is counter-based with published constants, so a given seed
    produces the same stream on every platform for a fixed numpy version.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def normal(self, size=None) -> np.ndarray:
        """Standard normal draws."""
        return self._gen.standard_normal(size)

    def uniform(self, low: float, high: float, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def next_uint64(self) -> int:
        return int(self._gen.integers(0, 1 << 64, dtype=np.uint64))

    def unit_vector(self) -> np.ndarray:
        """Isotropic direction on the unit sphere."""
        while True:
            v = self._gen.standard_normal(3)
            n = np.linalg.norm(v)
            if n > 1e-12:
                return v / n


@dataclass(frozen=True)
class PerturbationParams:
    sigma_t: float = 0.03
    sigma_r: float = 0.075

    def __post_init__(self):
        if self.sigma_t < 0.0 or self.sigma_r < 0.0:
            raise ConfigError("perturbation sigmas must be >= 0")


WIDE_PERTURBATION = PerturbationParams(sigma_t=0.15, sigma_r=0.375)


@dataclass(frozen=True)
class ArcParams:
    center: tuple = (0.0, 0.0, 0.0)
    azimuth_span_deg: float = 90.0
    sigma_radius: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.azimuth_span_deg <= 360.0:
            raise ConfigError("azimuth_span_deg must be in [0, 360]")
        if self.sigma_radius < 0.0:
            raise ConfigError("sigma_radius must be >= 0")


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> CameraPose:
    """Camera pose at `eye` with -z pointing toward `target` and +y roughly along `up`."""
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    forward = target - eye
    norm = np.linalg.norm(forward)
    if norm < 1e-12:
        raise DegenerateGeometryError("look_at eye and target coincide")
    forward = forward / norm
    right = np.cross(forward, up)
    rnorm = np.linalg.norm(right)
    if rnorm < 1e-9:
        raise DegenerateGeometryError("look_at up vector is parallel to the view direction")
    right = right / rnorm
    true_up = np.cross(right, forward)
    rotation = np.stack([right, true_up, -forward], axis=1)
    return CameraPose(RigidTransform(rotation, eye))


def sample_perturbation(pose: CameraPose, params: PerturbationParams, rng: SeededRng) -> CameraPose:
    """Perturbed copy of `pose`: world-frame Gaussian translation, camera-local
    rotation about a random axis with N(0, sigma_r^2) signed magnitude."""
    delta_t = rng.normal(3) * params.sigma_t
    axis = rng.unit_vector()
    theta = float(rng.normal()) * params.sigma_r
    base = pose.world_from_camera
    rotation = base.rotation if theta == 0.0 else base.rotation @ rotation_about_axis(axis, theta)
    return CameraPose(RigidTransform(rotation, base.translation + delta_t))


def _sample_arc_geometry(initial: CameraPose, params: ArcParams, rng: SeededRng, max_tries: int = 100):
    """Arc sample plus its internal draws (radius, azimuth), for diagnostics."""
    center = np.asarray(params.center, dtype=np.float64)
    offset = initial.position - center
    dz = offset[2]
    rho0 = float(np.hypot(offset[0], offset[1]))
    if rho0 < 1e-6:
        raise DegenerateGeometryError("initial camera lies on the vertical axis through the arc center")
    r0 = float(np.linalg.norm(offset))
    radius = None
    for _ in range(max_tries):
        candidate = r0 + float(rng.normal()) * params.sigma_radius
        if candidate * candidate > dz * dz:
            radius = candidate
            break
    if radius is None:
        raise SamplingFailedError(
            f"could not draw an arc radius exceeding the camera height in {max_tries} tries"
        )
    half_span = np.deg2rad(params.azimuth_span_deg) / 2.0
    azimuth = float(np.arctan2(offset[1], offset[0])) + float(rng.uniform(-half_span, half_span))
    rho = float(np.sqrt(radius * radius - dz * dz))
    position = center + np.array([rho * np.cos(azimuth), rho * np.sin(azimuth), dz])
    return look_at(position, center), radius, azimuth


def sample_arc(initial: CameraPose, params: ArcParams, rng: SeededRng) -> CameraPose:
    """Sample a pose on the sphere through `initial` around `params.center`,
    at the initial camera's world z, re-aimed at the center."""
    pose, _, _ = _sample_arc_geometry(initial, params, rng)
    return pose


class ViewDistribution:
    """A sampler over target extrinsics, conditioned on the base (context) pose."""

    kind = "base"

    def sample(self, base: CameraPose, rng: SeededRng) -> CameraPose:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PerturbationDistribution(ViewDistribution):
    params: PerturbationParams = field(default_factory=PerturbationParams)
    kind: str = "perturbation"

    def sample(self, base, rng):
        return sample_perturbation(base, self.params, rng)

    def to_config(self):
        return {"kind": self.kind, "sigma_t": self.params.sigma_t, "sigma_r": self.params.sigma_r}


@dataclass(frozen=True)
class ArcDistribution(ViewDistribution):
    params: ArcParams = field(default_factory=ArcParams)
    kind: str = "arc"

    def sample(self, base, rng):
        return sample_arc(base, self.params, rng)

    def to_config(self):
        return {
            "kind": "arc",
            "center": [float(c) for c in self.params.center],
            "azimuth_span_deg": self.params.azimuth_span_deg,
            "sigma_radius": self.params.sigma_radius,
        }


@dataclass(frozen=True)
class OriginalView(ViewDistribution):
    """Degenerate distribution returning the base pose; used for in-distribution eval."""

    kind: str = "original"

    def sample(self, base, rng):
        return base

    def to_config(self):
        return {"kind": "original"}


_DIST_ALIASES = {
    "perturb": "perturbation",
    "perturbation": "perturbation",
    "perturb_wide": "perturbation_wide",
    "perturbation_wide": "perturbation_wide",
    "arc": "arc",
    "original": "original",
}


def distribution_from_config(config) -> ViewDistribution:
    """Build a ViewDistribution from its JSON config form (or a kind string)."""
    if isinstance(config, ViewDistribution):
        return config
    if isinstance(config, str):
        config = {"kind": config}
    if not isinstance(config, dict) or "kind" not in config:
        raise ConfigError(f"distribution config must carry a 'kind', got {config!r}")
    kind = _DIST_ALIASES.get(config["kind"])
    if kind is None:
        raise ConfigError(f"unknown distribution kind {config['kind']!r}")
    extra = set(config) - {"kind", "sigma_t", "sigma_r", "center", "azimuth_span_deg", "sigma_radius"}
    if extra:
        raise ConfigError(f"unknown distribution config keys: {sorted(extra)}")
    if kind == "original":
        return OriginalView()
    if kind in ("perturbation", "perturbation_wide"):
        defaults = WIDE_PERTURBATION if kind == "perturbation_wide" else PerturbationParams()
        params = PerturbationParams(
            sigma_t=float(config.get("sigma_t", defaults.sigma_t)),
            sigma_r=float(config.get("sigma_r", defaults.sigma_r)),
        )
        return PerturbationDistribution(params, kind=kind)
    params = ArcParams(
        center=tuple(float(c) for c in config.get("center", (0.0, 0.0, 0.0))),
        azimuth_span_deg=float(config.get("azimuth_span_deg", 90.0)),
        sigma_radius=float(config.get("sigma_radius", 0.05)),
    )
    return ArcDistribution(params)
