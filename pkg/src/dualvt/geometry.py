"""Pinhole camera model, BEV grid, and height sampling.

Conventions (fixed across the whole library):
  * ego frame: x forward, y left, z up, meters
  * camera frame: z forward (optical axis), x right, y down
  * extrinsics T map ego coordinates to camera coordinates
  * intrinsics K are expressed in feature-map pixel units, pixel centers
    at integer coordinates
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidCount

BEHIND_EPS = 1e-6

FULL_HEIGHT_RANGE = (-5.0, 3.0)
ROI_HEIGHT_RANGE = (-2.0, 2.0)


@dataclass(frozen=True)
class Projection:
    """Image-feature coordinates (u, v) and camera-frame depth d of a 3D point."""

    u: float
    v: float
    d: float


@dataclass(frozen=True)
class CameraRig:
    """One camera: intrinsics K (3x3), extrinsics T (4x4, ego -> camera),
    feature-map extents, and an id."""

    intrinsics: np.ndarray
    extrinsics: np.ndarray
    feat_w: int
    feat_h: int
    cam_id: int = 0

    def __post_init__(self):
        K = np.asarray(self.intrinsics, dtype=np.float64)
        T = np.asarray(self.extrinsics, dtype=np.float64)
        if K.shape != (3, 3) or T.shape != (4, 4):
            raise ConfigError("intrinsics must be 3x3 and extrinsics 4x4")
        if K[2, 2] != 1.0 or K[2, 0] != 0.0 or K[2, 1] != 0.0:
            raise ConfigError("last intrinsics row must be [0, 0, 1]")
        R = T[:3, :3]
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-5):
            raise ConfigError("extrinsics rotation block is not orthonormal")
        if not np.array_equal(T[3], [0.0, 0.0, 0.0, 1.0]):
            raise ConfigError("last extrinsics row must be [0, 0, 0, 1]")
        if self.feat_w < 1 or self.feat_h < 1:
            raise ConfigError("feature extents must be positive")
        object.__setattr__(self, "intrinsics", K)
        object.__setattr__(self, "extrinsics", T)

    def to_json(self) -> dict:
        return {
            "cam_id": self.cam_id,
            "intrinsics": self.intrinsics.tolist(),
            "extrinsics": self.extrinsics.tolist(),
            "feat_w": self.feat_w,
            "feat_h": self.feat_h,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CameraRig":
        return cls(
            intrinsics=np.array(doc["intrinsics"], dtype=np.float64),
            extrinsics=np.array(doc["extrinsics"], dtype=np.float64),
            feat_w=int(doc["feat_w"]),
            feat_h=int(doc["feat_h"]),
            cam_id=int(doc.get("cam_id", 0)),
        )


@dataclass(frozen=True)
class BevGridSpec:
    """Axis-aligned BEV grid; cell (i, j) spans x index i, y index j."""

    x_min: float = -51.2
    x_max: float = 51.2
    y_min: float = -51.2
    y_max: float = 51.2
    nx: int = 128
    ny: int = 128

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("grid cell counts must be >= 1")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ConfigError("grid extents must be nonempty")

    @property
    def cell_w(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def cell_h(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    def to_json(self) -> dict:
        return {
            "x_min": self.x_min, "x_max": self.x_max,
            "y_min": self.y_min, "y_max": self.y_max,
            "nx": self.nx, "ny": self.ny,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "BevGridSpec":
        return cls(**{k: doc[k] for k in ("x_min", "x_max", "y_min", "y_max", "nx", "ny")})


@dataclass(frozen=True)
class HeightSet:
    """Ordered heights (meters, ego z) at which BEV anchor points are placed."""

    z_values: tuple
    mode: str = "multires"

    def __post_init__(self):
        z = tuple(float(v) for v in self.z_values)
        if any(b <= a for a, b in zip(z, z[1:])):
            raise ConfigError("heights must be strictly increasing")
        lo, hi = FULL_HEIGHT_RANGE
        if z and (z[0] < lo or z[-1] > hi):
            raise ConfigError(f"heights must lie within [{lo}, {hi}]")
        object.__setattr__(self, "z_values", z)

    def __len__(self) -> int:
        return len(self.z_values)


def make_height_samples(mode: str = "multires", n: int | None = None) -> HeightSet:
    """Height sampling set over [-5, 3] m.

    "multires": 0.5 m spacing inside the [-2, 2] m region of interest,
    1.0 m spacing outside (13 values total).  "uniform": `n` evenly
    spaced values including both endpoints.
    """
    if mode == "multires":
        lo, hi = FULL_HEIGHT_RANGE
        roi_lo, roi_hi = ROI_HEIGHT_RANGE
        coarse_below = np.arange(lo, roi_lo, 1.0)
        fine = np.arange(roi_lo, roi_hi + 0.25, 0.5)
        coarse_above = np.arange(roi_hi + 1.0, hi + 0.5, 1.0)
        z = np.concatenate([coarse_below, fine, coarse_above])
        return HeightSet(tuple(np.round(z, 6)), mode="multires")
    if mode == "uniform":
        if n is None or n < 2:
            raise InvalidCount("uniform height sampling needs n >= 2")
        z = np.linspace(FULL_HEIGHT_RANGE[0], FULL_HEIGHT_RANGE[1], n)
        return HeightSet(tuple(z), mode=f"uniform{n}")
    raise ConfigError(f"unknown height mode {mode!r}")


def project_point(p3d, cam: CameraRig):
    """Project one ego-frame point; returns Projection or None if behind the camera."""
    u, v, d, valid = project_points(np.asarray(p3d, dtype=np.float64)[None, :], cam)
    if not valid[0]:
        return None
    return Projection(float(u[0]), float(v[0]), float(d[0]))


def project_points(p3d: np.ndarray, cam: CameraRig):
    """Vectorized projection of (N, 3) ego points.

    Returns (u, v, d, valid); u/v/d are only meaningful where valid
    (camera-frame depth > BEHIND_EPS).
    """
    T = cam.extrinsics
    q = p3d @ T[:3, :3].T + T[:3, 3]
    z = q[:, 2]
    valid = z > BEHIND_EPS
    safe_z = np.where(valid, z, 1.0)
    K = cam.intrinsics
    u = K[0, 0] * q[:, 0] / safe_z + K[0, 2]
    v = K[1, 1] * q[:, 1] / safe_z + K[1, 2]
    return u, v, z, valid


def back_project(proj: Projection, cam: CameraRig) -> np.ndarray:
    """Inverse of project_point for a known depth; returns the ego-frame point."""
    K = cam.intrinsics
    x = (proj.u - K[0, 2]) / K[0, 0] * proj.d
    y = (proj.v - K[1, 2]) / K[1, 1] * proj.d
    cam_pt = np.array([x, y, proj.d, 1.0])
    return (np.linalg.inv(cam.extrinsics) @ cam_pt)[:3]


def bev_cell_centers(spec: BevGridSpec) -> np.ndarray:
    """(ny, nx, 2) array of cell-center (x, y) coordinates."""
    xs = spec.x_min + (np.arange(spec.nx) + 0.5) * spec.cell_w
    ys = spec.y_min + (np.arange(spec.ny) + 0.5) * spec.cell_h
    centers = np.empty((spec.ny, spec.nx, 2), dtype=np.float32)
    centers[:, :, 0] = xs[None, :]
    centers[:, :, 1] = ys[:, None]
    return centers
