"""Planar poses, oriented boxes, overlap tests, yaw estimation, projection.

Conventions: meters and radians everywhere, yaw normalized to (-pi, pi],
BEV x forward / y left in the local frame of a box or pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

# Steps shorter than this are treated as stationary when estimating yaw
# from trajectory points; avoids atan2 noise amplification at rest.
EPS_MOVE = 1e-3


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    w = (theta + math.pi) % (2.0 * math.pi) - math.pi
    if w == -math.pi:
        w = math.pi
    return w


@dataclass(frozen=True)
class Pose2:
    """Planar rigid transform / pose: translation (x, y) and heading yaw."""

    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))


def compose(a: Pose2, b: Pose2) -> Pose2:
    """Return a∘b, the pose obtained by applying b then a."""
    c, s = math.cos(a.yaw), math.sin(a.yaw)
    return Pose2(
        a.x + c * b.x - s * b.y,
        a.y + s * b.x + c * b.y,
        a.yaw + b.yaw,
    )


def inverse(p: Pose2) -> Pose2:
    c, s = math.cos(p.yaw), math.sin(p.yaw)
    return Pose2(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), -p.yaw)


def transform_point(p: Pose2, point):
    """Map a point (or an (N, 2) array of points) through pose p."""
    pt = np.asarray(point, dtype=np.float64)
    c, s = math.cos(p.yaw), math.sin(p.yaw)
    x = pt[..., 0] * c - pt[..., 1] * s + p.x
    y = pt[..., 0] * s + pt[..., 1] * c + p.y
    return np.stack([x, y], axis=-1)


def rotate_vector(yaw: float, vec):
    vec = np.asarray(vec, dtype=np.float64)
    c, s = math.cos(yaw), math.sin(yaw)
    return np.stack(
        [vec[..., 0] * c - vec[..., 1] * s, vec[..., 0] * s + vec[..., 1] * c],
        axis=-1,
    )


@dataclass(frozen=True)
class OBB2:
    """Oriented BEV rectangle: center, (half_len, half_wid), heading.

    half_extents[0] is the half extent along the heading axis.
    """

    center: tuple[float, float]
    half_extents: tuple[float, float]
    yaw: float

    def __post_init__(self):
        if self.half_extents[0] <= 0.0 or self.half_extents[1] <= 0.0:
            raise ValueError("non-positive extent")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def params(self) -> np.ndarray:
        """Kernel row (cx, cy, yaw, half_len, half_wid)."""
        return np.array(
            [self.center[0], self.center[1], self.yaw,
             self.half_extents[0], self.half_extents[1]],
            dtype=np.float64,
        )

    def corners(self) -> np.ndarray:
        hl, hw = self.half_extents
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        return transform_point(Pose2(self.center[0], self.center[1], self.yaw), local)


def obb_overlap(a: OBB2, b: OBB2) -> bool:
    """Closed-rectangle intersection (separating-axis test, 4 edge normals).

    Touching edges count as overlap.
    """
    return _kernels.obb_overlap(
        a.center[0], a.center[1], a.yaw, a.half_extents[0], a.half_extents[1],
        b.center[0], b.center[1], b.yaw, b.half_extents[0], b.half_extents[1],
    )


def estimate_yaws(traj, initial_yaw: float):
    """Headings along a trajectory from consecutive point differences.

    yaw[t] = atan2(dy, dx) of the step t -> t+1; the final point reuses the
    previous yaw. Steps shorter than EPS_MOVE reuse the previous yaw, with
    initial_yaw as the fallback at the start.
    """
    pts = np.asarray(traj, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("empty trajectory")
    n = pts.shape[0]
    yaws = np.empty(n, dtype=np.float64)
    prev = wrap_angle(initial_yaw)
    for t in range(n - 1):
        dx = pts[t + 1, 0] - pts[t, 0]
        dy = pts[t + 1, 1] - pts[t, 1]
        if math.hypot(dx, dy) >= EPS_MOVE:
            prev = math.atan2(dy, dx)
        yaws[t] = prev
    yaws[n - 1] = prev
    return yaws


@dataclass(frozen=True)
class Camera:
    """Pinhole camera: intrinsics in pixels, extrinsics as camera-in-ego.

    rotation (3, 3) and translation (3,) map camera-frame points into the
    ego frame; the camera looks along its local +z.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("non-positive focal length")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("non-positive image size")
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64))


@dataclass(frozen=True)
class CameraRig:
    cameras: tuple[Camera, ...]

    def __len__(self):
        return len(self.cameras)


def project_points(points, rig: CameraRig, camera_index: int):
    """Project ego-frame 3-D points through one camera of the rig.

    Returns (pixels (N, 2), valid (N,)). A point is valid iff its
    camera-frame depth is positive and the pixel falls inside the image.
    """
    cam = rig.cameras[camera_index]
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    local = (pts - cam.translation) @ cam.rotation  # R^T (p - t), row form
    z = local[:, 2]
    safe_z = np.where(z > 0, z, 1.0)
    u = cam.fx * local[:, 0] / safe_z + cam.cx
    v = cam.fy * local[:, 1] / safe_z + cam.cy
    pixels = np.stack([u, v], axis=-1)
    valid = (z > 0) & (u >= 0) & (u < cam.width) & (v >= 0) & (v < cam.height)
    return pixels, valid
