"""Agent and map-element encodings, keypoints, ego init, memory queue.

An agent is encoded as an 11-component vector
(x, y, z, ln_w, ln_h, ln_l, sin_yaw, cos_yaw, vx, vy, vz). The three
log-dimension slots hold the box extents along its local x (heading),
y (lateral) and z (up) axes, in that order.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Pose2, wrap_angle

# Non-location anchor components (ln_w, ln_h, ln_l, sin, cos, vx, vy, vz)
# used when anchors are seeded from clustered locations only.
DEFAULT_ANCHOR_PARAMS = (1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0)

# Ring-buffer depth of the per-track instance history.
DEFAULT_HISTORY_FRAMES = 3


@dataclass(frozen=True)
class AnchorBox:
    x: float
    y: float
    z: float
    ln_w: float
    ln_h: float
    ln_l: float
    sin_yaw: float
    cos_yaw: float
    vx: float
    vy: float
    vz: float

    def __post_init__(self):
        norm = self.sin_yaw ** 2 + self.cos_yaw ** 2
        if abs(norm - 1.0) > 1e-6:
            raise ValueError("sin/cos yaw not normalized")

    def to_vector(self) -> np.ndarray:
        return np.array(
            [self.x, self.y, self.z, self.ln_w, self.ln_h, self.ln_l,
             self.sin_yaw, self.cos_yaw, self.vx, self.vy, self.vz],
            dtype=np.float64,
        )

    @staticmethod
    def from_vector(v) -> "AnchorBox":
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (11,):
            raise ValueError("anchor vector must have 11 components")
        return AnchorBox(*v.tolist())


@dataclass(frozen=True)
class DecodedBox:
    position: tuple[float, float, float]
    dims: tuple[float, float, float]
    yaw: float
    velocity: tuple[float, float, float]


@dataclass(frozen=True)
class MapPolyline:
    """Ordered 2-D point sequence for one static map element."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("polyline needs at least 2 (x, y) points")
        object.__setattr__(self, "points", pts)

    @property
    def num_points(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class Instance:
    """One perceived road agent: geometry, confidence, optional identity."""

    anchor: AnchorBox
    confidence: float
    track_id: int | None = None
    embedding: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence outside [0, 1]")
        if self.track_id is not None and self.track_id < 0:
            raise ValueError("negative track id")

    def with_id(self, track_id: int) -> "Instance":
        if self.track_id is not None and self.track_id != track_id:
            raise ValueError("track id is immutable once set")
        return replace(self, track_id=track_id)


@dataclass(frozen=True)
class EgoStatus:
    velocity: float
    acceleration: float
    angular_velocity: float
    steering_angle: float

    def __post_init__(self):
        for v in (self.velocity, self.acceleration, self.angular_velocity,
                  self.steering_angle):
            if not math.isfinite(v):
                raise ValueError("non-finite ego status")


def encode_anchor(x, y, z, w, h, l, yaw, velocity) -> AnchorBox:
    """Encode position, box extents, heading and velocity into an anchor."""
    if w <= 0 or h <= 0 or l <= 0:
        raise ValueError("non-positive extent")
    vx, vy, vz = (float(v) for v in velocity)
    return AnchorBox(
        float(x), float(y), float(z),
        math.log(w), math.log(h), math.log(l),
        math.sin(yaw), math.cos(yaw),
        vx, vy, vz,
    )


def decode_anchor(a: AnchorBox) -> DecodedBox:
    return DecodedBox(
        position=(a.x, a.y, a.z),
        dims=(math.exp(a.ln_w), math.exp(a.ln_h), math.exp(a.ln_l)),
        yaw=math.atan2(a.sin_yaw, a.cos_yaw),
        velocity=(a.vx, a.vy, a.vz),
    )


def default_anchor_params() -> tuple[float, ...]:
    """Non-location anchor defaults (ln-dims, sin/cos yaw, velocity)."""
    return DEFAULT_ANCHOR_PARAMS


def generate_keypoints(a: AnchorBox) -> np.ndarray:
    """Fixed keypoints: box center plus the 6 face centers, in ego frame."""
    d = decode_anchor(a)
    hx, hy, hz = d.dims[0] / 2.0, d.dims[1] / 2.0, d.dims[2] / 2.0
    local = np.array([
        [0.0, 0.0, 0.0],
        [hx, 0.0, 0.0], [-hx, 0.0, 0.0],
        [0.0, hy, 0.0], [0.0, -hy, 0.0],
        [0.0, 0.0, hz], [0.0, 0.0, -hz],
    ])
    c, s = a.cos_yaw, a.sin_yaw
    out = np.empty_like(local)
    out[:, 0] = local[:, 0] * c - local[:, 1] * s + a.x
    out[:, 1] = local[:, 0] * s + local[:, 1] * c + a.y
    out[:, 2] = local[:, 2] + a.z
    return out


def init_ego_anchor(ego_dims, prev_predicted_velocity: float | None = None) -> AnchorBox:
    """Ego anchor at the current ego frame origin.

    Velocity is seeded from the previous frame's predicted forward speed;
    the first frame (no history) uses zero.
    """
    v = 0.0 if prev_predicted_velocity is None else float(prev_predicted_velocity)
    w, h, l = ego_dims
    return encode_anchor(0.0, 0.0, 0.0, w, h, l, 0.0, (v, 0.0, 0.0))


@dataclass
class InstanceMemoryQueue:
    """Per-track ring buffers of the last `capacity` identified instances."""

    capacity: int = DEFAULT_HISTORY_FRAMES
    _rings: dict[int, deque] = field(default_factory=dict)
    _last_frame: int | None = None

    def push(self, frame: int, instances) -> None:
        if self._last_frame is not None and frame <= self._last_frame:
            raise ValueError("frame regression")
        stored = False
        for inst in instances:
            if inst.track_id is None:
                continue
            ring = self._rings.setdefault(inst.track_id, deque(maxlen=self.capacity))
            ring.append((frame, inst))
            stored = True
        if stored:
            self._last_frame = frame

    def query(self, track_id: int) -> list[Instance]:
        """History for one track, oldest first; empty for unknown ids."""
        ring = self._rings.get(track_id)
        if ring is None:
            return []
        return [inst for _, inst in ring]

    def tracks(self) -> list[int]:
        return sorted(self._rings)


def memory_push(q: InstanceMemoryQueue, frame: int, instances) -> InstanceMemoryQueue:
    q.push(frame, instances)
    return q


def memory_query(q: InstanceMemoryQueue, track_id: int) -> list[Instance]:
    return q.query(track_id)
