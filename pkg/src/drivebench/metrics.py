"""Planning and motion forecasting metrics.

Two collision metrics coexist on purpose: the corrected check tests
oriented-box overlap with the ego heading estimated from the planned
points, while the legacy occupancy-grid check rasterizes at a fixed
resolution and holds the initial heading, which misfires near sub-cell
obstacles and through turns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import estimate_yaws

FRAME_DT = 0.5                      # 2 Hz annotation rate
HORIZONS_S = (1.0, 2.0, 3.0)        # reported planning horizons
GRID_RESOLUTION = 0.5               # legacy occupancy cell size, meters
MISS_THRESHOLD = 2.0                # minFDE miss cutoff, meters
EPA_ALPHA = 0.5                     # false-positive penalty weight
EPA_THRESHOLD = 2.0                 # minFDE hit cutoff, meters


@dataclass(frozen=True)
class PlanningEvalSample:
    """One planning frame: planned and ground-truth ego futures plus the
    per-timestep ground-truth agent boxes, all in the frame's ego frame.

    agents[t] is an (M_t, 5) array of (x, y, yaw, half_len, half_wid).
    """

    plan: np.ndarray
    gt_traj: np.ndarray
    gt_yaw0: float
    ego_dims: tuple[float, float]  # (width, length)
    agents: list = field(default_factory=list)

    def __post_init__(self):
        p = np.asarray(self.plan, dtype=np.float64)
        g = np.asarray(self.gt_traj, dtype=np.float64)
        if p.shape != g.shape or p.ndim != 2 or p.shape[1] != 2:
            raise ValueError("plan and gt_traj must both be (T, 2)")
        object.__setattr__(self, "plan", p)
        object.__setattr__(self, "gt_traj", g)


@dataclass(frozen=True)
class MotionEvalSample:
    """One ground-truth agent with its matched multi-modal forecast.

    modes is None when no prediction matched this agent (a miss). valid
    marks the supervised ground-truth timesteps.
    """

    gt: np.ndarray
    valid: np.ndarray
    modes: np.ndarray | None = None
    scores: np.ndarray | None = None

    def __post_init__(self):
        g = np.asarray(self.gt, dtype=np.float64)
        v = np.asarray(self.valid, dtype=bool)
        if v.shape != (g.shape[0],):
            raise ValueError("valid mask length mismatch")
        if not v.any():
            raise ValueError("sample has no valid timestep")
        object.__setattr__(self, "gt", g)
        object.__setattr__(self, "valid", v)
        if self.modes is not None:
            m = np.asarray(self.modes, dtype=np.float64)
            if m.ndim != 3 or m.shape[1] < g.shape[0]:
                raise ValueError("modes shorter than ground truth")
            object.__setattr__(self, "modes", m)

    @property
    def matched(self) -> bool:
        return self.modes is not None


def _horizon_indices(n_steps: int, dt: float = FRAME_DT,
                     horizons=HORIZONS_S) -> list[int]:
    idx = []
    for h in horizons:
        i = int(round(h / dt)) - 1
        if i >= n_steps:
            raise ValueError("horizon beyond trajectory length")
        idx.append(i)
    return idx


def _label(h: float) -> str:
    return f"{h:g}s"


def planning_l2(samples, dt: float = FRAME_DT, horizons=HORIZONS_S,
                cumulative: bool = False) -> dict:
    """Planning displacement error per horizon plus their average.

    Default is the single-timestep displacement at each horizon; the
    cumulative switch averages displacements over all steps up to the
    horizon instead (the older benchmark convention).
    """
    if not samples:
        raise ValueError("no samples")
    idx = _horizon_indices(samples[0].plan.shape[0], dt, horizons)
    table = {}
    for h, i in zip(horizons, idx):
        errs = []
        for s in samples:
            d = np.linalg.norm(s.plan - s.gt_traj, axis=1)
            errs.append(float(d[: i + 1].mean()) if cumulative else float(d[i]))
        table[_label(h)] = sum(errs) / len(errs)
    table["avg"] = sum(table[_label(h)] for h in horizons) / len(horizons)
    return table


def _ego_boxes(sample: PlanningEvalSample) -> np.ndarray:
    yaws = estimate_yaws(sample.plan, sample.gt_yaw0)
    width, length = sample.ego_dims
    boxes = np.empty((sample.plan.shape[0], 5), dtype=np.float64)
    boxes[:, 0:2] = sample.plan
    boxes[:, 2] = yaws
    boxes[:, 3] = length / 2.0
    boxes[:, 4] = width / 2.0
    return boxes


def obb_collision_at(sample: PlanningEvalSample, step: int) -> bool:
    """Oriented-box overlap between the planned ego footprint and any
    ground-truth agent box at one timestep."""
    agents = np.asarray(sample.agents[step], dtype=np.float64)
    if agents.size == 0:
        return False
    ego = _ego_boxes(sample)[step]
    ego_tiled = np.repeat(ego[None, :], agents.shape[0], axis=0)
    return bool(_kernels.overlap_mask(ego_tiled, np.ascontiguousarray(agents)).any())


def collision_rate_obb(samples, dt: float = FRAME_DT, horizons=HORIZONS_S) -> dict:
    if not samples:
        raise ValueError("no samples")
    idx = _horizon_indices(samples[0].plan.shape[0], dt, horizons)
    table = {}
    for h, i in zip(horizons, idx):
        hits = sum(obb_collision_at(s, i) for s in samples)
        table[_label(h)] = hits / len(samples)
    table["avg"] = sum(table[_label(h)] for h in horizons) / len(horizons)
    return table


def _point_in_box(px, py, box5) -> np.ndarray:
    """Vectorized membership of points in one OBB given as 5 params."""
    cx, cy, yaw, hl, hw = box5
    c, s = math.cos(yaw), math.sin(yaw)
    dx = px - cx
    dy = py - cy
    lon = dx * c + dy * s
    lat = -dx * s + dy * c
    return (np.abs(lon) <= hl) & (np.abs(lat) <= hw)


def grid_collision_at(sample: PlanningEvalSample, step: int,
                      resolution: float = GRID_RESOLUTION) -> bool:
    """Legacy occupancy-grid collision at one timestep.

    Cell centers sit on the integer lattice (i*res, j*res). A cell counts
    as covered/occupied when its center lies inside the box grown by half
    a cell per side (the cell-intersects-box reading). The ego footprint
    keeps the initial heading.
    """
    agents = np.asarray(sample.agents[step], dtype=np.float64)
    if agents.size == 0:
        return False
    width, length = sample.ego_dims
    ego = np.array([sample.plan[step, 0], sample.plan[step, 1], sample.gt_yaw0,
                    length / 2.0 + resolution / 2.0,
                    width / 2.0 + resolution / 2.0])
    # candidate cells: lattice points inside the dilated ego's AABB
    radius = math.hypot(ego[3], ego[4])
    i_min = math.ceil((ego[0] - radius) / resolution)
    i_max = math.floor((ego[0] + radius) / resolution)
    j_min = math.ceil((ego[1] - radius) / resolution)
    j_max = math.floor((ego[1] + radius) / resolution)
    if i_min > i_max or j_min > j_max:
        return False
    xs = np.arange(i_min, i_max + 1) * resolution
    ys = np.arange(j_min, j_max + 1) * resolution
    px, py = np.meshgrid(xs, ys, indexing="ij")
    px = px.ravel()
    py = py.ravel()
    covered = _point_in_box(px, py, ego)
    if not covered.any():
        return False
    px, py = px[covered], py[covered]
    for a in agents:
        dilated = (a[0], a[1], a[2], a[3] + resolution / 2.0,
                   a[4] + resolution / 2.0)
        if _point_in_box(px, py, dilated).any():
            return True
    return False


def collision_rate_grid(samples, resolution: float = GRID_RESOLUTION,
                        dt: float = FRAME_DT, horizons=HORIZONS_S) -> dict:
    if not samples:
        raise ValueError("no samples")
    if resolution <= 0:
        raise ValueError("non-positive grid resolution")
    idx = _horizon_indices(samples[0].plan.shape[0], dt, horizons)
    table = {}
    for h, i in zip(horizons, idx):
        hits = sum(grid_collision_at(s, i, resolution) for s in samples)
        table[_label(h)] = hits / len(samples)
    table["avg"] = sum(table[_label(h)] for h in horizons) / len(horizons)
    return table


def _min_errors(sample: MotionEvalSample):
    """(minADE, minFDE) over modes for one matched sample."""
    t = sample.gt.shape[0]
    d = np.linalg.norm(sample.modes[:, :t] - sample.gt[None, :, :], axis=2)
    masked = d[:, sample.valid]
    ade = float(masked.mean(axis=1).min())
    last_valid = int(np.nonzero(sample.valid)[0][-1])
    fde = float(d[:, last_valid].min())
    return ade, fde


def motion_metrics(samples, num_false_positives: int = 0,
                   miss_threshold: float = MISS_THRESHOLD,
                   epa_alpha: float = EPA_ALPHA,
                   epa_threshold: float = EPA_THRESHOLD) -> dict:
    """Multi-modal forecasting metrics over ground-truth agents.

    minADE/minFDE average the per-agent minimum over modes (matched agents
    only); the miss rate and EPA count unmatched agents as misses. EPA is
    (hits - alpha * false_positives) / num_gt, floored at zero.
    """
    if not samples:
        raise ValueError("no samples")
    ades, fdes = [], []
    misses = 0
    hits = 0
    for s in samples:
        if not s.matched:
            misses += 1
            continue
        ade, fde = _min_errors(s)
        ades.append(ade)
        fdes.append(fde)
        if fde > miss_threshold:
            misses += 1
        if fde <= epa_threshold:
            hits += 1
    n = len(samples)
    epa = max(0.0, (hits - epa_alpha * num_false_positives) / n)
    return {
        "minade": sum(ades) / len(ades) if ades else float("nan"),
        "minfde": sum(fdes) / len(fdes) if fdes else float("nan"),
        "miss_rate": misses / n,
        "epa": epa,
    }
