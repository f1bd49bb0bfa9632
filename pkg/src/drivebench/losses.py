"""Assignment, mode selection and loss arithmetic (pure value computations).

Classification terms use the focal form, regression terms plain L1; the
total is the weighted sum over the detection / map / motion / planning /
depth tasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.optimize import linear_sum_assignment

FOCAL_ALPHA = 0.25
FOCAL_GAMMA = 2.0


@dataclass(frozen=True)
class LossWeights:
    det_cls: float = 2.0
    det_reg: float = 0.25
    map_cls: float = 1.0
    map_reg: float = 10.0
    depth: float = 0.2
    motion_cls: float = 0.2
    motion_reg: float = 0.2
    plan_cls: float = 0.5
    plan_reg: float = 1.0
    plan_status: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError("negative loss weight")


def hungarian(cost) -> list[tuple[int, int]]:
    """Minimum-cost complete matching over min(rows, cols).

    Returns (row, col) pairs sorted by row; rows/cols absent from the
    result are unmatched. Empty matrices yield an empty assignment.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.size == 0:
        return []
    if c.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    if not np.isfinite(c).all():
        raise ValueError("non-finite cost")
    rows, cols = linear_sum_assignment(c)
    return sorted(zip(rows.tolist(), cols.tolist()))


def assignment_cost(cost, assignment) -> float:
    c = np.asarray(cost, dtype=np.float64)
    return float(sum(c[r, k] for r, k in assignment))


def focal_loss(p: float, is_positive: bool, alpha: float = FOCAL_ALPHA,
               gamma: float = FOCAL_GAMMA) -> float:
    """Focal term for one predicted probability.

    Positives: -alpha * (1-p)**gamma * ln(p); negatives mirror with p -> 1-p
    and alpha -> 1-alpha.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("invalid probability")
    if is_positive:
        return -alpha * (1.0 - p) ** gamma * math.log(p)
    return -(1.0 - alpha) * p ** gamma * math.log(1.0 - p)


def wta_select(modes, gt, valid_mask=None) -> int:
    """Index of the mode with the lowest ADE against gt (ties: lowest index).

    gt may be shorter than the mode horizon; valid_mask (len(gt),) marks
    the supervised timesteps.
    """
    modes = np.asarray(modes, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    t = gt.shape[0]
    if t > modes.shape[1]:
        raise ValueError("gt longer than mode horizon")
    if valid_mask is None:
        valid_mask = np.ones(t, dtype=bool)
    else:
        valid_mask = np.asarray(valid_mask, dtype=bool)
    if not valid_mask.any():
        raise ValueError("no supervision")
    d = np.linalg.norm(modes[:, :t][:, valid_mask] - gt[valid_mask], axis=-1)
    ade = d.mean(axis=1)
    return int(ade.argmin())


def total_loss(components: dict, weights: LossWeights | None = None):
    """Weighted sum of per-task cls/reg values plus per-task breakdown.

    Unset components default to zero. Keys: det_cls, det_reg, map_cls,
    map_reg, depth, motion_cls, motion_reg, plan_cls, plan_reg, plan_status.
    """
    w = weights or LossWeights()
    known = {f.name for f in fields(LossWeights)}
    unknown = set(components) - known
    if unknown:
        raise ValueError(f"unknown loss components: {sorted(unknown)}")
    c = {name: float(components.get(name, 0.0)) for name in known}
    for name, value in c.items():
        if not math.isfinite(value):
            raise ValueError(f"non-finite loss component: {name}")

    breakdown = {
        "det": w.det_cls * c["det_cls"] + w.det_reg * c["det_reg"],
        "map": w.map_cls * c["map_cls"] + w.map_reg * c["map_reg"],
        "motion": w.motion_cls * c["motion_cls"] + w.motion_reg * c["motion_reg"],
        "plan": (w.plan_cls * c["plan_cls"] + w.plan_reg * c["plan_reg"]
                 + w.plan_status * c["plan_status"]),
        "depth": w.depth * c["depth"],
    }
    total = breakdown["det"] + breakdown["map"] + breakdown["motion"] \
        + breakdown["plan"] + breakdown["depth"]
    return total, breakdown


# Anchor-vector slots used in the detection matching cost: everything but
# z (index 2), which carries no signal in planar desk scenes.
_REG_SLOTS = np.array([0, 1, 3, 4, 5, 6, 7, 8, 9, 10])


def detection_match_cost(pred_probs, pred_anchors, gt_anchors,
                         weights: LossWeights | None = None,
                         alpha: float = FOCAL_ALPHA,
                         gamma: float = FOCAL_GAMMA) -> np.ndarray:
    """Pairwise matching cost between predictions and ground truths.

    Combines the focal classification cost of treating each prediction as
    a positive with the mean L1 over the 10 planar anchor components,
    mirroring the detection loss weights.
    """
    w = weights or LossWeights()
    probs = np.asarray(pred_probs, dtype=np.float64)
    pa = np.stack([a.to_vector() for a in pred_anchors])[:, _REG_SLOTS]
    ga = np.stack([a.to_vector() for a in gt_anchors])[:, _REG_SLOTS]
    cls_cost = -alpha * (1.0 - probs) ** gamma * np.log(probs)
    reg_cost = np.abs(pa[:, None, :] - ga[None, :, :]).mean(axis=2)
    return w.det_cls * cls_cost[:, None] + w.det_reg * reg_cost
