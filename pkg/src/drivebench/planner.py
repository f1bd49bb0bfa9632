"""Hierarchical planning selection with collision-aware rescoring.

Proposals are filtered to the active driving command, candidates whose
swept footprint overlaps any confident predicted agent future get their
score zeroed, and the highest-scoring survivor is selected.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import _kernels
from .geometry import Pose2, estimate_yaws

PLAN_MODES = 6       # candidate trajectories per command
PLAN_STEPS = 6       # planning horizon steps (3 s at 2 Hz)
MOTION_MODES = 6     # predicted modes per agent
MOTION_STEPS = 12    # prediction horizon steps (6 s at 2 Hz)
RESCORE_TOP_K = 2    # most confident agent modes checked for collision


class Command(IntEnum):
    """High-level driving command; values index proposal-set rows."""

    TURN_LEFT = 0
    TURN_RIGHT = 1
    GO_STRAIGHT = 2


@dataclass(frozen=True)
class PlanProposalSet:
    """Per-command candidate trajectories (ego frame) and their scores.

    trajectories: (n_commands, modes, steps, 2); scores: (n_commands, modes).
    """

    trajectories: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.trajectories, dtype=np.float64)
        s = np.asarray(self.scores, dtype=np.float64)
        if t.ndim != 4 or t.shape[3] != 2:
            raise ValueError("trajectories must be (commands, modes, steps, 2)")
        if s.shape != t.shape[:2]:
            raise ValueError("scores shape mismatch")
        if not np.isfinite(s).all():
            raise ValueError("non-finite scores")
        object.__setattr__(self, "trajectories", t)
        object.__setattr__(self, "scores", s)


@dataclass(frozen=True)
class AgentForecast:
    """One agent's predicted futures in the current ego frame."""

    dims: tuple[float, float]  # (width, length), meters
    pose: Pose2
    modes: np.ndarray          # (n_modes, steps, 2)
    scores: np.ndarray         # (n_modes,)

    def __post_init__(self):
        m = np.asarray(self.modes, dtype=np.float64)
        s = np.asarray(self.scores, dtype=np.float64)
        if m.ndim != 3 or m.shape[2] != 2 or s.shape != (m.shape[0],):
            raise ValueError("bad forecast shapes")
        object.__setattr__(self, "modes", m)
        object.__setattr__(self, "scores", s)


@dataclass(frozen=True)
class SelectionDiagnostics:
    all_colliding: bool
    collided: tuple[bool, ...]
    raw_scores: tuple[float, ...]
    rescored: tuple[float, ...]
    rescore_enabled: bool = True


def filter_by_command(proposals: PlanProposalSet, cmd: Command):
    """The command's candidate row: (modes, steps, 2) and (modes,) scores."""
    return proposals.trajectories[int(cmd)], proposals.scores[int(cmd)]


def _traj_boxes(traj, yaw0, dims) -> np.ndarray:
    """Timestep-wise OBB params along a trajectory, yaw from the points."""
    traj = np.asarray(traj, dtype=np.float64)
    yaws = estimate_yaws(traj, yaw0)
    width, length = dims
    boxes = np.empty((traj.shape[0], 5), dtype=np.float64)
    boxes[:, 0:2] = traj
    boxes[:, 2] = yaws
    boxes[:, 3] = length / 2.0
    boxes[:, 4] = width / 2.0
    return boxes


def _agent_boxes(agents, n_steps: int, top_k_modes: int) -> np.ndarray:
    """Stacked (M, n_steps, 5) OBB params for the top-k modes of each agent."""
    rows = []
    for agent in agents:
        k = min(top_k_modes, agent.scores.shape[0])
        # ties: lowest mode index first
        order = np.lexsort((np.arange(agent.scores.shape[0]), -agent.scores))
        for mode_idx in order[:k]:
            mode = agent.modes[mode_idx]
            if mode.shape[0] < n_steps:
                raise ValueError("forecast shorter than planning horizon")
            rows.append(_traj_boxes(mode[:n_steps], agent.pose.yaw, agent.dims))
    if not rows:
        return np.empty((0, n_steps, 5), dtype=np.float64)
    return np.stack(rows)


def check_plan_collision(plan, ego_dims, ego_yaw0, agents,
                         top_k_modes: int = RESCORE_TOP_K) -> bool:
    """True iff the ego footprint along `plan` overlaps any agent's top-k
    predicted future at the same timestep.

    Agent headings along their predicted modes come from the trajectory
    points, same as the ego heading.
    """
    if top_k_modes < 1:
        raise ValueError("top_k_modes must be >= 1")
    plan = np.asarray(plan, dtype=np.float64)
    agent_boxes = _agent_boxes(agents, plan.shape[0], top_k_modes)
    if agent_boxes.shape[0] == 0:
        return False
    ego_boxes = _traj_boxes(plan, ego_yaw0, ego_dims)
    return _kernels.plan_collides(
        np.ascontiguousarray(ego_boxes), np.ascontiguousarray(agent_boxes))


def candidate_collision_mask(trajs, agents, ego_dims, ego_yaw0,
                             top_k_modes: int = RESCORE_TOP_K) -> np.ndarray:
    trajs = np.asarray(trajs, dtype=np.float64)
    return np.array([
        check_plan_collision(trajs[i], ego_dims, ego_yaw0, agents, top_k_modes)
        for i in range(trajs.shape[0])
    ], dtype=bool)


def collision_aware_rescore(trajs, scores, agents, ego_dims, ego_yaw0,
                            top_k_modes: int = RESCORE_TOP_K) -> np.ndarray:
    """Zero the score of every candidate whose footprint collides."""
    scores = np.asarray(scores, dtype=np.float64)
    if (scores < 0).any():
        raise ValueError("rescoring requires non-negative scores")
    mask = candidate_collision_mask(trajs, agents, ego_dims, ego_yaw0, top_k_modes)
    out = scores.copy()
    out[mask] = 0.0
    return out


def select_trajectory(proposals: PlanProposalSet, cmd: Command, agents,
                      ego_dims, ego_yaw0: float = 0.0,
                      top_k_modes: int = RESCORE_TOP_K,
                      rescore: bool = True):
    """Command filter -> collision-aware rescore -> argmax.

    Returns (trajectory, mode index, diagnostics). When every rescored
    score is zero the pre-rescore argmax is returned with the
    all_colliding flag set.
    """
    trajs, raw_scores = filter_by_command(proposals, cmd)
    mask = candidate_collision_mask(trajs, agents, ego_dims, ego_yaw0, top_k_modes)
    if rescore:
        if (np.asarray(raw_scores) < 0).any():
            raise ValueError("rescoring requires non-negative scores")
        rescored = np.asarray(raw_scores, dtype=np.float64).copy()
        rescored[mask] = 0.0
    else:
        rescored = np.asarray(raw_scores, dtype=np.float64).copy()
    collided = tuple(bool(c) for c in mask)

    if rescore and not rescored.any():
        idx = int(np.argmax(raw_scores))
        all_colliding = True
    else:
        idx = int(np.argmax(rescored))
        all_colliding = False
    diag = SelectionDiagnostics(
        all_colliding=all_colliding,
        collided=collided,
        raw_scores=tuple(float(s) for s in raw_scores),
        rescored=tuple(float(s) for s in rescored),
        rescore_enabled=rescore,
    )
    return trajs[idx], idx, diag
