"""Scenario-level runs: tracking, forecasting, planning and evaluation.

Perception identity is carried by the perturbation's source bookkeeping
(the temporal propagation of a real perception stack keeps instances
locked to their targets), so no detection-to-track association is needed:
an agent's instance keeps whatever ID it was first assigned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose2, inverse, transform_point, wrap_angle
from .instances import (Instance, InstanceMemoryQueue, decode_anchor,
                        init_ego_anchor)
from .metrics import MotionEvalSample, PlanningEvalSample
from .planner import AgentForecast, select_trajectory
from .sim import (EGO_HEIGHT, Scenario, agent_obb_params, baseline_forecast,
                  build_proposal_set, perturb_perception)
from .tracking import TrackerState, TrackingEvalInput, assign_ids


@dataclass(frozen=True)
class PlannerParams:
    k_p: int = 6
    t_p: int = 6
    k_m: int = 6
    t_m: int = 12
    top_k_modes: int = 2
    t_thresh: float = 0.2
    history_frames: int = 3
    rescore: bool = True
    ego_width: float = 1.85
    ego_length: float = 4.08
    forecast: str = "constant_velocity"


@dataclass
class FrameLog:
    """Everything recorded about one frame of a scenario run."""

    frame: int
    tracks: list = field(default_factory=list)      # (track_id, conf, wx, wy)
    forecasts: list = field(default_factory=list)   # dicts, ego frame
    plan: dict | None = None


def run_scenario(scenario: Scenario, noise: dict, params: PlannerParams,
                 perturb_seed: int = 0) -> list[FrameLog]:
    """Track, forecast and plan through one scenario."""
    perceived = perturb_perception(scenario, seed=perturb_seed, **noise)
    state = TrackerState()
    ident: dict[int, int] = {}  # scenario agent index -> assigned track id
    logs = []
    n_plan_frames = len(scenario.frames) - params.t_p
    for f, (frame, seen) in enumerate(zip(scenario.frames, perceived)):
        instances = []
        for inst, src in zip(seen.instances, seen.sources):
            if src is not None and src in ident:
                inst = inst.with_id(ident[src])
            instances.append(inst)
        instances, state = assign_ids(state, instances, params.t_thresh, frame=f)
        for inst, src in zip(instances, seen.sources):
            if src is not None and inst.track_id is not None:
                ident[src] = inst.track_id

        log = FrameLog(frame=f)
        for inst in instances:
            if inst.track_id is None:
                continue
            world = transform_point(frame.ego_pose, (inst.anchor.x, inst.anchor.y))
            log.tracks.append((inst.track_id, inst.confidence,
                               float(world[0]), float(world[1])))

        if f < n_plan_frames:
            forecasts = []
            agent_views = []
            for inst in instances:
                if inst.track_id is None:
                    continue
                modes, scores = baseline_forecast(
                    params.forecast, inst.anchor, params.t_m, scenario.dt)
                decoded = decode_anchor(inst.anchor)
                dims = (decoded.dims[1], decoded.dims[0])  # (width, length)
                pose = Pose2(inst.anchor.x, inst.anchor.y, decoded.yaw)
                agent_views.append(AgentForecast(dims, pose, modes, scores))
                forecasts.append({
                    "track_id": inst.track_id,
                    "confidence": inst.confidence,
                    "x": inst.anchor.x,
                    "y": inst.anchor.y,
                    "modes": modes.tolist(),
                    "scores": scores.tolist(),
                })
            log.forecasts = forecasts

            proposals = build_proposal_set(
                frame.ego_status.velocity, params.k_p, params.t_p, scenario.dt)
            traj, mode, diag = select_trajectory(
                proposals, frame.command, agent_views,
                (params.ego_width, params.ego_length), 0.0,
                top_k_modes=params.top_k_modes, rescore=params.rescore)
            log.plan = {
                "command": frame.command.name,
                "mode": mode,
                "trajectory": traj.tolist(),
                "raw_scores": list(diag.raw_scores),
                "rescored": list(diag.rescored),
                "collided": list(diag.collided),
                "all_colliding": diag.all_colliding,
                "rescore": diag.rescore_enabled,
            }
        logs.append(log)
    return logs


def _ego_frame_agents(scenario: Scenario, anchor_frame: int,
                      future_step: int) -> np.ndarray:
    """GT agent OBB rows at anchor_frame + future_step, in the ego frame
    of anchor_frame."""
    ego_pose = scenario.frames[anchor_frame].ego_pose
    to_ego = inverse(ego_pose)
    rows = []
    for agent in scenario.frames[anchor_frame + future_step].agents:
        p = agent_obb_params(agent)
        rel = transform_point(to_ego, (p[0], p[1]))
        rows.append([float(rel[0]), float(rel[1]),
                     wrap_angle(p[2] - ego_pose.yaw), p[3], p[4]])
    if not rows:
        return np.empty((0, 5), dtype=np.float64)
    return np.asarray(rows, dtype=np.float64)


def planning_samples(scenario: Scenario, logs: list[FrameLog],
                     params: PlannerParams) -> list[PlanningEvalSample]:
    samples = []
    for log in logs:
        if log.plan is None:
            continue
        f = log.frame
        ego_pose = scenario.frames[f].ego_pose
        to_ego = inverse(ego_pose)
        gt = np.array([
            transform_point(to_ego, (scenario.frames[f + k].ego_pose.x,
                                     scenario.frames[f + k].ego_pose.y))
            for k in range(1, params.t_p + 1)
        ])
        agents = [_ego_frame_agents(scenario, f, k)
                  for k in range(1, params.t_p + 1)]
        samples.append(PlanningEvalSample(
            plan=np.asarray(log.plan["trajectory"]),
            gt_traj=gt,
            gt_yaw0=0.0,
            ego_dims=(params.ego_width, params.ego_length),
            agents=agents,
        ))
    return samples


def motion_samples(scenario: Scenario, logs: list[FrameLog],
                   params: PlannerParams, match_dist: float):
    """Greedy-match forecasts to GT agents frame by frame.

    Returns (samples, num_false_positives). GT futures are truncated at
    the scenario end and masked accordingly.
    """
    samples = []
    num_fp = 0
    for log in logs:
        if log.plan is None:
            continue
        f = log.frame
        frame = scenario.frames[f]
        to_ego = inverse(frame.ego_pose)
        gt_now = []
        gt_future = []
        for ai, agent in enumerate(frame.agents):
            rel = transform_point(to_ego, (agent.pose.x, agent.pose.y))
            gt_now.append((float(rel[0]), float(rel[1])))
            horizon = min(params.t_m, len(scenario.frames) - 1 - f)
            fut = np.zeros((params.t_m, 2), dtype=np.float64)
            valid = np.zeros(params.t_m, dtype=bool)
            for k in range(1, horizon + 1):
                future_agent = scenario.frames[f + k].agents[ai]
                p = transform_point(to_ego, (future_agent.pose.x,
                                             future_agent.pose.y))
                fut[k - 1] = p
                valid[k - 1] = True
            gt_future.append((fut, valid))

        order = sorted(range(len(log.forecasts)),
                       key=lambda i: -log.forecasts[i]["confidence"])
        taken = [False] * len(gt_now)
        matched_modes: dict[int, np.ndarray] = {}
        for i in order:
            fc = log.forecasts[i]
            best = -1
            best_d = match_dist
            for gi, (gx, gy) in enumerate(gt_now):
                if taken[gi]:
                    continue
                d = math.hypot(fc["x"] - gx, fc["y"] - gy)
                if d <= best_d and (best < 0 or d < best_d):
                    best = gi
                    best_d = d
            if best < 0:
                num_fp += 1
            else:
                taken[best] = True
                matched_modes[best] = np.asarray(fc["modes"])
        for gi, (fut, valid) in enumerate(gt_future):
            if not valid.any():
                continue
            modes = matched_modes.get(gi)
            samples.append(MotionEvalSample(gt=fut, valid=valid, modes=modes))
    return samples, num_fp


def tracking_eval_input(scenarios_with_logs, radius: float = 55.0) -> TrackingEvalInput:
    """Concatenate scenario streams into one evaluation input.

    GT identities and predicted IDs are namespaced per scenario. Only GT
    agents inside the perception radius count.
    """
    gt_frames = []
    pred_frames = []
    for si, (scenario, logs) in enumerate(scenarios_with_logs):
        for frame, log in zip(scenario.frames, logs):
            gts = []
            for ai, agent in enumerate(frame.agents):
                d = math.hypot(agent.pose.x - frame.ego_pose.x,
                               agent.pose.y - frame.ego_pose.y)
                if d <= radius:
                    gts.append((f"s{si}a{ai}", agent.pose.x, agent.pose.y))
            preds = [(f"s{si}t{tid}", conf, wx, wy)
                     for tid, conf, wx, wy in log.tracks]
            gt_frames.append(gts)
            pred_frames.append(preds)
    return TrackingEvalInput(gt_frames, pred_frames)
