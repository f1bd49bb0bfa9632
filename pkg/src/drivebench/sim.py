"""Deterministic synthetic scenarios and kinematic rollouts.

Stands in for the neural perception/prediction/planning heads at desk
scale: ground truth comes from closed-form constant-velocity or
constant-turn-rate motion, perception is ground truth plus seeded noise,
and plan proposals are fans of constant-turn-rate arcs bracketing the
command's nominal heading change.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .geometry import Pose2, inverse, rotate_vector, transform_point, wrap_angle
from .instances import AnchorBox, EgoStatus, Instance, MapPolyline, encode_anchor
from .planner import PLAN_STEPS, Command, PlanProposalSet

FRAME_DT = 0.5              # 2 Hz
DETECTION_RADIUS = 55.0     # perception range for agents, meters
MAP_RANGE_LON = 60.0        # mapped region, longitudinal extent
MAP_RANGE_LAT = 30.0        # mapped region, lateral extent
MAP_POINTS = 20             # points per map polyline
AGENT_HEIGHT = 1.6
EGO_WHEELBASE = 2.7

# Planner-head stand-in: fan half-width of terminal headings and the
# nominal heading change per command.
FAN_HALF_WIDTH = math.pi / 4.0
COMMAND_HEADING = {
    Command.GO_STRAIGHT: 0.0,
    Command.TURN_LEFT: math.pi / 2.0,
    Command.TURN_RIGHT: -math.pi / 2.0,
}
MIN_PLAN_SPEED = 0.5


class Behavior(str, Enum):
    CONSTANT_VELOCITY = "constant_velocity"
    CONSTANT_TURN_RATE = "constant_turn_rate"
    STATIONARY = "stationary"


@dataclass(frozen=True)
class AgentState:
    pose: Pose2
    speed: float
    turn_rate: float
    dims: tuple[float, float]  # (width, length)
    behavior: Behavior

    def __post_init__(self):
        if self.dims[0] <= 0 or self.dims[1] <= 0:
            raise ValueError("non-positive agent dims")
        if self.speed < 0:
            raise ValueError("negative speed")


@dataclass(frozen=True)
class ScenarioFrame:
    ego_pose: Pose2
    ego_status: EgoStatus
    agents: tuple[AgentState, ...]
    command: Command


@dataclass(frozen=True)
class Scenario:
    seed: int
    dt: float
    frames: tuple[ScenarioFrame, ...]
    map_polylines: tuple[MapPolyline, ...]


@dataclass(frozen=True)
class SimConfig:
    n_frames: int = 12
    n_agents_min: int = 2
    n_agents_max: int = 6
    spawn_radius: float = DETECTION_RADIUS
    agent_speed_min: float = 0.5
    agent_speed_max: float = 8.0
    agent_turn_rate_max: float = 0.15
    stationary_prob: float = 0.2
    turning_prob: float = 0.3
    ego_speed_min: float = 2.0
    ego_speed_max: float = 8.0
    dt: float = FRAME_DT

    def validate(self) -> None:
        if self.n_frames < PLAN_STEPS + 1:
            raise ValueError("scenario shorter than the planning horizon")
        if not 0 <= self.n_agents_min <= self.n_agents_max:
            raise ValueError("bad agent count range")
        if self.spawn_radius <= 0 or self.spawn_radius > DETECTION_RADIUS:
            raise ValueError("spawn radius outside perception range")
        if self.dt <= 0:
            raise ValueError("non-positive dt")
        if not 0 <= self.stationary_prob + self.turning_prob <= 1:
            raise ValueError("behavior mix probabilities exceed 1")


def _arc_position(pose: Pose2, speed: float, turn_rate: float, t: float):
    """Closed-form unicycle position/heading after time t."""
    if abs(turn_rate) < 1e-9:
        return (pose.x + speed * t * math.cos(pose.yaw),
                pose.y + speed * t * math.sin(pose.yaw),
                pose.yaw)
    r = speed / turn_rate
    yaw_t = pose.yaw + turn_rate * t
    return (pose.x + r * (math.sin(yaw_t) - math.sin(pose.yaw)),
            pose.y - r * (math.cos(yaw_t) - math.cos(pose.yaw)),
            yaw_t)


def advance_agent(state: AgentState, t: float) -> AgentState:
    """Agent state after time t under its behavior, in closed form."""
    if state.behavior is Behavior.STATIONARY or state.speed == 0.0:
        return state
    turn = state.turn_rate if state.behavior is Behavior.CONSTANT_TURN_RATE else 0.0
    x, y, yaw = _arc_position(state.pose, state.speed, turn, t)
    return AgentState(Pose2(x, y, yaw), state.speed, state.turn_rate,
                      state.dims, state.behavior)


def rollout_agent(state: AgentState, n_steps: int, dt: float):
    """Future positions at t = dt .. n_steps*dt plus headings."""
    if dt <= 0:
        raise ValueError("non-positive dt")
    traj = np.empty((n_steps, 2), dtype=np.float64)
    yaws = np.empty(n_steps, dtype=np.float64)
    for k in range(1, n_steps + 1):
        s = advance_agent(state, float(k) * dt)
        traj[k - 1] = (s.pose.x, s.pose.y)
        yaws[k - 1] = s.pose.yaw
    return traj, yaws


def agent_obb_params(state: AgentState) -> np.ndarray:
    """(x, y, yaw, half_len, half_wid) row for collision kernels."""
    w, l = state.dims
    return np.array([state.pose.x, state.pose.y, state.pose.yaw,
                     l / 2.0, w / 2.0], dtype=np.float64)


def generate_scenario(seed: int, config: SimConfig = SimConfig()) -> Scenario:
    """Deterministic scenario: ego on a constant-speed arc, agents spawned
    inside the perception circle, commands matching the ego arc."""
    config.validate()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))

    ego_speed = float(rng.uniform(config.ego_speed_min, config.ego_speed_max))
    cmd_draw = rng.integers(3)
    if cmd_draw == 0:
        command = Command.GO_STRAIGHT
        ego_turn = float(rng.uniform(-0.02, 0.02))
    elif cmd_draw == 1:
        command = Command.TURN_LEFT
        ego_turn = float(rng.uniform(0.08, 0.25))
    else:
        command = Command.TURN_RIGHT
        ego_turn = float(-rng.uniform(0.08, 0.25))
    ego0 = AgentState(Pose2(0.0, 0.0, 0.0), ego_speed, ego_turn,
                      (1.85, 4.08), Behavior.CONSTANT_TURN_RATE)
    steering = math.atan2(ego_turn * EGO_WHEELBASE, max(ego_speed, 1e-9))
    status = EgoStatus(ego_speed, 0.0, ego_turn, steering)

    n_agents = int(rng.integers(config.n_agents_min, config.n_agents_max + 1))
    agents0 = []
    for _ in range(n_agents):
        radius = config.spawn_radius * math.sqrt(rng.uniform())
        angle = rng.uniform(-math.pi, math.pi)
        yaw = rng.uniform(-math.pi, math.pi)
        draw = rng.uniform()
        if draw < config.stationary_prob:
            behavior = Behavior.STATIONARY
            speed = 0.0
            turn = 0.0
        elif draw < config.stationary_prob + config.turning_prob:
            behavior = Behavior.CONSTANT_TURN_RATE
            speed = float(rng.uniform(config.agent_speed_min, config.agent_speed_max))
            turn = float(rng.uniform(-config.agent_turn_rate_max,
                                     config.agent_turn_rate_max))
        else:
            behavior = Behavior.CONSTANT_VELOCITY
            speed = float(rng.uniform(config.agent_speed_min, config.agent_speed_max))
            turn = 0.0
        dims = (float(rng.uniform(1.6, 2.2)), float(rng.uniform(3.5, 5.2)))
        agents0.append(AgentState(
            Pose2(radius * math.cos(angle), radius * math.sin(angle), yaw),
            speed, turn, dims, behavior))

    frames = []
    for k in range(config.n_frames):
        t = float(k) * config.dt
        ex, ey, eyaw = _arc_position(ego0.pose, ego_speed, ego_turn, t)
        frames.append(ScenarioFrame(
            ego_pose=Pose2(ex, ey, eyaw),
            ego_status=status,
            agents=tuple(advance_agent(a, t) for a in agents0),
            command=command,
        ))

    map_polylines = _generate_map(rng)
    return Scenario(int(seed), config.dt, tuple(frames), map_polylines)


def _generate_map(rng) -> tuple[MapPolyline, ...]:
    """A few lane-divider polylines inside the mapped region."""
    polylines = []
    xs = np.linspace(-MAP_RANGE_LON / 2.0, MAP_RANGE_LON / 2.0, MAP_POINTS)
    for _ in range(int(rng.integers(2, 5))):
        offset = float(rng.uniform(-MAP_RANGE_LAT / 2.0, MAP_RANGE_LAT / 2.0))
        curve = float(rng.uniform(-0.002, 0.002))
        ys = offset + curve * xs ** 2
        polylines.append(MapPolyline(np.stack([xs, ys], axis=1)))
    return tuple(polylines)


def agent_to_instance(state: AgentState, ego_pose: Pose2,
                      confidence: float) -> Instance:
    """Encode a world-frame agent as an ego-frame instance."""
    rel = transform_point(inverse(ego_pose), (state.pose.x, state.pose.y))
    rel_yaw = wrap_angle(state.pose.yaw - ego_pose.yaw)
    vel_world = (state.speed * math.cos(state.pose.yaw),
                 state.speed * math.sin(state.pose.yaw))
    vel_ego = rotate_vector(-ego_pose.yaw, vel_world)
    width, length = state.dims
    # anchor dim slots are the local x/y/z extents: length, width, height
    anchor = encode_anchor(float(rel[0]), float(rel[1]), AGENT_HEIGHT / 2.0,
                           length, width, AGENT_HEIGHT, rel_yaw,
                           (float(vel_ego[0]), float(vel_ego[1]), 0.0))
    return Instance(anchor, confidence)


@dataclass(frozen=True)
class PerceivedFrame:
    """Noisy detections for one frame plus their ground-truth sources.

    sources[i] is the index of the scenario agent behind instances[i],
    or None for a spurious detection.
    """

    instances: tuple[Instance, ...]
    sources: tuple[int | None, ...]


def perturb_perception(scenario: Scenario, sigma_pos: float = 0.0,
                       sigma_yaw: float = 0.0, drop_prob: float = 0.0,
                       fp_rate: float = 0.0, seed: int = 0):
    """Noisy ego-frame detections per frame, deterministic per seed."""
    for p in (drop_prob,):
        if not 0.0 <= p <= 1.0:
            raise ValueError("probability outside [0, 1]")
    if fp_rate < 0:
        raise ValueError("negative false-positive rate")
    rng = np.random.default_rng(np.random.SeedSequence([scenario.seed, int(seed), 1]))
    frames = []
    for frame in scenario.frames:
        instances: list[Instance] = []
        sources: list[int | None] = []
        for idx, agent in enumerate(frame.agents):
            dist = math.hypot(agent.pose.x - frame.ego_pose.x,
                              agent.pose.y - frame.ego_pose.y)
            if dist > DETECTION_RADIUS:
                continue
            if drop_prob > 0.0 and rng.uniform() < drop_prob:
                continue
            nx, ny = rng.normal(0.0, sigma_pos, 2) if sigma_pos > 0 else (0.0, 0.0)
            nyaw = rng.normal(0.0, sigma_yaw) if sigma_yaw > 0 else 0.0
            noisy = AgentState(
                Pose2(agent.pose.x + nx, agent.pose.y + ny,
                      agent.pose.yaw + nyaw),
                agent.speed, agent.turn_rate, agent.dims, agent.behavior)
            noise_mag = math.hypot(nx, ny)
            conf = 0.95 if sigma_pos == 0 else \
                min(0.95, max(0.05, 0.95 - 0.5 * noise_mag / (3.0 * sigma_pos)))
            instances.append(agent_to_instance(noisy, frame.ego_pose, conf))
            sources.append(idx)
        n_fp = int(rng.poisson(fp_rate)) if fp_rate > 0 else 0
        for _ in range(n_fp):
            radius = DETECTION_RADIUS * math.sqrt(rng.uniform())
            angle = rng.uniform(-math.pi, math.pi)
            ghost = AgentState(
                Pose2(frame.ego_pose.x + radius * math.cos(angle),
                      frame.ego_pose.y + radius * math.sin(angle),
                      rng.uniform(-math.pi, math.pi)),
                0.0, 0.0,
                (float(rng.uniform(1.6, 2.2)), float(rng.uniform(3.5, 5.2))),
                Behavior.STATIONARY)
            # spurious detections stay mostly below useful confidence
            conf = float(rng.uniform(0.0, 0.4))
            instances.append(agent_to_instance(ghost, frame.ego_pose, conf))
            sources.append(None)
        frames.append(PerceivedFrame(tuple(instances), tuple(sources)))
    return frames


def baseline_forecast(kind: str, current: AnchorBox, n_steps: int,
                      dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Single-mode forecast: hold position, or integrate current velocity.

    Returns (modes (1, n_steps, 2), scores (1,)).
    """
    traj = np.empty((1, n_steps, 2), dtype=np.float64)
    if kind == "constant_position":
        traj[0, :, 0] = current.x
        traj[0, :, 1] = current.y
    elif kind == "constant_velocity":
        steps = np.arange(1, n_steps + 1, dtype=np.float64) * dt
        traj[0, :, 0] = current.x + current.vx * steps
        traj[0, :, 1] = current.y + current.vy * steps
    else:
        raise ValueError(f"unknown baseline kind: {kind}")
    return traj, np.ones(1, dtype=np.float64)


def generate_plan_proposals(ego_speed: float, cmd: Command, n_modes: int,
                            n_steps: int, dt: float):
    """Fan of constant-turn-rate arcs in the ego frame for one command.

    Terminal headings bracket the command's nominal heading change; scores
    follow a fixed smooth prior peaked at the nominal arc.
    """
    if n_modes < 1:
        raise ValueError("need at least one mode")
    nominal = COMMAND_HEADING[cmd]
    if n_modes == 1:
        offsets = np.zeros(1)
    else:
        offsets = np.linspace(-FAN_HALF_WIDTH, FAN_HALF_WIDTH, n_modes)
    speed = max(float(ego_speed), MIN_PLAN_SPEED)
    horizon = n_steps * dt
    trajs = np.empty((n_modes, n_steps, 2), dtype=np.float64)
    start = Pose2(0.0, 0.0, 0.0)
    for i, off in enumerate(offsets):
        turn = (nominal + off) / horizon
        for k in range(1, n_steps + 1):
            x, y, _ = _arc_position(start, speed, turn, float(k) * dt)
            trajs[i, k - 1] = (x, y)
    center = (n_modes - 1) / 2.0
    z = (np.arange(n_modes) - center) / max(n_modes / 3.0, 1.0)
    scores = np.exp(-z ** 2)
    scores = scores / scores.sum()
    return trajs, scores


def build_proposal_set(ego_speed: float, n_modes: int, n_steps: int,
                       dt: float) -> PlanProposalSet:
    """Proposals for all three commands, rows indexed by Command."""
    trajs = np.empty((len(Command), n_modes, n_steps, 2), dtype=np.float64)
    scores = np.empty((len(Command), n_modes), dtype=np.float64)
    for cmd in Command:
        t, s = generate_plan_proposals(ego_speed, cmd, n_modes, n_steps, dt)
        trajs[int(cmd)] = t
        scores[int(cmd)] = s
    return PlanProposalSet(trajs, scores)


def scenario_to_jsonl(scenario: Scenario, path) -> None:
    header = {
        "type": "scenario",
        "seed": scenario.seed,
        "dt": scenario.dt,
        "n_frames": len(scenario.frames),
        "map": [p.points.tolist() for p in scenario.map_polylines],
    }
    with open(path, "w") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for i, fr in enumerate(scenario.frames):
            line = {
                "frame": i,
                "ego": {"x": fr.ego_pose.x, "y": fr.ego_pose.y,
                        "yaw": fr.ego_pose.yaw},
                "status": asdict(fr.ego_status),
                "command": fr.command.name,
                "agents": [
                    {"x": a.pose.x, "y": a.pose.y, "yaw": a.pose.yaw,
                     "speed": a.speed, "turn_rate": a.turn_rate,
                     "width": a.dims[0], "length": a.dims[1],
                     "behavior": a.behavior.value}
                    for a in fr.agents
                ],
            }
            f.write(json.dumps(line, sort_keys=True) + "\n")


def scenario_from_jsonl(path) -> Scenario:
    lines = []
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                lines.append(json.loads(raw))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {lineno}: invalid JSON") from exc
    if not lines or lines[0].get("type") != "scenario":
        raise ValueError(f"not a scenario file: {path}")
    header = lines[0]
    frames = []
    for line in lines[1:]:
        agents = tuple(
            AgentState(Pose2(a["x"], a["y"], a["yaw"]), a["speed"],
                       a["turn_rate"], (a["width"], a["length"]),
                       Behavior(a["behavior"]))
            for a in line["agents"]
        )
        st = line["status"]
        frames.append(ScenarioFrame(
            ego_pose=Pose2(line["ego"]["x"], line["ego"]["y"], line["ego"]["yaw"]),
            ego_status=EgoStatus(st["velocity"], st["acceleration"],
                                 st["angular_velocity"], st["steering_angle"]),
            agents=agents,
            command=Command[line["command"]],
        ))
    map_polylines = tuple(MapPolyline(np.asarray(p)) for p in header["map"])
    return Scenario(header["seed"], header["dt"], tuple(frames), map_polylines)
