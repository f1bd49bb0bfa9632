"""Run configuration shared by the CLI commands.

Defaults follow the reference operating point: tracking threshold 0.2,
6 planning modes over 6 steps, 12-step forecasts, history depth 3,
0.5 m legacy grid.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .pipeline import PlannerParams
from .sim import SimConfig


@dataclass(frozen=True)
class NoiseParams:
    sigma_pos: float = 0.1
    sigma_yaw: float = 0.02
    drop_prob: float = 0.05
    fp_rate: float = 0.3

    def validate(self) -> None:
        if self.sigma_pos < 0 or self.sigma_yaw < 0:
            raise ValueError("negative noise sigma")
        if not 0 <= self.drop_prob <= 1:
            raise ValueError("drop_prob outside [0, 1]")
        if self.fp_rate < 0:
            raise ValueError("negative fp_rate")


@dataclass(frozen=True)
class MetricParams:
    miss_threshold: float = 2.0
    epa_alpha: float = 0.5
    epa_threshold: float = 2.0
    grid_resolution: float = 0.5
    match_dist: float = 2.0
    l2_cumulative: bool = False

    def validate(self) -> None:
        if min(self.miss_threshold, self.epa_threshold, self.match_dist) <= 0:
            raise ValueError("non-positive metric threshold")
        if self.grid_resolution <= 0:
            raise ValueError("non-positive grid resolution")
        if self.epa_alpha < 0:
            raise ValueError("negative epa_alpha")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    n_scenarios: int = 10
    history_frames: int = 3
    sim: SimConfig = field(default_factory=SimConfig)
    noise: NoiseParams = field(default_factory=NoiseParams)
    planner: PlannerParams = field(default_factory=PlannerParams)
    metrics: MetricParams = field(default_factory=MetricParams)

    def validate(self) -> None:
        if self.n_scenarios < 0:
            raise ValueError("negative scenario count")
        if self.history_frames < 1:
            raise ValueError("history depth must be positive")
        self.sim.validate()
        self.noise.validate()
        self.metrics.validate()
        if self.planner.k_p < 1 or self.planner.t_p < 1:
            raise ValueError("bad planner mode/step counts")
        if self.planner.t_m < self.planner.t_p:
            raise ValueError("forecast horizon shorter than planning horizon")
        if not 0 <= self.planner.t_thresh <= 1:
            raise ValueError("tracking threshold outside [0, 1]")
        if self.sim.n_frames < self.planner.t_p + 1:
            raise ValueError("scenario shorter than the planning horizon")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        kwargs = dict(data)
        for key, cls in (("sim", SimConfig), ("noise", NoiseParams),
                         ("planner", PlannerParams), ("metrics", MetricParams)):
            if key in kwargs and isinstance(kwargs[key], dict):
                kwargs[key] = cls(**kwargs[key])
        cfg = RunConfig(**kwargs)
        cfg.validate()
        return cfg

    @staticmethod
    def from_json(path) -> "RunConfig":
        with open(path) as f:
            return RunConfig.from_dict(json.load(f))
