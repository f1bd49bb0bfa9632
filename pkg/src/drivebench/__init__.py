"""Desk-scale planning, tracking and evaluation toolkit for BEV driving scenes."""

from ._kernels import BACKEND as _kernel_backend
from .geometry import OBB2, Camera, CameraRig, Pose2, compose, estimate_yaws, \
    inverse, obb_overlap, project_points
from .instances import AnchorBox, EgoStatus, Instance, InstanceMemoryQueue, \
    MapPolyline, decode_anchor, default_anchor_params, encode_anchor, \
    generate_keypoints, init_ego_anchor
from .anchors import KMeansResult, ModeQuery, build_mode_queries, \
    cluster_anchor_boxes, cluster_polylines, kmeans, sinusoidal_pe
from .losses import LossWeights, focal_loss, hungarian, total_loss, wta_select
from .planner import AgentForecast, Command, PlanProposalSet, \
    check_plan_collision, collision_aware_rescore, filter_by_command, \
    select_trajectory
from .tracking import TrackerState, TrackingEvalInput, assign_ids, \
    propagate_instances, tracking_metrics
from .metrics import MotionEvalSample, PlanningEvalSample, \
    collision_rate_grid, collision_rate_obb, motion_metrics, planning_l2
from .sim import AgentState, Behavior, Scenario, SimConfig, baseline_forecast, \
    generate_plan_proposals, generate_scenario, perturb_perception, rollout_agent

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Which collision kernel is active: 'native' or 'python'."""
    return _kernel_backend
