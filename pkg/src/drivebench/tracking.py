"""Threshold-based ID assignment, temporal propagation, tracking metrics.

IDs are handed out once, when an instance's detection confidence first
exceeds the tracking threshold, and are never reassigned. Metrics follow
the nuScenes-style recall-swept MOTA accumulation with greedy
confidence-ordered center-distance matching.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .geometry import Pose2, compose, inverse, rotate_vector, transform_point, wrap_angle
from .instances import AnchorBox, Instance

TRACK_THRESHOLD = 0.2
MATCH_DISTANCE = 2.0  # nuScenes car center-distance threshold, meters

# Recall targets of the AMOTA sweep: 40 evenly spaced values on [0.1, 1],
# r_i = (39 + 9i) / 390. Sub-0.1 recalls are not scored.
NUM_RECALL_TARGETS = 40


@dataclass
class TrackerState:
    next_id: int = 0
    active: dict[int, tuple[Instance, int]] = field(default_factory=dict)

    def fresh_id(self) -> int:
        tid = self.next_id
        self.next_id += 1
        return tid


def assign_ids(state: TrackerState, instances, t_thresh: float = TRACK_THRESHOLD,
               frame: int = 0):
    """Lock confident ID-less instances onto fresh IDs; existing IDs persist."""
    out = []
    for inst in instances:
        if inst.track_id is None and inst.confidence > t_thresh:
            inst = inst.with_id(state.fresh_id())
        if inst.track_id is not None:
            state.active[inst.track_id] = (inst, frame)
        out.append(inst)
    return out, state


def propagate_instances(instances, ego_motion: Pose2, dt: float):
    """Advance anchors by constant velocity, then re-express them in the
    current ego frame.

    ego_motion is the pose of the previous ego frame in the current one.
    """
    if dt < 0:
        raise ValueError("negative dt")
    out = []
    for inst in instances:
        a = inst.anchor
        x = a.x + a.vx * dt
        y = a.y + a.vy * dt
        z = a.z + a.vz * dt
        nx, ny = transform_point(ego_motion, (x, y))
        yaw = wrap_angle(math.atan2(a.sin_yaw, a.cos_yaw) + ego_motion.yaw)
        vx, vy = rotate_vector(ego_motion.yaw, (a.vx, a.vy))
        anchor = AnchorBox(float(nx), float(ny), z, a.ln_w, a.ln_h, a.ln_l,
                           math.sin(yaw), math.cos(yaw), float(vx), float(vy), a.vz)
        out.append(Instance(anchor, inst.confidence, inst.track_id, inst.embedding))
    return out


def relative_ego_motion(prev_pose: Pose2, cur_pose: Pose2) -> Pose2:
    """Pose of the previous ego frame expressed in the current ego frame."""
    return compose(inverse(cur_pose), prev_pose)


@dataclass(frozen=True)
class TrackingEvalInput:
    """Per-frame ground truth and predictions.

    gt[f] is a list of (gt_id, x, y); pred[f] a list of
    (track_id, confidence, x, y). Frames are indexed contiguously.
    """

    gt: list
    pred: list

    def __post_init__(self):
        if len(self.gt) != len(self.pred):
            raise ValueError("gt/pred frame count mismatch")


def _mot_pass(inp: TrackingEvalInput, match_dist: float, min_conf: float):
    """One full greedy-matching accumulation at a confidence cutoff.

    Predictions are processed in descending confidence (ties keep input
    order) and match the nearest unmatched GT within match_dist (ties:
    lowest GT index). Returns (tp, fp, fn, ids, dist_sum, tp_confs).
    """
    tp = fp = fn = ids = 0
    dist_sum = 0.0
    tp_confs = []
    last_match: dict = {}
    for gts, preds in zip(inp.gt, inp.pred):
        order = sorted(range(len(preds)), key=lambda i: -preds[i][1])
        taken = [False] * len(gts)
        matched = 0
        for i in order:
            pid, conf, px, py = preds[i]
            if conf < min_conf:
                continue
            best = -1
            best_d = match_dist
            for gi, (gid, gx, gy) in enumerate(gts):
                if taken[gi]:
                    continue
                d = math.hypot(px - gx, py - gy)
                if d <= best_d and (best < 0 or d < best_d):
                    best = gi
                    best_d = d
            if best < 0:
                fp += 1
                continue
            taken[best] = True
            matched += 1
            tp += 1
            dist_sum += best_d
            tp_confs.append(conf)
            gid = gts[best][0]
            if gid in last_match and last_match[gid] != pid:
                ids += 1
            last_match[gid] = pid
        fn += len(gts) - matched
    return tp, fp, fn, ids, dist_sum, tp_confs


def tracking_metrics(inp: TrackingEvalInput, match_dist: float = MATCH_DISTANCE):
    """Recall-swept tracking metrics: (AMOTA, AMOTP, recall, IDS).

    For each target recall the confidence cutoff is taken from the sorted
    matched-prediction confidences of a full pass; MOTAR at a cutoff uses
    the achieved recall. Unachievable targets contribute 0 to AMOTA; AMOTP
    averages the mean match distance over achievable targets. The reported
    recall and IDS come from the full (uncut) pass.
    """
    total_gt = sum(len(f) for f in inp.gt)
    if total_gt == 0:
        raise ValueError("empty ground truth")

    tp, fp, fn, ids_full, dist_sum, tp_confs = _mot_pass(inp, match_dist, -math.inf)
    recall_full = tp / total_gt
    tp_confs.sort(reverse=True)

    motar_terms = []
    motp_terms = []
    for i in range(NUM_RECALL_TARGETS):
        # k = ceil(total_gt * (39 + 9i) / 390), computed in exact integers
        k = -((-total_gt * (39 + 9 * i)) // 390)
        if k > len(tp_confs):
            motar_terms.append(0.0)
            continue
        cutoff = tp_confs[k - 1]
        s_tp, s_fp, s_fn, s_ids, s_dist, _ = _mot_pass(inp, match_dist, cutoff)
        recall = s_tp / total_gt
        if recall <= 0.0:
            motar_terms.append(0.0)
            continue
        motar = 1.0 - (s_ids + s_fp + s_fn - (1.0 - recall) * total_gt) \
            / (recall * total_gt)
        motar_terms.append(max(0.0, motar))
        motp_terms.append(s_dist / s_tp)

    amota = sum(motar_terms) / NUM_RECALL_TARGETS
    amotp = sum(motp_terms) / len(motp_terms) if motp_terms else 0.0
    return amota, amotp, recall_full, ids_full


def write_tracking_jsonl(path, inp: TrackingEvalInput) -> None:
    with open(path, "w") as f:
        for frame, (gts, preds) in enumerate(zip(inp.gt, inp.pred)):
            line = {
                "frame": frame,
                "gt": [{"id": g[0], "x": g[1], "y": g[2]} for g in gts],
                "pred": [{"id": p[0], "score": p[1], "x": p[2], "y": p[3]}
                         for p in preds],
            }
            f.write(json.dumps(line, sort_keys=True) + "\n")


def read_tracking_jsonl(path) -> TrackingEvalInput:
    gt, pred = [], []
    with open(path) as f:
        for raw in f:
            raw = raw.strip()
            if not raw:
                continue
            line = json.loads(raw)
            gt.append([(g["id"], g["x"], g["y"]) for g in line["gt"]])
            pred.append([(p["id"], p["score"], p["x"], p["y"])
                         for p in line["pred"]])
    return TrackingEvalInput(gt, pred)
