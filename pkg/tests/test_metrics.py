import math

import numpy as np
import pytest

from drivebench.geometry import Pose2, transform_point, wrap_angle
from drivebench.metrics import (MotionEvalSample, PlanningEvalSample,
                                collision_rate_grid, collision_rate_obb,
                                grid_collision_at, motion_metrics,
                                obb_collision_at, planning_l2)


def straight_sample(offset=(0.0, 0.0), agents=None, yaw0=0.0, t=6):
    gt = np.stack([np.arange(1, t + 1) * 2.0, np.zeros(t)], axis=1)
    plan = gt + np.asarray(offset)
    if agents is None:
        agents = [np.empty((0, 5))] * t
    return PlanningEvalSample(plan=plan, gt_traj=gt, gt_yaw0=yaw0,
                              ego_dims=(1.85, 4.08), agents=agents)


def sub_cell_obstacle_scene():
    """0.3 m obstacle passed with 0.4 m lateral clearance on a 0.5 m grid."""
    plan = np.stack([np.full(6, -0.625), 0.4 * np.arange(1, 7)], axis=1)
    agents = [np.array([[0.85, 2.4, 0.0, 0.15, 0.15]])] * 6
    return PlanningEvalSample(plan=plan, gt_traj=plan.copy(),
                              gt_yaw0=math.pi / 2, ego_dims=(1.85, 4.08),
                              agents=agents)


def quarter_turn_scene():
    """90-degree right turn; obstacle sits beyond the endpoint along the
    initial heading, aligned with where the unturned footprint points."""
    r = 4.0
    ks = np.arange(1, 7)
    plan = np.stack([r - r * np.cos(np.pi / 12 * ks),
                     r * np.sin(np.pi / 12 * ks)], axis=1)
    agents = [np.array([[4.0, 6.0, 0.0, 0.3, 0.3]])] * 6
    return PlanningEvalSample(plan=plan, gt_traj=plan.copy(),
                              gt_yaw0=math.pi / 2, ego_dims=(1.85, 4.08),
                              agents=agents)


class TestPlanningL2:
    def test_perfect_plan(self):
        table = planning_l2([straight_sample()])
        assert table == {"1s": 0.0, "2s": 0.0, "3s": 0.0, "avg": 0.0}

    def test_uniform_lateral_offset(self):
        table = planning_l2([straight_sample(offset=(0.0, 1.0))])
        assert table["1s"] == pytest.approx(1.0)
        assert table["2s"] == pytest.approx(1.0)
        assert table["3s"] == pytest.approx(1.0)
        assert table["avg"] == pytest.approx(1.0)

    def test_final_step_offset_only(self):
        s = straight_sample()
        plan = s.plan.copy()
        plan[5] += [0.0, 0.6]
        s2 = PlanningEvalSample(plan, s.gt_traj, s.gt_yaw0, s.ego_dims, s.agents)
        table = planning_l2([s2])
        assert table["1s"] == 0.0
        assert table["2s"] == 0.0
        assert table["3s"] == pytest.approx(0.6)
        assert table["avg"] == pytest.approx(0.2)

    def test_cumulative_mode(self):
        s = straight_sample()
        plan = s.plan.copy()
        plan[5] += [0.0, 0.6]
        s2 = PlanningEvalSample(plan, s.gt_traj, s.gt_yaw0, s.ego_dims, s.agents)
        table = planning_l2([s2], cumulative=True)
        assert table["3s"] == pytest.approx(0.6 / 6)
        assert table["1s"] == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            planning_l2([])

    def test_averages_over_samples(self):
        a = straight_sample(offset=(0.0, 1.0))
        b = straight_sample(offset=(0.0, 0.0))
        assert planning_l2([a, b])["1s"] == pytest.approx(0.5)


class TestCollisionRates:
    def test_empty_scene_zero(self):
        table = collision_rate_obb([straight_sample()])
        assert table == {"1s": 0.0, "2s": 0.0, "3s": 0.0, "avg": 0.0}
        table = collision_rate_grid([straight_sample()])
        assert table == {"1s": 0.0, "2s": 0.0, "3s": 0.0, "avg": 0.0}

    def test_agent_on_plan_point(self):
        agents = [np.empty((0, 5))] * 6
        agents[5] = np.array([[12.0, 0.0, 0.0, 1.0, 1.0]])
        s = straight_sample(agents=agents)
        table = collision_rate_obb([s])
        assert table["3s"] == 1.0
        assert table["1s"] == 0.0
        assert table["avg"] == pytest.approx(1.0 / 3.0)

    def test_sub_cell_obstacle_divergence(self):
        s = sub_cell_obstacle_scene()
        assert all(not obb_collision_at(s, t) for t in range(6))
        assert grid_collision_at(s, 5)
        obb = collision_rate_obb([s])
        grid = collision_rate_grid([s])
        assert obb["avg"] == 0.0
        assert grid["avg"] > 0.0

    def test_quarter_turn_heading_divergence(self):
        s = quarter_turn_scene()
        assert not obb_collision_at(s, 5)
        assert grid_collision_at(s, 5)
        assert collision_rate_obb([s])["3s"] == 0.0
        assert collision_rate_grid([s])["3s"] == 1.0

    def test_obb_monotone_in_obstacle_dilation(self, rng):
        for _ in range(30):
            t = 6
            agents = []
            for step in range(t):
                n = int(rng.integers(0, 3))
                rows = np.column_stack([
                    rng.uniform(0, 14, n), rng.uniform(-3, 3, n),
                    rng.uniform(-math.pi, math.pi, n),
                    rng.uniform(0.2, 2.0, n), rng.uniform(0.2, 2.0, n),
                ]) if n else np.empty((0, 5))
                agents.append(rows)
            s = straight_sample(agents=agents)
            base = collision_rate_obb([s])
            grown = [a.copy() for a in agents]
            for a in grown:
                if a.size:
                    a[:, 3:5] += 0.5
            s2 = PlanningEvalSample(s.plan, s.gt_traj, s.gt_yaw0, s.ego_dims,
                                    grown)
            bigger = collision_rate_obb([s2])
            for key in ("1s", "2s", "3s", "avg"):
                assert bigger[key] >= base[key]

    def test_rigid_invariance_obb(self, rng):
        for _ in range(20):
            t = 6
            agents = [np.column_stack([
                rng.uniform(0, 12, 2), rng.uniform(-2, 2, 2),
                rng.uniform(-math.pi, math.pi, 2),
                rng.uniform(0.3, 1.5, 2), rng.uniform(0.3, 1.5, 2)])
                for _ in range(t)]
            s = straight_sample(agents=agents)
            base = collision_rate_obb([s])
            move = Pose2(float(rng.uniform(-20, 20)),
                         float(rng.uniform(-20, 20)),
                         float(rng.uniform(-math.pi, math.pi)))
            moved_agents = []
            for rows in agents:
                out = rows.copy()
                xy = transform_point(move, rows[:, :2])
                out[:, :2] = xy
                out[:, 2] = [wrap_angle(y + move.yaw) for y in rows[:, 2]]
                moved_agents.append(out)
            s2 = PlanningEvalSample(
                transform_point(move, s.plan), transform_point(move, s.gt_traj),
                wrap_angle(s.gt_yaw0 + move.yaw), s.ego_dims, moved_agents)
            assert collision_rate_obb([s2]) == base
            assert planning_l2([s2]) == pytest.approx(
                planning_l2([s]), abs=1e-9)


def reference_motion_metrics(samples, num_fp, miss_threshold, epa_alpha,
                             epa_threshold):
    """Loop transcription of the forecasting metric definitions."""
    ades = []
    fdes = []
    misses = 0
    hits = 0
    for s in samples:
        if s.modes is None:
            misses += 1
            continue
        best_ade = None
        best_fde = None
        last_valid = max(t for t in range(len(s.valid)) if s.valid[t])
        for mode in s.modes:
            total = 0.0
            count = 0
            for t in range(s.gt.shape[0]):
                if not s.valid[t]:
                    continue
                d = math.hypot(mode[t][0] - s.gt[t][0], mode[t][1] - s.gt[t][1])
                total += d
                count += 1
            ade = total / count
            fde = math.hypot(mode[last_valid][0] - s.gt[last_valid][0],
                             mode[last_valid][1] - s.gt[last_valid][1])
            if best_ade is None or ade < best_ade:
                best_ade = ade
            if best_fde is None or fde < best_fde:
                best_fde = fde
        ades.append(best_ade)
        fdes.append(best_fde)
        if best_fde > miss_threshold:
            misses += 1
        if best_fde <= epa_threshold:
            hits += 1
    return {
        "minade": sum(ades) / len(ades) if ades else float("nan"),
        "minfde": sum(fdes) / len(fdes) if fdes else float("nan"),
        "miss_rate": misses / len(samples),
        "epa": max(0.0, (hits - epa_alpha * num_fp) / len(samples)),
    }


def random_motion_sample(rng, allow_unmatched=True):
    t = int(rng.integers(2, 13))
    k = int(rng.integers(1, 7))
    gt = rng.uniform(-10, 10, (t, 2))
    valid = rng.uniform(size=t) < 0.8
    if not valid.any():
        valid[int(rng.integers(t))] = True
    if allow_unmatched and rng.uniform() < 0.2:
        return MotionEvalSample(gt=gt, valid=valid)
    modes = gt[None] + rng.normal(0, 1.5, (k, t, 2))
    return MotionEvalSample(gt=gt, valid=valid, modes=modes)


class TestMotionMetrics:
    def test_perfect_single_mode(self):
        gt = np.arange(12.0).reshape(6, 2)
        s = MotionEvalSample(gt=gt, valid=np.ones(6, bool), modes=gt[None])
        out = motion_metrics([s])
        assert out == {"minade": 0.0, "minfde": 0.0, "miss_rate": 0.0, "epa": 1.0}

    def test_uniform_offset_best_mode(self):
        gt = np.zeros((6, 2))
        modes = np.stack([gt + [0.5, 0.0], gt + [3.0, 0.0]])
        s = MotionEvalSample(gt=gt, valid=np.ones(6, bool), modes=modes)
        out = motion_metrics([s])
        assert out["minade"] == pytest.approx(0.5)
        assert out["minfde"] == pytest.approx(0.5)
        assert out["miss_rate"] == 0.0

    def test_epa_formula(self):
        gt = np.zeros((6, 2))
        hit = MotionEvalSample(gt=gt, valid=np.ones(6, bool), modes=gt[None])
        missed = MotionEvalSample(gt=gt, valid=np.ones(6, bool),
                                  modes=(gt + [3.0, 0.0])[None])
        out = motion_metrics([hit, missed], num_false_positives=1,
                             epa_alpha=0.5)
        assert out["epa"] == pytest.approx(0.25)
        assert out["miss_rate"] == pytest.approx(0.5)

    def test_epa_clamped_at_zero(self):
        gt = np.zeros((6, 2))
        missed = MotionEvalSample(gt=gt, valid=np.ones(6, bool),
                                  modes=(gt + [9.0, 0.0])[None])
        out = motion_metrics([missed], num_false_positives=10)
        assert out["epa"] == 0.0

    def test_unmatched_counts_as_miss(self):
        gt = np.zeros((6, 2))
        s = MotionEvalSample(gt=gt, valid=np.ones(6, bool))
        out = motion_metrics([s])
        assert out["miss_rate"] == 1.0
        assert math.isnan(out["minade"])

    def test_partial_validity_fde_at_last_valid(self):
        gt = np.zeros((6, 2))
        valid = np.array([True, True, True, False, False, False])
        modes = np.zeros((1, 6, 2))
        modes[0, 2] = [1.5, 0.0]   # error at the last valid step
        modes[0, 5] = [50.0, 0.0]  # ignored: beyond validity
        s = MotionEvalSample(gt=gt, valid=valid, modes=modes)
        out = motion_metrics([s])
        assert out["minfde"] == pytest.approx(1.5)

    def test_adding_modes_never_hurts(self, rng):
        for _ in range(50):
            s = random_motion_sample(rng, allow_unmatched=False)
            extra = np.concatenate([s.modes, rng.uniform(-10, 10,
                                                         (1,) + s.modes.shape[1:])])
            s2 = MotionEvalSample(gt=s.gt, valid=s.valid, modes=extra)
            base = motion_metrics([s])
            more = motion_metrics([s2])
            assert more["minade"] <= base["minade"] + 1e-12
            assert more["minfde"] <= base["minfde"] + 1e-12

    def test_matches_reference(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 6))
            samples = [random_motion_sample(rng) for _ in range(n)]
            if all(s.modes is None for s in samples):
                samples.append(random_motion_sample(rng, allow_unmatched=False))
            fp = int(rng.integers(0, 4))
            got = motion_metrics(samples, fp)
            want = reference_motion_metrics(samples, fp, 2.0, 0.5, 2.0)
            for key in ("minade", "minfde", "miss_rate", "epa"):
                if math.isnan(want[key]):
                    assert math.isnan(got[key])
                else:
                    assert got[key] == pytest.approx(want[key], abs=1e-9)

    def test_rigid_invariance(self, rng):
        samples = [random_motion_sample(rng, allow_unmatched=False)
                   for _ in range(5)]
        base = motion_metrics(samples)
        move = Pose2(4.0, -7.0, 1.2)
        moved = [MotionEvalSample(
            gt=transform_point(move, s.gt), valid=s.valid,
            modes=np.stack([transform_point(move, m) for m in s.modes]))
            for s in samples]
        out = motion_metrics(moved)
        for key in base:
            assert out[key] == pytest.approx(base[key], abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            motion_metrics([])
