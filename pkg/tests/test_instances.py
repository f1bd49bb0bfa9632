import math

import numpy as np
import pytest

from drivebench.geometry import Pose2, transform_point, wrap_angle
from drivebench.instances import (AnchorBox, Instance, InstanceMemoryQueue,
                                  MapPolyline, decode_anchor,
                                  default_anchor_params, encode_anchor,
                                  generate_keypoints, init_ego_anchor)


def _random_box(rng):
    return encode_anchor(*rng.uniform(-10, 10, 3), *rng.uniform(0.5, 5, 3),
                         rng.uniform(-math.pi, math.pi), rng.uniform(-3, 3, 3))


class TestAnchorCodec:
    def test_unit_cube_at_origin(self):
        a = encode_anchor(0, 0, 0, 1, 1, 1, 0.0, (0, 0, 0))
        assert a.to_vector().tolist() == [0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0]

    def test_quarter_turn(self):
        a = encode_anchor(0, 0, 0, 1, 1, 1, math.pi / 2, (0, 0, 0))
        assert a.sin_yaw == pytest.approx(1.0)
        assert a.cos_yaw == pytest.approx(0.0, abs=1e-12)

    def test_log_width(self):
        a = encode_anchor(0, 0, 0, 2.0, 1, 1, 0.0, (0, 0, 0))
        assert a.ln_w == pytest.approx(0.693147, abs=1e-6)

    def test_non_positive_extent(self):
        with pytest.raises(ValueError, match="non-positive extent"):
            encode_anchor(0, 0, 0, 0.0, 1, 1, 0.0, (0, 0, 0))

    def test_round_trip(self, rng):
        for _ in range(100):
            x, y, z = rng.uniform(-10, 10, 3)
            w, h, l = rng.uniform(0.1, 8, 3)
            yaw = rng.uniform(-math.pi, math.pi)
            vel = rng.uniform(-5, 5, 3)
            d = decode_anchor(encode_anchor(x, y, z, w, h, l, yaw, vel))
            assert np.allclose(d.position, (x, y, z), atol=1e-9)
            assert np.allclose(d.dims, (w, h, l), atol=1e-9)
            assert abs(wrap_angle(d.yaw - yaw)) < 1e-9
            assert np.allclose(d.velocity, vel, atol=1e-9)

    def test_decode_examples(self):
        a = AnchorBox(0, 0, 0, 0.0, 0.0, 0.0, 0.6, 0.8, 0, 0, 0)
        d = decode_anchor(a)
        assert d.dims[0] == pytest.approx(1.0)
        assert d.yaw == pytest.approx(0.643501, abs=1e-6)

    def test_yaw_norm_invariant(self):
        with pytest.raises(ValueError, match="normalized"):
            AnchorBox(0, 0, 0, 0, 0, 0, 0.5, 0.5, 0, 0, 0)


class TestDefaultParams:
    def test_exact_values(self):
        assert default_anchor_params() == (1, 1, 1, 0, 1, 0, 0, 0)

    def test_decoded_dims_are_e(self):
        a = AnchorBox(0, 0, 0, *default_anchor_params())
        d = decode_anchor(a)
        assert np.allclose(d.dims, math.e, atol=1e-9)
        assert d.yaw == 0.0


class TestKeypoints:
    def test_unit_cube(self):
        a = encode_anchor(0, 0, 0, 1, 1, 1, 0.0, (0, 0, 0))
        pts = generate_keypoints(a)
        expected = {(0, 0, 0), (0.5, 0, 0), (-0.5, 0, 0), (0, 0.5, 0),
                    (0, -0.5, 0), (0, 0, 0.5), (0, 0, -0.5)}
        got = {tuple(np.round(p, 9)) for p in pts}
        assert got == expected

    def test_quarter_turn_swaps_faces(self):
        a = encode_anchor(0, 0, 0, 2, 1, 1, math.pi / 2, (0, 0, 0))
        pts = np.round(generate_keypoints(a), 9)
        got = {tuple(p) for p in pts}
        assert (0.0, 1.0, 0.0) in got and (0.0, -1.0, 0.0) in got

    def test_translated_box_face_center(self):
        a = encode_anchor(1, 2, 3, 2, 4, 6, 0.0, (0, 0, 0))
        pts = {tuple(np.round(p, 9)) for p in generate_keypoints(a)}
        assert (2.0, 2.0, 3.0) in pts

    def test_rigid_equivariance(self, rng):
        for _ in range(50):
            x, y, z = rng.uniform(-5, 5, 3)
            w, h, l = rng.uniform(0.5, 4, 3)
            yaw = rng.uniform(-math.pi, math.pi)
            base = generate_keypoints(encode_anchor(0, 0, z, w, h, l, 0.0, (0, 0, 0)))
            moved = generate_keypoints(encode_anchor(x, y, z, w, h, l, yaw, (0, 0, 0)))
            xy = transform_point(Pose2(x, y, yaw), base[:, :2])
            assert np.allclose(moved[:, :2], xy, atol=1e-9)
            assert np.allclose(moved[:, 2], base[:, 2], atol=1e-9)


class TestEgoAnchor:
    def test_first_frame_zero_velocity(self):
        a = init_ego_anchor((1.85, 1.5, 4.1))
        assert (a.vx, a.vy, a.vz) == (0.0, 0.0, 0.0)
        assert (a.x, a.y, a.z) == (0.0, 0.0, 0.0)

    def test_previous_velocity_feeds_forward(self):
        a = init_ego_anchor((1.85, 1.5, 4.1), prev_predicted_velocity=5.0)
        assert (a.vx, a.vy) == (5.0, 0.0)

    def test_log_dims(self):
        a = init_ego_anchor((1.85, 1.5, 4.1))
        assert a.ln_w == pytest.approx(math.log(1.85), abs=1e-12)
        assert a.ln_l == pytest.approx(math.log(4.1), abs=1e-12)


def _inst(conf=0.9, track_id=None):
    anchor = encode_anchor(0, 0, 0, 1, 1, 1, 0.0, (0, 0, 0))
    return Instance(anchor, conf, track_id)


class TestMemoryQueue:
    def test_ring_eviction(self):
        q = InstanceMemoryQueue(capacity=3)
        for frame in range(1, 5):
            q.push(frame, [_inst(track_id=7)])
        history = q.query(7)
        assert len(history) == 3
        # frames 2, 3, 4 survive
        q2 = InstanceMemoryQueue(capacity=3)
        frames_seen = []
        for frame in range(1, 5):
            q2.push(frame, [_inst(track_id=7)])
            frames_seen.append(frame)
        assert [f for f, _ in q2._rings[7]] == [2, 3, 4]

    def test_push_empty_is_noop(self):
        q = InstanceMemoryQueue(capacity=3)
        q.push(1, [_inst(track_id=1)])
        q.push(2, [])
        assert len(q.query(1)) == 1

    def test_unidentified_ignored(self):
        q = InstanceMemoryQueue(capacity=3)
        q.push(1, [_inst(track_id=None)])
        assert q.tracks() == []

    def test_interleaved_tracks(self):
        q = InstanceMemoryQueue(capacity=3)
        q.push(1, [_inst(track_id=1)])
        q.push(2, [_inst(track_id=1), _inst(track_id=2)])
        q.push(3, [_inst(track_id=2)])
        assert [f for f, _ in q._rings[1]] == [1, 2]
        assert [f for f, _ in q._rings[2]] == [2, 3]

    def test_unknown_track_empty(self):
        assert InstanceMemoryQueue().query(99) == []

    def test_eviction_trace_five_frames(self):
        q = InstanceMemoryQueue(capacity=3)
        for frame in range(1, 6):
            q.push(frame, [_inst(track_id=0)])
        assert [f for f, _ in q._rings[0]] == [3, 4, 5]

    def test_frame_regression_rejected(self):
        q = InstanceMemoryQueue(capacity=3)
        q.push(5, [_inst(track_id=0)])
        with pytest.raises(ValueError, match="frame regression"):
            q.push(5, [_inst(track_id=0)])

    def test_capacity_and_order_random(self, rng):
        q = InstanceMemoryQueue(capacity=3)
        frames = sorted(rng.choice(np.arange(100), size=20, replace=False))
        for f in frames:
            tids = rng.choice(5, size=rng.integers(0, 4), replace=False)
            q.push(int(f), [_inst(track_id=int(t)) for t in tids])
        for tid in q.tracks():
            ring = q._rings[tid]
            assert len(ring) <= 3
            stamps = [f for f, _ in ring]
            assert stamps == sorted(stamps)


class TestPolyline:
    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            MapPolyline(np.zeros((1, 2)))

    def test_point_count(self):
        p = MapPolyline(np.zeros((20, 2)))
        assert p.num_points == 20


class TestInstanceIdentity:
    def test_id_immutable(self):
        inst = _inst(track_id=3)
        with pytest.raises(ValueError, match="immutable"):
            inst.with_id(4)

    def test_id_settable_once(self):
        inst = _inst()
        assert inst.with_id(5).track_id == 5

    def test_confidence_bounds(self):
        with pytest.raises(ValueError):
            _inst(conf=1.5)
