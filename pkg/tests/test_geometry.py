"""
Geometry: ray casting, kinematics, collision and target polar coordinates.
Brute-force oracles live here, independent from utils.geometry.
"""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from tests.conftest import make_world
from utils.errors import ConfigError, ContractViolation
from utils.geometry import (
    Circle, Pose, Rect, Segment, Vec2, World, bearing_to_target, cast_rays, collision,
    normalize_angle, obstacle_distance, polar_to_target, ray_cast, segments_intersect,
    step_kinematics,
)


def _cmd(v, w):
    # step_kinematics only reads linear/angular, so speeds above the robot limits are fine here
    return SimpleNamespace(linear=v, angular=w)


# =============================================================================
# Types
# =============================================================================


class TestTypes:

    def test_pose_yaw_is_normalized(self):
        assert Pose.at(0, 0, 3 * math.pi).yaw == pytest.approx(math.pi)
        assert Pose.at(0, 0, -math.pi).yaw == pytest.approx(math.pi)

    def test_normalize_angle_range(self):
        for a in np.linspace(-20, 20, 401):
            w = normalize_angle(a)
            assert -math.pi < w <= math.pi
            assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)

    def test_vec2_rejects_non_finite(self):
        with pytest.raises(ContractViolation):
            Vec2(float('nan'), 0.0)

    def test_degenerate_shapes_rejected(self):
        with pytest.raises(ConfigError):
            Segment(Vec2(1, 1), Vec2(1, 1))
        with pytest.raises(ConfigError):
            Circle(Vec2(0, 0), 0.0)
        with pytest.raises(ConfigError):
            Rect(0, 0, 0, 1)


# =============================================================================
# Ray casting
# =============================================================================


def _march_oracle(origin: Vec2, direction: Vec2, segments, circles, max_range, step=1e-4) -> float:
    """First sample where the ray crosses a segment or enters a circle."""
    ts = np.arange(0.0, max_range + step, step)
    px = origin.x + ts * direction.x
    py = origin.y + ts * direction.y
    first = len(ts)
    for (a, b) in segments:
        ex, ey = b.x - a.x, b.y - a.y
        side = np.sign(ex * (py - a.y) - ey * (px - a.x))
        u = ((px - a.x) * ex + (py - a.y) * ey) / (ex * ex + ey * ey)
        crossing = (side[:-1] * side[1:] <= 0) & (u[1:] >= 0) & (u[1:] <= 1)
        idx = np.flatnonzero(crossing)
        if len(idx):
            first = min(first, idx[0] + 1)
    for (c, r) in circles:
        inside = np.flatnonzero(np.hypot(px - c.x, py - c.y) <= r)
        if len(inside):
            first = min(first, inside[0])
    return max_range if first >= len(ts) else min(float(ts[first]), max_range)


class TestRayCast:

    def test_no_hit_within_range(self, box_world):
        assert ray_cast(Vec2(0, 0), Vec2(1, 0), box_world, 3.5) == 3.5

    def test_circle_hit(self, circle_world):
        assert ray_cast(Vec2(0, 0), Vec2(1, 0), circle_world, 3.5) == pytest.approx(1.5)

    def test_wall_hit(self, box_world):
        assert ray_cast(Vec2(3, 0), Vec2(1, 0), box_world, 3.5) == pytest.approx(2.0)

    def test_origin_inside_circle_is_zero(self, circle_world):
        assert ray_cast(Vec2(2.1, 0), Vec2(0, 1), circle_world, 3.5) == 0.0

    def test_tangent_ray_touches_circle(self):
        world = make_world(Circle(Vec2(2.0, 0.5), 0.5), target=Vec2(-2, -2))
        assert ray_cast(Vec2(0, 0), Vec2(1, 0), world, 3.5) == pytest.approx(2.0)

    def test_parallel_ray_misses_segment(self):
        world = make_world(Segment(Vec2(1, 0.5), Vec2(3, 0.5)), target=Vec2(-2, -2))
        assert ray_cast(Vec2(0, 0), Vec2(1, 0), world, 3.5) == 3.5

    def test_rejects_non_unit_direction(self, box_world):
        with pytest.raises(ContractViolation):
            ray_cast(Vec2(0, 0), Vec2(2, 0), box_world, 3.5)

    def test_rejects_bad_range(self, box_world):
        with pytest.raises(ContractViolation):
            ray_cast(Vec2(0, 0), Vec2(1, 0), box_world, 0.0)

    def test_batch_matches_single_rays(self, box_world):
        angles = np.linspace(-math.pi, math.pi, 37)
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        batch = cast_rays(Vec2(1.0, -2.0), dirs, box_world, 3.5)
        for k, (dx, dy) in enumerate(dirs):
            assert batch[k] == ray_cast(Vec2(1.0, -2.0), Vec2(dx, dy), box_world, 3.5)

    def test_random_scenes_agree_with_marching_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            segments = []
            while len(segments) < 3:
                a = Vec2(*rng.uniform(-4, 4, 2))
                b = Vec2(*rng.uniform(-4, 4, 2))
                if a.distance(b) > 0.2:
                    segments.append((a, b))
            circles = [(Vec2(*rng.uniform(-4, 4, 2)), float(rng.uniform(0.2, 1.0))) for _ in range(2)]
            origin = Vec2(*rng.uniform(-3, 3, 2))
            if any(origin.distance(c) <= r + 1e-2 for c, r in circles):
                continue
            angle = rng.uniform(-math.pi, math.pi)
            direction = Vec2(math.cos(angle), math.sin(angle))
            world = make_world(*[Segment(a, b) for a, b in segments],
                               *[Circle(c, r) for c, r in circles], target=Vec2(4.9, 4.9), clearance=0.0)

            expected = _march_oracle(origin, direction, segments, circles, 3.5)
            assert ray_cast(origin, direction, world, 3.5) == pytest.approx(expected, abs=1e-3)


def _random_scene(rng, offset=Vec2(0.0, 0.0), mirror=False):
    """Three walls and two circles, optionally mirrored across the x axis and then shifted."""
    def place(x, y):
        return Vec2(x, -y if mirror else y) + offset

    walls = [Segment(place(*rng.uniform(-4, 4, 2)), place(*rng.uniform(-4, 4, 2))) for _ in range(3)]
    circles = [Circle(place(*rng.uniform(-4, 4, 2)), float(rng.uniform(0.2, 1.0))) for _ in range(2)]
    bounds = Rect(offset.x - 5.0, offset.y - 5.0, offset.x + 5.0, offset.y + 5.0)
    return World(tuple(walls + circles), bounds, offset, Pose(offset, 0.0), bounds, 0.0)


class TestRayCastInvariants:

    def test_range_only_caps(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            world = _random_scene(rng)
            origin = Vec2(*rng.uniform(-3, 3, 2))
            angle = rng.uniform(-math.pi, math.pi)
            direction = Vec2(math.cos(angle), math.sin(angle))
            far = ray_cast(origin, direction, world, 50.0)
            ranges = [ray_cast(origin, direction, world, r) for r in (0.5, 1.0, 2.0, 3.5, 8.0)]
            assert ranges == [min(far, r) for r in (0.5, 1.0, 2.0, 3.5, 8.0)]
            assert ranges == sorted(ranges)

    def test_mirror_symmetry(self):
        for seed in range(300):
            world = _random_scene(np.random.default_rng(seed))
            mirrored = _random_scene(np.random.default_rng(seed), mirror=True)
            rng = np.random.default_rng(1000 + seed)
            x, y = rng.uniform(-3, 3, 2)
            angle = rng.uniform(-math.pi, math.pi)
            d = ray_cast(Vec2(x, y), Vec2(math.cos(angle), math.sin(angle)), world, 3.5)
            m = ray_cast(Vec2(x, -y), Vec2(math.cos(angle), -math.sin(angle)), mirrored, 3.5)
            assert m == pytest.approx(d, abs=1e-12)

    def test_translation_invariance(self):
        shift = Vec2(7.0, -3.0)
        for seed in range(300):
            world = _random_scene(np.random.default_rng(seed))
            moved = _random_scene(np.random.default_rng(seed), offset=shift)
            rng = np.random.default_rng(2000 + seed)
            origin = Vec2(*rng.uniform(-3, 3, 2))
            angle = rng.uniform(-math.pi, math.pi)
            direction = Vec2(math.cos(angle), math.sin(angle))
            d = ray_cast(origin, direction, world, 3.5)
            assert ray_cast(origin + shift, direction, moved, 3.5) == pytest.approx(d, abs=1e-9)


# =============================================================================
# Kinematics
# =============================================================================


class TestStepKinematics:

    def test_straight_line(self):
        p = step_kinematics(Pose.at(0, 0, 0), _cmd(1.0, 0.0), 0.1)
        assert (p.x, p.y, p.yaw) == pytest.approx((0.1, 0.0, 0.0))

    def test_pure_rotation(self):
        p = step_kinematics(Pose.at(0, 0, 0), _cmd(0.0, 1.0), math.pi)
        assert (p.x, p.y) == pytest.approx((0.0, 0.0))
        assert p.yaw == pytest.approx(math.pi)

    def test_quarter_circle(self):
        p = step_kinematics(Pose.at(0, 0, 0), _cmd(1.0, 1.0), math.pi / 2)
        assert (p.x, p.y, p.yaw) == pytest.approx((1.0, 1.0, math.pi / 2))

    @pytest.mark.parametrize('w', [1e-8, -1e-8])
    def test_continuous_at_zero_omega(self, w):
        start = Pose.at(0.3, -0.7, 0.4)
        arc = step_kinematics(start, _cmd(0.25, w), 0.1)
        line = step_kinematics(start, _cmd(0.25, 0.0), 0.1)
        assert arc.position.distance(line.position) < 1e-6

    def test_rejects_non_positive_dt(self):
        with pytest.raises(ContractViolation):
            step_kinematics(Pose.at(0, 0), _cmd(0.1, 0.0), 0.0)


# =============================================================================
# Collision
# =============================================================================


def _closest_distance_oracle(p, world) -> float:
    best = math.inf
    for o in world.obstacles:
        if isinstance(o, Circle):
            best = min(best, math.hypot(p[0] - o.center.x, p[1] - o.center.y) - o.radius)
            continue
        a = np.array([o.a.x, o.a.y])
        b = np.array([o.b.x, o.b.y])
        t = np.clip(np.dot(p - a, b - a) / np.dot(b - a, b - a), 0, 1)
        best = min(best, float(np.linalg.norm(p - (a + t * (b - a)))))
    return best


class TestCollision:

    def test_center_of_box_is_free(self, box_world):
        assert not collision(Pose.at(0, 0), 0.105, box_world)

    def test_near_wall_collides(self, box_world):
        assert collision(Pose.at(4.95, 0), 0.105, box_world)

    def test_outside_bounds_collides(self, empty_world):
        assert collision(Pose.at(4.95, 0), 0.105, empty_world)
        assert not collision(Pose.at(4.8, 0), 0.105, empty_world)

    def test_random_poses_agree_with_distance_oracle(self):
        world = make_world(
            Segment(Vec2(-3, 1.5), Vec2(-0.5, 1.5)), Circle(Vec2(2.5, 2.0), 0.6),
            Segment(Vec2(-1.2, -0.8), Vec2(-1.2, -3.5)), target=Vec2(3, -3),
        )
        rng = np.random.default_rng(11)
        checked = 0
        for p in rng.uniform(-4.5, 4.5, size=(1000, 2)):
            d = _closest_distance_oracle(p, world)
            if abs(d - 0.105) < 1e-9:
                continue
            assert collision(Pose.at(*p), 0.105, world) == (d < 0.105)
            checked += 1
        assert checked > 990

    def test_mirror_symmetry(self):
        checked = 0
        for seed in range(200):
            world = _random_scene(np.random.default_rng(seed))
            mirrored = _random_scene(np.random.default_rng(seed), mirror=True)
            x, y = np.random.default_rng(3000 + seed).uniform(-4.8, 4.8, 2)
            if abs(_closest_distance_oracle(np.array([x, y]), world) - 0.105) < 1e-9:
                continue
            assert collision(Pose.at(x, y, 0.3), 0.105, world) == collision(Pose.at(x, -y, -0.3), 0.105, mirrored)
            checked += 1
        assert checked > 190


# =============================================================================
# Target geometry
# =============================================================================


class TestPolarToTarget:

    def test_straight_ahead(self):
        assert polar_to_target(Pose.at(0, 0, 0), Vec2(1, 0)) == pytest.approx((1.0, 0.0))

    def test_left(self):
        assert polar_to_target(Pose.at(0, 0, 0), Vec2(0, 2)) == pytest.approx((2.0, math.pi / 2))

    def test_behind_is_plus_pi(self):
        d, dev = polar_to_target(Pose.at(0, 0, math.pi), Vec2(1, 0))
        assert d == pytest.approx(1.0)
        assert dev == pytest.approx(math.pi)

    def test_coincident_target(self):
        assert polar_to_target(Pose.at(1, 1, 0.5), Vec2(1, 1)) == (0.0, 0.0)
        assert bearing_to_target(Pose.at(1, 1, 0.5), Vec2(1, 1)) == 0.0

    def test_bearing_ignores_yaw(self):
        assert bearing_to_target(Pose.at(0, 0, 2.0), Vec2(0, 2)) == pytest.approx(math.pi / 2)

    def test_translation_invariance(self):
        rng = np.random.default_rng(19)
        for _ in range(10_000):
            x, y, tx, ty = rng.uniform(-5, 5, 4)
            yaw = rng.uniform(-math.pi, math.pi)
            shift = Vec2(*rng.uniform(-20, 20, 2))
            d, dev = polar_to_target(Pose.at(x, y, yaw), Vec2(tx, ty))
            d2, dev2 = polar_to_target(Pose.at(x + shift.x, y + shift.y, yaw), Vec2(tx, ty) + shift)
            assert d2 == pytest.approx(d, abs=1e-9)
            assert abs(normalize_angle(dev2 - dev)) < 1e-6


class TestObstacleDistance:

    def test_crossing_segments(self):
        a = Segment(Vec2(-1, 0), Vec2(1, 0))
        b = Segment(Vec2(0, -1), Vec2(0, 1))
        assert segments_intersect(a.a, a.b, b.a, b.b)
        assert obstacle_distance(a, b) == 0.0

    def test_parallel_segments(self):
        a = Segment(Vec2(0, 0), Vec2(2, 0))
        b = Segment(Vec2(0, 1), Vec2(2, 1))
        assert obstacle_distance(a, b) == pytest.approx(1.0)

    def test_segment_circle(self):
        a = Segment(Vec2(0, 0), Vec2(2, 0))
        c = Circle(Vec2(1, 2), 0.5)
        assert obstacle_distance(a, c) == pytest.approx(1.5)
        assert obstacle_distance(c, a) == pytest.approx(1.5)

    def test_circles(self):
        assert obstacle_distance(Circle(Vec2(0, 0), 1), Circle(Vec2(3, 0), 1)) == pytest.approx(1.0)
