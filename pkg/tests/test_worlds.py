"""
World files, bundled arenas, random arenas and the connectivity check.
"""

import math

import numpy as np
import pytest

from tests.conftest import EMPTY_WORLD_TEXT, make_world
from utils.environment import EnvConfig, NavigationEnv
from utils.errors import ConfigError
from utils.geometry import Circle, Segment, Vec2, point_segment_distance, ray_cast, segments_intersect
from utils.worlds import (
    DATA_DIR, arena_specs, check_world, complex_arena, is_connected, load_world, parse_world,
    parse_world_text, random_arena, resolve_world_path, serialize_world, simple_arena,
)


class TestParse:

    def test_bounds_only_is_rejected(self):
        with pytest.raises(ConfigError):
            parse_world_text('BOUNDS -5 -5 5 5\n')

    def test_minimal_world(self, empty_world_file):
        world = parse_world(empty_world_file)
        assert world.obstacles == ()
        assert world.target == Vec2(0.0, 0.0)
        assert world.min_target_clearance == 0.5
        assert world.name == 'empty.world'

    def test_comments_and_case(self):
        world = parse_world_text('# arena\n' + EMPTY_WORLD_TEXT.lower() + 'circle 2 0 0.5   # post\n')
        assert world.obstacles == (Circle(Vec2(2.0, 0.0), 0.5),)

    @pytest.mark.parametrize('line', [
        'DOOR 1 2 3 4',
        'WALL 1 2 3',
        'CIRCLE 1 2',
        'CIRCLE 1 x 0.5',
        'CIRCLE 1 1 nan',
        'SPAWN 0 0 0',
    ])
    def test_bad_lines(self, line):
        with pytest.raises(ConfigError):
            parse_world_text(EMPTY_WORLD_TEXT + line + '\n')

    def test_obstacle_outside_bounds(self):
        with pytest.raises(ConfigError):
            parse_world_text(EMPTY_WORLD_TEXT + 'CIRCLE 4.9 0 0.5\n')

    def test_target_too_close(self):
        with pytest.raises(ConfigError):
            parse_world_text(EMPTY_WORLD_TEXT + 'TARGET 2 0.2\nCIRCLE 2 0 0.5\n')

    def test_round_trip(self):
        for world in (simple_arena(), complex_arena(), random_arena(3, 4)):
            assert parse_world_text(serialize_world(world)) == world

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_world(tmp_path / 'nowhere.world')


class TestBundledArenas:

    def test_simple_world_file(self):
        world = load_world('simple.world')
        assert sum(isinstance(o, Segment) for o in world.obstacles) == 4
        assert not any(isinstance(o, Circle) for o in world.obstacles)

    def test_files_match_constructors(self):
        assert load_world('simple.world') == simple_arena()
        assert load_world('complex.world') == complex_arena()

    def test_bare_name_resolves_to_data_dir(self):
        assert resolve_world_path('complex.world') == DATA_DIR / 'complex.world'

    def test_arena_specs(self):
        specs = {s.name: s for s in arena_specs()}
        assert set(specs) == {'simple', 'complex'}
        assert parse_world_text(specs['complex'].content) == complex_arena()

    @pytest.mark.parametrize('name', ['simple', 'complex'])
    def test_bare_arena_name(self, name):
        world = load_world(name)
        assert world == load_world(f'{name}.world')
        assert world.name == f'{name}.world'

    def test_unknown_bare_name(self):
        with pytest.raises(ConfigError):
            load_world('maze')


class TestRandomArena:

    def test_zero_obstacles_is_simple(self):
        assert random_arena(0, 0) == simple_arena()

    def test_same_seed_same_arena(self):
        assert random_arena(11, 5) == random_arena(11, 5)

    @pytest.mark.parametrize('seed', range(5))
    def test_connected_with_obstacle_count(self, seed):
        world = random_arena(seed, 6)
        assert len(world.obstacles) == 10
        assert is_connected(world)

    def test_negative_count(self):
        with pytest.raises(ConfigError):
            random_arena(0, -1)


class TestCheck:

    def test_bundled_worlds_pass(self):
        for world in (simple_arena(), complex_arena()):
            report = check_world(world)
            assert report['success'] and report['connected']
            assert report['reachable_cells'] == report['free_cells'] > 0

    def test_counts(self):
        report = check_world(complex_arena())
        assert (report['walls'], report['circles']) == (7, 2)

    def test_split_world_is_reported(self):
        wall = Segment(Vec2(1.0, -5.0), Vec2(1.0, 5.0))
        report = check_world(make_world(wall, target=Vec2(-2.0, -2.0)))
        assert not report['success']
        assert not report['connected']
        assert report['reachable_cells'] < report['free_cells']


# =============================================================================
# Audits
# =============================================================================


def _box_distance(x, y, angle, half=5.0):
    dx, dy = math.cos(angle), math.sin(angle)
    hits = []
    if abs(dx) > 1e-12:
        hits.append(((half if dx > 0 else -half) - x) / dx)
    if abs(dy) > 1e-12:
        hits.append(((half if dy > 0 else -half) - y) / dy)
    return min(hits)


def _line_blocked(start, end, world) -> bool:
    for o in world.obstacles:
        if isinstance(o, Segment) and segments_intersect(start, end, o.a, o.b):
            return True
        if isinstance(o, Circle) and point_segment_distance(o.center, start, end) < o.radius:
            return True
    return False


class TestAudits:

    def test_center_rays_hit_walls(self):
        world = simple_arena()
        for angle in np.linspace(-math.pi, math.pi, 73):
            d = ray_cast(Vec2(0.0, 0.0), Vec2(math.cos(angle), math.sin(angle)), world, 10.0)
            assert d <= 5.0 * math.sqrt(2.0) + 1e-9

    def test_simple_rays_closed_form(self):
        world = simple_arena()
        rng = np.random.default_rng(21)
        for _ in range(500):
            x, y = rng.uniform(-4.5, 4.5, 2)
            angle = rng.uniform(-math.pi, math.pi)
            d = ray_cast(Vec2(x, y), Vec2(math.cos(angle), math.sin(angle)), world, 20.0)
            assert d == pytest.approx(_box_distance(x, y, angle), abs=1e-9)

    def test_simple_targets_in_line_of_sight(self):
        world = simple_arena()
        env = NavigationEnv(EnvConfig(world=world))
        for seed in range(1000):
            env.reset(seed=seed)
            assert not _line_blocked(world.robot_spawn.position, env.target, world)

    def test_complex_needs_detours(self):
        world = complex_arena()
        env = NavigationEnv(EnvConfig(world=world))
        blocked = 0
        for seed in range(1000):
            env.reset(seed=seed)
            blocked += _line_blocked(world.robot_spawn.position, env.target, world)
        assert blocked >= 1

    def test_hundred_random_arenas_connected(self):
        for seed in range(100):
            world = random_arena(seed, seed % 7)
            assert check_world(world)['success'], seed
