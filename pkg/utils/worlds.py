"""
navlab - Worlds
World file parsing, bundled arenas, random arenas and the `world check` audit.

File format (one directive per line, '#' starts a comment):
    BOUNDS xmin ymin xmax ymax
    WALL x1 y1 x2 y2
    CIRCLE cx cy r
    SPAWN x y yaw
    TARGET_REGION xmin ymin xmax ymax
    TARGET x y            (optional, default region center)
    CLEARANCE c           (optional, default 0.5)
"""

import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from utils.errors import ConfigError, NavlabError
from utils.geometry import (
    DEFAULT_ROBOT_RADIUS, Circle, Pose, Rect, Segment, Vec2, World,
    obstacle_distance, point_obstacle_distance, target_clearance,
)
from utils.seeding import make_rng

# ===================
# CONFIG
# ===================

DATA_DIR = Path(os.environ.get('NAVLAB_DATA_DIR', Path(__file__).resolve().parent.parent / 'data'))

DEFAULT_CLEARANCE = 0.5
GRID_CELL = 0.25
MUTUAL_CLEARANCE = 0.5
SPAWN_CLEARANCE = 1.0
ARENA_ATTEMPTS = 200
OBSTACLE_ATTEMPTS = 1000

_ARITY = {'BOUNDS': 4, 'WALL': 4, 'CIRCLE': 3, 'SPAWN': 3, 'TARGET_REGION': 4, 'TARGET': 2, 'CLEARANCE': 1}
_REQUIRED = ('BOUNDS', 'SPAWN', 'TARGET_REGION')


@dataclass(frozen=True)
class ArenaSpec:
    name: str
    content: str
    provenance: str


# ===================
# PARSE / SERIALIZE
# ===================

def parse_world_text(text: str, name: str = '') -> World:
    seen = {}
    obstacles = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        directive, *args = line.split()
        directive = directive.upper()
        if directive not in _ARITY:
            raise ConfigError(f'{name or "world"}:{lineno}: unknown directive {directive}')
        if len(args) != _ARITY[directive]:
            raise ConfigError(
                f'{name or "world"}:{lineno}: {directive} takes {_ARITY[directive]} numbers, got {len(args)}'
            )
        try:
            values = [float(a) for a in args]
        except ValueError:
            raise ConfigError(f'{name or "world"}:{lineno}: non-numeric argument in "{line}"')
        if not all(math.isfinite(v) for v in values):
            raise ConfigError(f'{name or "world"}:{lineno}: non-finite argument in "{line}"')

        if directive == 'WALL':
            obstacles.append(Segment(Vec2(values[0], values[1]), Vec2(values[2], values[3])))
        elif directive == 'CIRCLE':
            obstacles.append(Circle(Vec2(values[0], values[1]), values[2]))
        elif directive in seen:
            raise ConfigError(f'{name or "world"}:{lineno}: {directive} given twice')
        else:
            seen[directive] = values

    missing = [d for d in _REQUIRED if d not in seen]
    if missing:
        raise ConfigError(f'{name or "world"}: missing required directive(s) {", ".join(missing)}')

    region = Rect(*seen['TARGET_REGION'])
    target = Vec2(*seen['TARGET']) if 'TARGET' in seen else region.center
    sx, sy, syaw = seen['SPAWN']
    world = World(
        obstacles=tuple(obstacles),
        bounds=Rect(*seen['BOUNDS']),
        target=target,
        robot_spawn=Pose(Vec2(sx, sy), syaw),
        target_spawn_region=region,
        min_target_clearance=seen.get('CLEARANCE', [DEFAULT_CLEARANCE])[0],
        name=name,
    )
    return world.validate()


def parse_world(path) -> World:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f'Cannot read world file {path}: {e}')
    return parse_world_text(text, name=path.name)


def resolve_world_path(name_or_path) -> Path:
    """A path as given if it exists, else the same name under the data directory."""
    path = Path(name_or_path)
    if path.exists():
        return path
    bundled = DATA_DIR / path.name
    if bundled.exists():
        return bundled
    raise ConfigError(f'World file not found: {name_or_path}')


def load_world(name_or_path) -> World:
    """A world file, a file under the data directory, or a bundled arena by bare name."""
    if not Path(name_or_path).exists():
        arena = next((s for s in arena_specs() if s.name == str(name_or_path)), None)
        if arena is not None:
            return parse_world_text(arena.content, name=f'{arena.name}.world')
    return parse_world(resolve_world_path(name_or_path))


def _fmt(*values) -> str:
    return ' '.join(repr(float(v)) for v in values)


def serialize_world(world: World) -> str:
    b, r = world.bounds, world.target_spawn_region
    lines = [f'BOUNDS {_fmt(b.xmin, b.ymin, b.xmax, b.ymax)}']
    for o in world.obstacles:
        if isinstance(o, Segment):
            lines.append(f'WALL {_fmt(o.a.x, o.a.y, o.b.x, o.b.y)}')
        else:
            lines.append(f'CIRCLE {_fmt(o.center.x, o.center.y, o.radius)}')
    s = world.robot_spawn
    lines.append(f'SPAWN {_fmt(s.x, s.y, s.yaw)}')
    lines.append(f'TARGET_REGION {_fmt(r.xmin, r.ymin, r.xmax, r.ymax)}')
    lines.append(f'TARGET {_fmt(world.target.x, world.target.y)}')
    lines.append(f'CLEARANCE {_fmt(world.min_target_clearance)}')
    return '\n'.join(lines) + '\n'


# ===================
# ARENAS
# ===================

def _box_walls(bounds: Rect) -> list:
    corners = [
        Vec2(bounds.xmin, bounds.ymin), Vec2(bounds.xmax, bounds.ymin),
        Vec2(bounds.xmax, bounds.ymax), Vec2(bounds.xmin, bounds.ymax),
    ]
    return [Segment(corners[i], corners[(i + 1) % 4]) for i in range(4)]


ARENA_BOUNDS = Rect(-5.0, -5.0, 5.0, 5.0)
ARENA_REGION = Rect(-4.0, -4.0, 4.0, 4.0)


def simple_arena() -> World:
    """Empty 10 x 10 m walled box, spawn at the center."""
    return World(
        obstacles=tuple(_box_walls(ARENA_BOUNDS)),
        bounds=ARENA_BOUNDS,
        target=Vec2(2.0, 2.0),
        robot_spawn=Pose(Vec2(0.0, 0.0), 0.0),
        target_spawn_region=ARENA_REGION,
        min_target_clearance=DEFAULT_CLEARANCE,
        name='simple.world',
    ).validate()


# Coordinates are an approximation of an obstacle course, not a survey.
COMPLEX_OBSTACLES = (
    Segment(Vec2(-3.0, 1.5), Vec2(-0.5, 1.5)),
    Segment(Vec2(0.5, -1.5), Vec2(3.0, -1.5)),
    Circle(Vec2(2.5, 2.0), 0.6),
    Circle(Vec2(-2.8, -2.2), 0.6),
    Segment(Vec2(-1.2, -0.8), Vec2(-1.2, -3.5)),
)


def complex_arena() -> World:
    """The simple box plus five interior obstacles."""
    return World(
        obstacles=tuple(_box_walls(ARENA_BOUNDS)) + COMPLEX_OBSTACLES,
        bounds=ARENA_BOUNDS,
        target=Vec2(3.0, -3.0),
        robot_spawn=Pose(Vec2(0.0, 0.0), 0.0),
        target_spawn_region=ARENA_REGION,
        min_target_clearance=DEFAULT_CLEARANCE,
        name='complex.world',
    ).validate()


def arena_specs() -> list:
    return [
        ArenaSpec('simple', serialize_world(simple_arena()), 'obstacle-free 10 x 10 m arena'),
        ArenaSpec('complex', serialize_world(complex_arena()), 'obstacle arena, layout approximated'),
    ]


def _random_obstacle(rng: np.random.Generator, inner: Rect):
    if rng.random() < 0.5:
        r = float(rng.uniform(0.3, 0.7))
        return Circle(Vec2(float(rng.uniform(inner.xmin + r, inner.xmax - r)),
                           float(rng.uniform(inner.ymin + r, inner.ymax - r))), r)
    center = inner.sample(rng)
    half = float(rng.uniform(0.5, 1.25))
    angle = float(rng.uniform(0.0, math.pi))
    offset = Vec2(math.cos(angle), math.sin(angle)) * half
    return Segment(center - offset, center + offset)


def _inside(obstacle, rect: Rect) -> bool:
    if isinstance(obstacle, Circle):
        return rect.contains(obstacle.center, margin=obstacle.radius)
    return rect.contains(obstacle.a) and rect.contains(obstacle.b)


def random_arena(seed: int, n_obstacles: int) -> World:
    """
    Simple box plus n random circles/segments with 0.5 m mutual clearance and
    1 m clearance around the spawn. Arenas whose free space is split are
    rejected and redrawn.
    """
    if n_obstacles < 0:
        raise ConfigError(f'n_obstacles must be >= 0, got {n_obstacles}')
    rng = make_rng(seed)
    base = simple_arena()
    spawn = base.robot_spawn.position
    inner = Rect(ARENA_BOUNDS.xmin + MUTUAL_CLEARANCE, ARENA_BOUNDS.ymin + MUTUAL_CLEARANCE,
                 ARENA_BOUNDS.xmax - MUTUAL_CLEARANCE, ARENA_BOUNDS.ymax - MUTUAL_CLEARANCE)

    for _ in range(ARENA_ATTEMPTS):
        obstacles = list(base.obstacles)
        for _ in range(n_obstacles):
            for _ in range(OBSTACLE_ATTEMPTS):
                candidate = _random_obstacle(rng, inner)
                if not _inside(candidate, inner):
                    continue
                if point_obstacle_distance(spawn, candidate) < SPAWN_CLEARANCE:
                    continue
                if all(obstacle_distance(candidate, o) >= MUTUAL_CLEARANCE for o in obstacles):
                    obstacles.append(candidate)
                    break
            else:
                break
        if len(obstacles) != 4 + n_obstacles:
            continue

        world = World(tuple(obstacles), ARENA_BOUNDS, base.target, base.robot_spawn,
                      ARENA_REGION, DEFAULT_CLEARANCE, name=f'random-{seed}-{n_obstacles}.world')
        if target_clearance(world.target, world) < DEFAULT_CLEARANCE:
            world = world.with_target(_clear_point(world, rng))
        if is_connected(world):
            return world.validate()

    raise ConfigError(f'No connected arena with {n_obstacles} obstacles after {ARENA_ATTEMPTS} attempts')


def _clear_point(world: World, rng: np.random.Generator) -> Vec2:
    for _ in range(OBSTACLE_ATTEMPTS):
        p = world.target_spawn_region.sample(rng)
        if target_clearance(p, world) >= world.min_target_clearance:
            return p
    raise ConfigError('No clear target position in the target region')


# ===================
# CONNECTIVITY + CHECK
# ===================

def free_grid(world: World, robot_radius: float = DEFAULT_ROBOT_RADIUS, cell: float = GRID_CELL):
    """
    (xs, ys, free) where free[i, j] says the disc fits at (xs[j], ys[i]).
    Cells within half a cell of a wall are blocked too, so a thin wall never
    passes between two 4-neighbours that are both free.
    """
    b = world.bounds
    xs = np.arange(b.xmin + cell / 2.0, b.xmax, cell)
    ys = np.arange(b.ymin + cell / 2.0, b.ymax, cell)
    gx, gy = np.meshgrid(xs, ys)
    free = ((gx - robot_radius >= b.xmin) & (gx + robot_radius <= b.xmax)
            & (gy - robot_radius >= b.ymin) & (gy + robot_radius <= b.ymax))

    for s in world.segments:
        ax, ay, ex, ey = s[0], s[1], s[2] - s[0], s[3] - s[1]
        t = np.clip(((gx - ax) * ex + (gy - ay) * ey) / (ex * ex + ey * ey), 0.0, 1.0)
        dist = np.hypot(gx - (ax + t * ex), gy - (ay + t * ey))
        free &= (dist >= robot_radius) & (dist > cell / 2.0)
    for c in world.circles:
        free &= np.hypot(gx - c[0], gy - c[1]) - c[2] >= robot_radius
    return xs, ys, free


def reachable_mask(world: World, robot_radius: float = DEFAULT_ROBOT_RADIUS, cell: float = GRID_CELL):
    """Free cells 4-connected to the spawn cell."""
    xs, ys, free = free_grid(world, robot_radius, cell)
    labels, _ = ndimage.label(free)
    spawn = world.robot_spawn
    j = min(int((spawn.x - world.bounds.xmin) // cell), len(xs) - 1)
    i = min(int((spawn.y - world.bounds.ymin) // cell), len(ys) - 1)
    if not free[i, j]:
        return free, np.zeros_like(free)
    return free, labels == labels[i, j]


def is_connected(world: World, robot_radius: float = DEFAULT_ROBOT_RADIUS, cell: float = GRID_CELL) -> bool:
    free, reachable = reachable_mask(world, robot_radius, cell)
    return bool(reachable.any()) and bool(np.array_equal(free, reachable))


def check_world(world: World, robot_radius: float = DEFAULT_ROBOT_RADIUS) -> dict:
    """Parse-level validation plus connectivity, as a result dict."""
    errors = []
    try:
        world.validate()
    except NavlabError as e:
        errors.append(str(e))
    if not world.bounds.contains(world.robot_spawn.position, margin=robot_radius):
        errors.append('Spawn pose is outside the bounds')
    free, reachable = reachable_mask(world, robot_radius)
    connected = bool(reachable.any()) and bool(np.array_equal(free, reachable))
    if not connected:
        errors.append(f'{int(free.sum() - reachable.sum())} free cells unreachable from the spawn')

    return {
        'success': not errors,
        'name': world.name,
        'walls': sum(isinstance(o, Segment) for o in world.obstacles),
        'circles': sum(isinstance(o, Circle) for o in world.obstacles),
        'connected': connected,
        'free_cells': int(free.sum()),
        'reachable_cells': int(reachable.sum()),
        'errors': errors,
    }
