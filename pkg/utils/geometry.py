"""
navlab - Geometry Utils
Poses, unicycle kinematics, ray casting and collision tests.

Everything here is a pure function over frozen dataclasses, so any number of
threads can share a World.
"""

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import TYPE_CHECKING, Union

import numpy as np

from utils.errors import ConfigError, ContractViolation

if TYPE_CHECKING:
    from utils.environment import TwistCommand

# ===================
# CONFIG
# ===================

OMEGA_EPS = 1e-9          # below this |omega| the arc update falls back to a straight line
PARALLEL_EPS = 1e-15      # ray/segment denominators below this count as parallel
DEFAULT_ROBOT_RADIUS = 0.105


def normalize_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


# ===================
# TYPES
# ===================

@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ContractViolation(f'Vec2 components must be finite, got ({self.x}, {self.y})')

    def __add__(self, other: 'Vec2') -> 'Vec2':
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: 'Vec2') -> 'Vec2':
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> 'Vec2':
        return Vec2(self.x * k, self.y * k)

    def dot(self, other: 'Vec2') -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def distance(self, other: 'Vec2') -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Pose:
    position: Vec2
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'yaw', normalize_angle(float(self.yaw)))

    @classmethod
    def at(cls, x: float, y: float, yaw: float = 0.0) -> 'Pose':
        return cls(Vec2(float(x), float(y)), yaw)

    @property
    def x(self) -> float:
        return self.position.x

    @property
    def y(self) -> float:
        return self.position.y


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ConfigError(f'Degenerate rectangle {self}')

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def center(self) -> Vec2:
        return Vec2((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)

    def contains(self, p: Vec2, margin: float = 0.0) -> bool:
        return (self.xmin + margin <= p.x <= self.xmax - margin
                and self.ymin + margin <= p.y <= self.ymax - margin)

    def sample(self, rng: np.random.Generator) -> Vec2:
        return Vec2(float(rng.uniform(self.xmin, self.xmax)), float(rng.uniform(self.ymin, self.ymax)))


@dataclass(frozen=True)
class Segment:
    a: Vec2
    b: Vec2

    def __post_init__(self):
        if self.a == self.b:
            raise ConfigError(f'Segment endpoints must differ, got {self.a}')


@dataclass(frozen=True)
class Circle:
    center: Vec2
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError(f'Circle radius must be positive, got {self.radius}')


Obstacle = Union[Segment, Circle]


@dataclass(frozen=True)
class World:
    obstacles: tuple
    bounds: Rect
    target: Vec2
    robot_spawn: Pose
    target_spawn_region: Rect
    min_target_clearance: float = 0.5
    name: str = field(default='', compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'obstacles', tuple(self.obstacles))

    @cached_property
    def segments(self) -> np.ndarray:
        """(m, 4) array of ax, ay, bx, by."""
        rows = [(o.a.x, o.a.y, o.b.x, o.b.y) for o in self.obstacles if isinstance(o, Segment)]
        return np.array(rows, dtype=np.float64).reshape(-1, 4)

    @cached_property
    def circles(self) -> np.ndarray:
        """(k, 3) array of cx, cy, r."""
        rows = [(o.center.x, o.center.y, o.radius) for o in self.obstacles if isinstance(o, Circle)]
        return np.array(rows, dtype=np.float64).reshape(-1, 3)

    def with_target(self, target: Vec2) -> 'World':
        return replace(self, target=target)

    def validate(self):
        """Raise ConfigError unless obstacles sit inside bounds and the target keeps its clearance."""
        for o in self.obstacles:
            if isinstance(o, Segment):
                inside = self.bounds.contains(o.a) and self.bounds.contains(o.b)
            else:
                inside = self.bounds.contains(o.center, margin=o.radius)
            if not inside:
                raise ConfigError(f'Obstacle outside bounds: {o}')
        clearance = target_clearance(self.target, self)
        if clearance < self.min_target_clearance:
            raise ConfigError(
                f'Target {self.target} only {clearance:.3f} m from an obstacle '
                f'(needs {self.min_target_clearance})'
            )
        return self


# ===================
# DISTANCES
# ===================

def point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> float:
    e = b - a
    t = (p - a).dot(e) / e.dot(e)
    t = min(1.0, max(0.0, t))
    return p.distance(a + e * t)


def point_obstacle_distance(p: Vec2, obstacle: Obstacle) -> float:
    """Signed for circles (negative inside), plain distance for segments."""
    if isinstance(obstacle, Segment):
        return point_segment_distance(p, obstacle.a, obstacle.b)
    return p.distance(obstacle.center) - obstacle.radius


def target_clearance(p: Vec2, world: World) -> float:
    if not world.obstacles:
        return math.inf
    return min(point_obstacle_distance(p, o) for o in world.obstacles)


def _cross(u: Vec2, v: Vec2) -> float:
    return u.x * v.y - u.y * v.x


def segments_intersect(a1: Vec2, a2: Vec2, b1: Vec2, b2: Vec2) -> bool:
    d1 = _cross(b2 - b1, a1 - b1)
    d2 = _cross(b2 - b1, a2 - b1)
    d3 = _cross(a2 - a1, b1 - a1)
    d4 = _cross(a2 - a1, b2 - a1)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    # touching or collinear overlap
    return (
        (d1 == 0 and point_segment_distance(a1, b1, b2) == 0)
        or (d2 == 0 and point_segment_distance(a2, b1, b2) == 0)
        or (d3 == 0 and point_segment_distance(b1, a1, a2) == 0)
        or (d4 == 0 and point_segment_distance(b2, a1, a2) == 0)
    )


def obstacle_distance(first: Obstacle, second: Obstacle) -> float:
    """Gap between two obstacles; 0 or negative when they touch or overlap."""
    if isinstance(first, Circle) and isinstance(second, Circle):
        return first.center.distance(second.center) - first.radius - second.radius
    if isinstance(first, Circle):
        first, second = second, first
    if isinstance(second, Circle):
        return point_segment_distance(second.center, first.a, first.b) - second.radius
    if segments_intersect(first.a, first.b, second.a, second.b):
        return 0.0
    return min(
        point_segment_distance(first.a, second.a, second.b),
        point_segment_distance(first.b, second.a, second.b),
        point_segment_distance(second.a, first.a, first.b),
        point_segment_distance(second.b, first.a, first.b),
    )


# ===================
# RAY CASTING
# ===================

def cast_rays(origin: Vec2, directions: np.ndarray, world: World, max_range: float) -> np.ndarray:
    """
    Closed-form ray casting for a batch of unit directions.

    directions is (k, 2). Returns (k,) ranges in (0, max_range], or 0 for a
    ray whose origin sits inside a circle or on a segment.
    """
    directions = np.asarray(directions, dtype=np.float64).reshape(-1, 2)
    best = np.full(directions.shape[0], float(max_range))
    dx = directions[:, 0:1]
    dy = directions[:, 1:2]

    segs = world.segments
    if len(segs):
        ax, ay = segs[:, 0], segs[:, 1]
        ex, ey = segs[:, 2] - ax, segs[:, 3] - ay
        wx, wy = ax - origin.x, ay - origin.y
        denom = dx * ey - dy * ex
        valid = np.abs(denom) > PARALLEL_EPS
        safe = np.where(valid, denom, 1.0)
        t = (wx * ey - wy * ex) / safe
        u = (wx * dy - wy * dx) / safe
        hit = valid & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
        t = np.where(hit, t, np.inf)
        best = np.minimum(best, t.min(axis=1))

    circs = world.circles
    if len(circs):
        ocx, ocy = origin.x - circs[:, 0], origin.y - circs[:, 1]
        cc = ocx * ocx + ocy * ocy - circs[:, 2] ** 2
        b = dx * ocx + dy * ocy
        disc = b * b - cc
        # nearer root; a tangent ray has disc == 0 and both roots coincide
        t = -b - np.sqrt(np.maximum(disc, 0.0))
        hit = (disc >= 0.0) & (t >= 0.0)
        t = np.where(hit, t, np.inf)
        t = np.where(cc <= 0.0, 0.0, t)
        best = np.minimum(best, t.min(axis=1))

    return best


def ray_cast(origin: Vec2, direction: Vec2, world: World, max_range: float) -> float:
    """Distance to the nearest obstacle along one ray, capped at max_range."""
    if not max_range > 0:
        raise ContractViolation(f'max_range must be positive, got {max_range}')
    if abs(direction.norm() - 1.0) > 1e-9:
        raise ContractViolation(f'Ray direction must be a unit vector, got {direction}')
    return float(cast_rays(origin, np.array([[direction.x, direction.y]]), world, max_range)[0])


# ===================
# MOTION
# ===================

def step_kinematics(pose: Pose, cmd: 'TwistCommand', dt: float) -> Pose:
    """Exact unicycle arc integration over dt."""
    if not dt > 0:
        raise ContractViolation(f'dt must be positive, got {dt}')
    v, w = cmd.linear, cmd.angular
    yaw = pose.yaw
    if abs(w) < OMEGA_EPS:
        x = pose.x + v * math.cos(yaw) * dt
        y = pose.y + v * math.sin(yaw) * dt
    else:
        x = pose.x + (v / w) * (math.sin(yaw + w * dt) - math.sin(yaw))
        y = pose.y + (v / w) * (math.cos(yaw) - math.cos(yaw + w * dt))
    return Pose(Vec2(x, y), yaw + w * dt)


def collision(pose: Pose, robot_radius: float, world: World) -> bool:
    """True iff the robot disc overlaps an obstacle or leaves the bounds."""
    if not robot_radius > 0:
        raise ContractViolation(f'robot_radius must be positive, got {robot_radius}')
    if not world.bounds.contains(pose.position, margin=robot_radius):
        return True

    px, py = pose.x, pose.y
    segs = world.segments
    if len(segs):
        ax, ay = segs[:, 0], segs[:, 1]
        ex, ey = segs[:, 2] - ax, segs[:, 3] - ay
        t = np.clip(((px - ax) * ex + (py - ay) * ey) / (ex * ex + ey * ey), 0.0, 1.0)
        dist = np.hypot(px - (ax + t * ex), py - (ay + t * ey))
        if np.any(dist < robot_radius):
            return True

    circs = world.circles
    if len(circs):
        dist = np.hypot(px - circs[:, 0], py - circs[:, 1]) - circs[:, 2]
        if np.any(dist < robot_radius):
            return True

    return False


def polar_to_target(pose: Pose, target: Vec2) -> tuple:
    """(distance, heading deviation) from the robot to the target."""
    dx = target.x - pose.x
    dy = target.y - pose.y
    distance = math.hypot(dx, dy)
    if distance == 0.0:
        return 0.0, 0.0
    return distance, normalize_angle(math.atan2(dy, dx) - pose.yaw)


def bearing_to_target(pose: Pose, target: Vec2) -> float:
    """World-frame angle of the robot→target vector; 0 when coincident."""
    dx = target.x - pose.x
    dy = target.y - pose.y
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return normalize_angle(math.atan2(dy, dx))
