"""
navlab - Environment
The episodic navigation environment: scan, observe, act, terminate, respawn.

GO IN → MOVE → SCAN → SCORE → GET OUT

One instance is single-threaded. Run several instances for parallel rollouts,
never share one between threads.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from utils.errors import ConfigError, ContractViolation
from utils.geometry import (
    DEFAULT_ROBOT_RADIUS, Pose, Vec2, World,
    bearing_to_target, cast_rays, collision, point_obstacle_distance,
    polar_to_target, step_kinematics,
)
from utils.rewards import (
    BASIC, REWARD_KINDS, RewardConfig, TransitionFacts,
    evaluate_reward, heading_score, reward_branch,
)
from utils.seeding import make_rng

# ===================
# CONFIG
# ===================

MAX_LINEAR = 0.25      # m/s
MAX_ANGULAR = 1.0      # rad/s
N_BEAMS = 30
N_SECTORS = 10
SCAN_FOV = math.pi     # -90..+90 degrees around the heading
OBS_DIM = 16
SPAWN_ATTEMPTS = 10_000


class Event(str, Enum):
    NONE = 'none'
    ARRIVED = 'arrived'
    COLLIDED = 'collided'
    TIMEOUT = 'timeout'


# ===================
# TYPES
# ===================

@dataclass(frozen=True)
class TwistCommand:
    linear: float = 0.0
    angular: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.linear <= MAX_LINEAR:
            raise ContractViolation(f'linear velocity {self.linear} outside [0, {MAX_LINEAR}]')
        if not -MAX_ANGULAR <= self.angular <= MAX_ANGULAR:
            raise ContractViolation(f'angular velocity {self.angular} outside [-{MAX_ANGULAR}, {MAX_ANGULAR}]')

    @classmethod
    def from_action(cls, a_lin: float, a_ang: float) -> 'TwistCommand':
        """Scale a normalized action (a_lin in [0,1], a_ang in [-1,1]) to velocities."""
        if not (0.0 <= a_lin <= 1.0 and -1.0 <= a_ang <= 1.0):
            raise ContractViolation(f'Action ({a_lin}, {a_ang}) outside [0,1] x [-1,1]')
        return cls(float(a_lin) * MAX_LINEAR, float(a_ang) * MAX_ANGULAR)

    @property
    def normalized(self) -> tuple:
        return self.linear / MAX_LINEAR, self.angular / MAX_ANGULAR


@dataclass(frozen=True)
class LidarScan:
    ranges: np.ndarray

    def __post_init__(self):
        ranges = np.asarray(self.ranges, dtype=np.float64)
        if ranges.shape != (N_BEAMS,):
            raise ContractViolation(f'LidarScan needs {N_BEAMS} beams, got shape {ranges.shape}')
        object.__setattr__(self, 'ranges', ranges)

    @staticmethod
    def beam_angles() -> np.ndarray:
        """Beam offsets relative to the heading, uniformly over [-90, +90] degrees."""
        return np.linspace(-SCAN_FOV / 2.0, SCAN_FOV / 2.0, N_BEAMS)


@dataclass(frozen=True)
class Observation:
    pooled_ranges: np.ndarray
    prev_linear: float
    prev_angular: float
    target_distance: float
    target_bearing: float
    yaw: float
    heading_deviation: float

    def to_vector(self) -> np.ndarray:
        """The 16 components in fixed order."""
        return np.concatenate([
            self.pooled_ranges,
            [self.prev_linear, self.prev_angular, self.target_distance,
             self.target_bearing, self.yaw, self.heading_deviation],
        ]).astype(np.float64)


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    reward: float
    done: bool
    event: Event
    arrived: bool = False
    target: Optional[Vec2] = None


@dataclass(frozen=True)
class EnvConfig:
    world: World
    dt: float = 0.1
    max_steps: int = 500
    max_range: float = 3.5
    c_d: float = 0.3
    c_o: float = 0.15
    robot_radius: float = DEFAULT_ROBOT_RADIUS
    reward: str = BASIC
    r_arrive: float = 100.0
    r_collision: float = -100.0
    c_r: float = 10.0
    c_p: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ConfigError(f'max_steps must be > 0, got {self.max_steps}')
        if not (self.dt > 0 and self.max_range > 0 and self.robot_radius > 0):
            raise ConfigError('dt, max_range and robot_radius must be positive')
        if self.reward not in REWARD_KINDS:
            raise ConfigError(f'Unknown reward kind: {self.reward} (expected one of {REWARD_KINDS})')

    def reward_config(self) -> RewardConfig:
        return RewardConfig(
            r_arrive=self.r_arrive, r_collision=self.r_collision,
            c_r=self.c_r, c_p=self.c_p, c_d=self.c_d, c_o=self.c_o,
        )


# ===================
# SCAN + OBSERVATION
# ===================

def cast_scan(pose: Pose, world: World, max_range: float) -> LidarScan:
    angles = pose.yaw + LidarScan.beam_angles()
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return LidarScan(cast_rays(pose.position, directions, world, max_range))


def min_pool(scan: LidarScan) -> np.ndarray:
    """Nearest obstacle per 3-beam sector, in angular order."""
    return scan.ranges.reshape(N_SECTORS, N_BEAMS // N_SECTORS).min(axis=1)


def normalize_ranges(pooled: np.ndarray, max_range: float) -> np.ndarray:
    return np.asarray(pooled, dtype=np.float64) / max_range


def build_observation(pose: Pose, scan: LidarScan, prev_cmd: TwistCommand, target: Vec2,
                      max_range: float = 3.5, diagonal: float = 10.0 * math.sqrt(2.0)) -> Observation:
    distance, deviation = polar_to_target(pose, target)
    prev_linear, prev_angular = prev_cmd.normalized
    return Observation(
        pooled_ranges=normalize_ranges(min_pool(scan), max_range),
        prev_linear=prev_linear,
        prev_angular=prev_angular,
        target_distance=min(distance / diagonal, 1.0),
        target_bearing=bearing_to_target(pose, target) / math.pi,
        yaw=pose.yaw / math.pi,
        heading_deviation=deviation / math.pi,
    )


# ===================
# ENVIRONMENT
# ===================

class NavigationEnv:
    """
    Reset places the robot at the world spawn and samples a target. Reaching
    the target respawns it and the episode keeps going; only a collision or
    the step limit ends an episode.
    """

    def __init__(self, config: EnvConfig):
        self.config = config
        self.world = config.world
        self.reward_cfg = config.reward_config()
        self.rng = make_rng(config.seed)
        self.pose: Optional[Pose] = None
        self.target: Optional[Vec2] = None
        self.prev_cmd = TwistCommand()
        self.steps = 0
        self.arrivals = 0
        self.done = True
        self._ready = False

    # -------------------
    # helpers
    # -------------------

    def _sample_target(self) -> Vec2:
        world = self.world
        region = world.target_spawn_region
        for _ in range(SPAWN_ATTEMPTS):
            candidate = region.sample(self.rng)
            if candidate.distance(self.pose.position) < self.config.c_d:
                continue
            if all(point_obstacle_distance(candidate, o) >= world.min_target_clearance
                   for o in world.obstacles):
                return candidate
        raise ConfigError(
            f'Could not place a target in {region} after {SPAWN_ATTEMPTS} attempts '
            f'(clearance {world.min_target_clearance} m)'
        )

    def _observe(self, scan: LidarScan) -> Observation:
        return build_observation(
            self.pose, scan, self.prev_cmd, self.target,
            max_range=self.config.max_range, diagonal=self.world.bounds.diagonal,
        )

    def scan(self) -> LidarScan:
        return cast_scan(self.pose, self.world, self.config.max_range)

    # -------------------
    # API
    # -------------------

    def reset(self, seed: Optional[int] = None) -> Observation:
        if seed is not None:
            self.rng = make_rng(seed)
        self.pose = self.world.robot_spawn
        self.prev_cmd = TwistCommand()
        self.steps = 0
        self.arrivals = 0
        self.target = self._sample_target()
        self.done = False
        self._ready = True
        return self._observe(self.scan())

    def place(self, pose: Optional[Pose] = None, target: Optional[Vec2] = None) -> Observation:
        """Teleport the robot and/or the target inside a running episode."""
        if not self._ready:
            raise ContractViolation('place() before reset()')
        if pose is not None:
            self.pose = pose
        if target is not None:
            self.target = target
        return self._observe(self.scan())

    def step(self, action) -> StepResult:
        if not self._ready:
            raise ContractViolation('step() before reset()')
        if self.done:
            raise ContractViolation('step() after the episode ended; call reset()')

        a_lin, a_ang = float(action[0]), float(action[1])
        cmd = TwistCommand.from_action(a_lin, a_ang)
        cfg = self.config

        d_prev, _ = polar_to_target(self.pose, self.target)
        self.pose = step_kinematics(self.pose, cmd, cfg.dt)
        self.prev_cmd = cmd
        self.steps += 1

        scan = self.scan()
        d_curr, deviation = polar_to_target(self.pose, self.target)
        facts = TransitionFacts(
            d_prev=d_prev, d_curr=d_curr,
            min_range=float(scan.ranges.min()), hd=heading_score(deviation),
        )
        reward = evaluate_reward(cfg.reward, facts, self.reward_cfg)
        branch = reward_branch(facts, self.reward_cfg)

        arrived = branch == 'arrive'
        collided = facts.min_range < cfg.c_o or collision(self.pose, cfg.robot_radius, self.world)
        if collided and branch == 'shaping':
            # disc contact outside the scanned half-plane
            reward = self.reward_cfg.r_collision

        if arrived:
            self.arrivals += 1
            self.target = self._sample_target()

        if collided:
            event = Event.COLLIDED
        elif self.steps >= cfg.max_steps:
            event = Event.TIMEOUT
        elif arrived:
            event = Event.ARRIVED
        else:
            event = Event.NONE
        self.done = event in (Event.COLLIDED, Event.TIMEOUT)

        return StepResult(
            observation=self._observe(scan),
            reward=float(reward),
            done=self.done,
            event=event,
            arrived=arrived,
            target=self.target,
        )
