"""
navlab - Rewards
The basic and advanced navigation rewards as pure functions of one transition.

Branch order for both: arrive, then collision, then shaping.
"""

import math
from dataclasses import dataclass

from utils.errors import ConfigError, ContractViolation

# ===================
# CONFIG
# ===================

MAX_EXPONENT = 10.0   # caps 2 ** (d_prev / d_curr)

BASIC = 'basic'
ADVANCED = 'advanced'
REWARD_KINDS = (BASIC, ADVANCED)


@dataclass(frozen=True)
class RewardConfig:
    r_arrive: float = 100.0
    r_collision: float = -100.0
    c_r: float = 10.0
    c_p: float = 1.0
    c_d: float = 0.3
    c_o: float = 0.15

    def __post_init__(self):
        if not self.r_arrive > 0 > self.r_collision:
            raise ConfigError(f'Need r_arrive > 0 > r_collision, got {self.r_arrive}, {self.r_collision}')
        if not self.c_r > 0:
            raise ConfigError(f'c_r must be positive, got {self.c_r}')
        if self.c_p < 0:
            raise ConfigError(f'c_p must be >= 0, got {self.c_p}')
        if not (self.c_d > 0 and self.c_o > 0):
            raise ConfigError('c_d and c_o must be positive')


@dataclass(frozen=True)
class TransitionFacts:
    d_prev: float
    d_curr: float
    min_range: float
    hd: float = 1.0

    def __post_init__(self):
        if self.d_prev < 0 or self.d_curr < 0:
            raise ContractViolation(f'Distances must be >= 0, got {self.d_prev}, {self.d_curr}')
        if not 0.0 <= self.hd <= 1.0:
            raise ContractViolation(f'hd must be in [0, 1], got {self.hd}')


# ===================
# HELPERS
# ===================

def heading_score(heading_deviation: float) -> float:
    """1 when facing the target, 0 when facing directly away."""
    return 1.0 - abs(heading_deviation) / math.pi


def reward_branch(facts: TransitionFacts, cfg: RewardConfig) -> str:
    if facts.d_curr < cfg.c_d:
        return 'arrive'
    if facts.min_range < cfg.c_o:
        return 'collision'
    return 'shaping'


# ===================
# REWARDS
# ===================

def reward_basic(facts: TransitionFacts, cfg: RewardConfig) -> float:
    branch = reward_branch(facts, cfg)
    if branch == 'arrive':
        return cfg.r_arrive
    if branch == 'collision':
        return cfg.r_collision
    return cfg.c_r * (facts.d_prev - facts.d_curr)


def reward_advanced(facts: TransitionFacts, cfg: RewardConfig) -> float:
    branch = reward_branch(facts, cfg)
    if branch == 'arrive':
        return cfg.r_arrive
    if branch == 'collision':
        return cfg.r_collision
    # d_curr >= c_d > 0 here, so the ratio is defined
    exponent = min(facts.d_prev / facts.d_curr, MAX_EXPONENT)
    return cfg.c_r * (facts.d_prev - facts.d_curr) * 2.0 ** exponent - cfg.c_p * (1.0 - facts.hd)


def evaluate_reward(kind: str, facts: TransitionFacts, cfg: RewardConfig) -> float:
    if kind == BASIC:
        return reward_basic(facts, cfg)
    if kind == ADVANCED:
        return reward_advanced(facts, cfg)
    raise ConfigError(f'Unknown reward kind: {kind} (expected one of {REWARD_KINDS})')
