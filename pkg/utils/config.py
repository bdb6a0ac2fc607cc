"""
navlab - Config
Env var defaults, the `key = value` config file, and the resolved RunConfig.

Precedence: built-in defaults < config file < CLI flags / request fields.
"""

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from utils.algos import DDPGConfig, PPOConfig
from utils.environment import EnvConfig
from utils.errors import ConfigError
from utils.geometry import World
from utils.nn import NetConfig
from utils.rewards import REWARD_KINDS

# ===================
# CONFIG
# ===================

OUTPUT_ROOT = os.environ.get('NAVLAB_OUTPUT_ROOT', 'runs')
QUIET = os.environ.get('NAVLAB_QUIET', '').lower() in ('1', 'true', 'yes')

ALGOS = ('ppo_res', 'ppo_mlp', 'ddpg')
CHECKPOINT_EVERY = 25
STEP_BUDGET = 50_000

# env.* keys feed EnvConfig directly; reward.* keys are EnvConfig reward fields
ENV_KEYS = ('dt', 'max_steps', 'max_range', 'robot_radius')
REWARD_KEYS = ('r_arrive', 'r_collision', 'c_r', 'c_p', 'c_d', 'c_o')


@dataclass(frozen=True)
class RunConfig:
    algo: str = 'ppo_res'
    world: str = 'simple.world'
    reward: str = 'basic'
    seed: int = 0
    episodes: int = 300
    out: str = ''
    checkpoint_every: int = CHECKPOINT_EVERY
    deterministic: bool = True
    workers: int = 1
    step_budget: int = STEP_BUDGET
    env: dict = field(default_factory=dict)
    ppo: PPOConfig = PPOConfig()
    ddpg: DDPGConfig = DDPGConfig()
    nn: NetConfig = NetConfig()

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ConfigError(f'Unknown algo: {self.algo} (expected one of {ALGOS})')
        if self.reward not in REWARD_KINDS:
            raise ConfigError(f'Unknown reward: {self.reward} (expected one of {REWARD_KINDS})')
        if self.episodes < 1:
            raise ConfigError(f'episodes must be >= 1, got {self.episodes}')
        if self.checkpoint_every < 1 or self.workers < 1 or self.step_budget < 1:
            raise ConfigError('run.checkpoint_every, run.workers and run.step_budget must be >= 1')
        if self.workers > 1 and self.deterministic:
            raise ConfigError('run.workers > 1 requires run.deterministic = false')

    @property
    def out_dir(self) -> Path:
        if self.out:
            return Path(self.out)
        return Path(OUTPUT_ROOT) / f'{self.algo}-{Path(self.world).stem}-{self.reward}-s{self.seed}'

    def make_env_config(self, world: World) -> EnvConfig:
        return EnvConfig(world=world, reward=self.reward, seed=self.seed, **self.env)

    def as_flat(self) -> dict:
        """Every resolved value under its config-file key."""
        flat = {f'run.{k}': getattr(self, k) for k in _RUN_FIELDS}
        defaults = {f.name: f.default for f in dataclasses.fields(EnvConfig)}
        for k in ENV_KEYS:
            flat[f'env.{k}'] = self.env.get(k, defaults[k])
        for k in REWARD_KEYS:
            flat[f'reward.{k}'] = self.env.get(k, defaults[k])
        for ns in ('ppo', 'ddpg', 'nn'):
            for k, v in dataclasses.asdict(getattr(self, ns)).items():
                flat[f'{ns}.{k}'] = v
        return flat


_RUN_FIELDS = ('algo', 'world', 'reward', 'seed', 'episodes', 'out', 'checkpoint_every',
               'deterministic', 'workers', 'step_budget')
_SECTIONS = {'ppo': PPOConfig, 'ddpg': DDPGConfig, 'nn': NetConfig}


# ===================
# PARSING
# ===================

def _coerce(key: str, raw: str, kind):
    try:
        if kind is bool:
            if raw.lower() in ('1', 'true', 'yes', 'on'):
                return True
            if raw.lower() in ('0', 'false', 'no', 'off'):
                return False
            raise ValueError(raw)
        if kind is int:
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(value)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f'{key}: cannot parse {raw!r} as {kind.__name__}')


def _check_value(key: str, value, kind):
    """Typed override values (JSON request fields, argparse results) against the field type."""
    if kind is bool:
        if isinstance(value, bool):
            return value
    elif kind is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
    elif kind is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif isinstance(value, kind):
        return value
    raise ConfigError(f'{key}: expected {kind.__name__}, got {value!r}')


def _key_type(key: str):
    ns, _, name = key.partition('.')
    if ns == 'run' and name in _RUN_FIELDS:
        return {f.name: f.type for f in dataclasses.fields(RunConfig)}[name]
    if ns == 'env' and name in ENV_KEYS or ns == 'reward' and name in REWARD_KEYS:
        return {f.name: f.type for f in dataclasses.fields(EnvConfig)}[name]
    if ns in _SECTIONS:
        types = {f.name: f.type for f in dataclasses.fields(_SECTIONS[ns])}
        if name in types:
            return types[name]
    raise ConfigError(f'Unknown config key: {key}')


def _resolve_type(kind):
    # dataclass annotations may be strings under postponed evaluation
    return {'int': int, 'float': float, 'bool': bool, 'str': str}.get(kind, kind) if isinstance(kind, str) else kind


def parse_config_text(text: str, source: str = '<config>') -> dict:
    """{dotted key: typed value}. Unknown keys, bad lines and duplicates are ConfigError."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition('=')
        key, raw = key.strip(), raw.strip()
        if not sep or not key or not raw:
            raise ConfigError(f'{source}:{lineno}: expected "key = value"')
        if key in values:
            raise ConfigError(f'{source}:{lineno}: duplicate key {key}')
        values[key] = _coerce(key, raw, _resolve_type(_key_type(key)))
    return values


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f'Cannot read config {path}: {e}')
    return parse_config_text(text, source=str(path))


def build_run_config(file_values: Optional[dict] = None, overrides: Optional[dict] = None) -> RunConfig:
    """
    Merge config-file values with overrides (CLI flags or request fields,
    given as plain run-field names or dotted keys; None means unset).
    """
    merged = dict(file_values or {})
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        dotted = key if '.' in key else f'run.{key}'
        kind = _resolve_type(_key_type(dotted))
        if isinstance(value, str):
            merged[dotted] = _coerce(dotted, value, kind)
        else:
            merged[dotted] = _check_value(dotted, value, kind)

    run, env, sections = {}, {}, {ns: {} for ns in _SECTIONS}
    for key, value in merged.items():
        ns, _, name = key.partition('.')
        _key_type(key)
        if ns == 'run':
            run[name] = value
        elif ns in ('env', 'reward'):
            env[name] = value
        else:
            sections[ns][name] = value
    return RunConfig(env=env, **run, **{ns: _SECTIONS[ns](**kw) for ns, kw in sections.items()})


def format_config(cfg: RunConfig) -> str:
    """The resolved config in the file format; parse_config_text reads it back."""
    return ''.join(
        f'{k} = {str(v).lower() if isinstance(v, bool) else v}\n'
        for k, v in cfg.as_flat().items() if v != ''
    )


def check_request_fields(data: dict, allowed: tuple):
    """Request fields must be known names or dotted config keys."""
    unknown = sorted(k for k in data if k not in allowed and '.' not in k)
    if unknown:
        raise ConfigError(f'Unknown request field(s): {", ".join(unknown)} (expected {", ".join(allowed)} '
                          f'or a dotted config key)')
