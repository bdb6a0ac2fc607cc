"""
Config file parsing, override precedence and the resolved RunConfig.
"""

from pathlib import Path

import pytest

from utils.config import (
    RunConfig, build_run_config, check_request_fields, format_config, load_config, parse_config_text,
)
from utils.errors import ConfigError
from utils.worlds import DATA_DIR, simple_arena

DEFAULTS = DATA_DIR / 'defaults.conf'


class TestParse:

    def test_typed_values(self):
        values = parse_config_text('run.seed = 7\nppo.clip = 0.1  # tighter\nrun.deterministic = no\n')
        assert values == {'run.seed': 7, 'ppo.clip': 0.1, 'run.deterministic': False}
        assert isinstance(values['run.seed'], int)

    @pytest.mark.parametrize('text', [
        'run.colour = red',
        'ppo.momentum = 0.9',
        'run.seed 7',
        'run.seed =',
        'run.seed = 1.5',
        'run.deterministic = maybe',
        'run.seed = 1\nrun.seed = 2',
    ])
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / 'missing.conf')

    def test_reference_file_is_the_builtin_defaults(self):
        assert build_run_config(load_config(DEFAULTS)).as_flat() == RunConfig().as_flat()


class TestPrecedence:

    def test_file_overrides_defaults(self):
        cfg = build_run_config({'run.seed': 4, 'env.max_steps': 50, 'nn.hidden': 64})
        assert cfg.seed == 4
        assert cfg.nn.hidden == 64
        assert cfg.env == {'max_steps': 50}

    def test_overrides_beat_file(self):
        cfg = build_run_config({'run.seed': 4, 'ppo.epochs': 3}, {'seed': 9, 'ppo.epochs': '5'})
        assert cfg.seed == 9
        assert cfg.ppo.epochs == 5

    def test_none_leaves_file_value(self):
        assert build_run_config({'run.algo': 'ddpg'}, {'algo': None}).algo == 'ddpg'

    @pytest.mark.parametrize('override', [
        {'episodes': 5.5},
        {'episodes': True},
        {'seed': [1]},
        {'deterministic': 0},
        {'ppo.lr': False},
        {'world': 3},
    ])
    def test_mistyped_override(self, override):
        with pytest.raises(ConfigError):
            build_run_config({}, override)

    def test_typed_overrides_normalized(self):
        cfg = build_run_config({}, {'episodes': 4.0, 'ppo.lr': 1, 'seed': -3})
        assert cfg.episodes == 4 and isinstance(cfg.episodes, int)
        assert cfg.ppo.lr == 1.0 and isinstance(cfg.ppo.lr, float)
        assert cfg.seed == -3

    def test_request_fields(self):
        check_request_fields({'seed': 1, 'ppo.clip': 0.1}, ('seed',))
        with pytest.raises(ConfigError):
            check_request_fields({'seed': 1, 'epochs': 3}, ('seed',))

    def test_unknown_override(self):
        with pytest.raises(ConfigError):
            build_run_config({}, {'colour': 'red'})

    def test_reward_keys_reach_env(self):
        cfg = build_run_config({'reward.c_r': 5.0}, {'reward': 'advanced'})
        env_cfg = cfg.make_env_config(simple_arena())
        assert env_cfg.c_r == 5.0
        assert env_cfg.reward == 'advanced'


class TestRunConfig:

    @pytest.mark.parametrize('kwargs', [
        {'algo': 'sac'},
        {'reward': 'dense'},
        {'episodes': 0},
        {'workers': 2},
        {'checkpoint_every': 0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            RunConfig(**kwargs)

    def test_parallel_needs_nondeterministic(self):
        assert RunConfig(workers=4, deterministic=False).workers == 4

    def test_default_out_dir(self, monkeypatch):
        monkeypatch.setattr('utils.config.OUTPUT_ROOT', 'somewhere')
        cfg = RunConfig(algo='ddpg', world='data/complex.world', reward='advanced', seed=3)
        assert cfg.out_dir == Path('somewhere') / 'ddpg-complex-advanced-s3'
        assert RunConfig(out='elsewhere').out_dir == Path('elsewhere')

    def test_format_round_trip(self):
        cfg = build_run_config({'run.seed': 2, 'env.dt': 0.05, 'ppo.lr': 1e-05},
                               {'out': 'x/y', 'deterministic': 'false'})
        again = build_run_config(parse_config_text(format_config(cfg)))
        assert again.as_flat() == cfg.as_flat()
