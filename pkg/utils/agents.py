"""
navlab - Agents
PPO and DDPG agents (networks + optimizer state), checkpoint save/load, and
the rollout worker that drives one environment.

Algorithms: ppo_res (ResBlock bodies), ppo_mlp (plain MLP bodies), ddpg.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from utils.algos import (
    ACTION_HIGH, ACTION_LOW, DDPG_EXPLORE, DETERMINISTIC, STOCHASTIC,
    DDPGConfig, PPOConfig, ReplayBuffer, TrajectoryBuffer, Transition,
    ddpg_update, ppo_update, select_action,
)
from utils.checkpoint import load_checkpoint, save_checkpoint
from utils.environment import OBS_DIM, EnvConfig, NavigationEnv
from utils.errors import ArchitectureMismatch, ConfigError
from utils.metrics import EpisodeRecord
from utils.nn import ActorNetwork, AdamState, CriticNetwork, NetConfig, critic_forward
from utils.seeding import make_rng, spawn_rngs

ALGOS = ('ppo_res', 'ppo_mlp', 'ddpg')
ACT_DIM = 2


def _opt_tensors(prefix: str, opt: AdamState) -> dict:
    out = {f'{prefix}.hparams': np.array([opt.lr, opt.beta1, opt.beta2, opt.eps, float(opt.t)])}
    out.update({f'{prefix}.m.{k}': v for k, v in opt.m.items()})
    out.update({f'{prefix}.v.{k}': v for k, v in opt.v.items()})
    return out


def _load_opt(prefix: str, opt: AdamState, tensors: dict):
    lr, b1, b2, eps, t = tensors[f'{prefix}.hparams']
    opt.lr, opt.beta1, opt.beta2, opt.eps, opt.t = float(lr), float(b1), float(b2), float(eps), int(t)
    for k in opt.m:
        opt.m[k] = tensors[f'{prefix}.m.{k}'].copy()
        opt.v[k] = tensors[f'{prefix}.v.{k}'].copy()


# ===================
# AGENTS
# ===================

class PPOAgent:

    def __init__(self, algo: str = 'ppo_res', cfg: PPOConfig = PPOConfig(), net: NetConfig = NetConfig(),
                 seed: int = 0):
        if algo not in ('ppo_res', 'ppo_mlp'):
            raise ConfigError(f'Not a PPO algorithm: {algo}')
        self.algo = algo
        self.cfg = cfg
        self.net = net
        init_rng, self.update_rng = spawn_rngs(seed, 2)
        body = 'res' if algo == 'ppo_res' else 'mlp'
        self.actor = ActorNetwork(OBS_DIM, body, net.hidden, init_rng, net.head_scale)
        self.critic = CriticNetwork(OBS_DIM, body, net.hidden, init_rng, net.head_scale)
        self.actor_opt = AdamState.for_params(self.actor.params, lr=cfg.lr)
        self.critic_opt = AdamState.for_params(self.critic.params, lr=cfg.lr)

    @property
    def arch(self) -> str:
        return f'{self.algo};hidden={self.net.hidden}'

    def act(self, obs, mode: str = STOCHASTIC, rng: Optional[np.random.Generator] = None):
        return select_action(self.actor, obs, mode, rng)

    def value(self, obs) -> float:
        return critic_forward(self.critic, obs)

    def update(self, buffer: TrajectoryBuffer) -> dict:
        return ppo_update(self.actor, self.critic, buffer, self.cfg,
                          self.actor_opt, self.critic_opt, self.update_rng)

    def state_tensors(self) -> dict:
        tensors = {f'actor.{k}': v for k, v in self.actor.params.items()}
        tensors.update({f'critic.{k}': v for k, v in self.critic.params.items()})
        tensors.update(_opt_tensors('opt.actor', self.actor_opt))
        tensors.update(_opt_tensors('opt.critic', self.critic_opt))
        return tensors

    def load_tensors(self, tensors: dict):
        _assign('actor', self.actor.params, tensors)
        _assign('critic', self.critic.params, tensors)
        _load_opt('opt.actor', self.actor_opt, tensors)
        _load_opt('opt.critic', self.critic_opt, tensors)


class DDPGAgent:

    def __init__(self, cfg: DDPGConfig = DDPGConfig(), net: NetConfig = NetConfig(), seed: int = 0):
        self.algo = 'ddpg'
        self.cfg = cfg
        self.net = net
        init_rng, self.update_rng = spawn_rngs(seed, 2)
        self.actor = ActorNetwork(OBS_DIM, 'res', net.hidden, init_rng, net.head_scale, learn_std=False)
        self.critic = CriticNetwork(OBS_DIM + ACT_DIM, 'res', net.hidden, init_rng, net.head_scale)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = AdamState.for_params(self.actor.params, lr=cfg.actor_lr)
        self.critic_opt = AdamState.for_params(self.critic.params, lr=cfg.critic_lr)
        self.replay = ReplayBuffer(cfg.buffer, OBS_DIM, ACT_DIM)

    @property
    def arch(self) -> str:
        return f'ddpg;hidden={self.net.hidden}'

    @property
    def ready(self) -> bool:
        return len(self.replay) >= max(self.cfg.warmup, self.cfg.batch)

    def act(self, obs, mode: str = DDPG_EXPLORE, rng: Optional[np.random.Generator] = None):
        if mode == DDPG_EXPLORE and len(self.replay) < self.cfg.warmup:
            rng = rng if rng is not None else np.random.default_rng()
            action = rng.uniform(ACTION_LOW, ACTION_HIGH)
            return action, None, action
        if mode == STOCHASTIC:
            mode = DDPG_EXPLORE
        return select_action(self.actor, obs, mode, rng, noise_std=self.cfg.noise_std)

    def update(self) -> dict:
        return ddpg_update(self.actor, self.critic, self.target_actor, self.target_critic,
                           self.replay, self.cfg, self.actor_opt, self.critic_opt, self.update_rng)

    def state_tensors(self) -> dict:
        tensors = {}
        for prefix, network in (('actor', self.actor), ('critic', self.critic),
                                ('target_actor', self.target_actor), ('target_critic', self.target_critic)):
            tensors.update({f'{prefix}.{k}': v for k, v in network.params.items()})
        tensors.update(_opt_tensors('opt.actor', self.actor_opt))
        tensors.update(_opt_tensors('opt.critic', self.critic_opt))
        return tensors

    def load_tensors(self, tensors: dict):
        for prefix, network in (('actor', self.actor), ('critic', self.critic),
                                ('target_actor', self.target_actor), ('target_critic', self.target_critic)):
            _assign(prefix, network.params, tensors)
        _load_opt('opt.actor', self.actor_opt, tensors)
        _load_opt('opt.critic', self.critic_opt, tensors)


def _assign(prefix: str, params: dict, tensors: dict):
    for k, v in params.items():
        saved = tensors.get(f'{prefix}.{k}')
        if saved is None or saved.shape != v.shape:
            raise ArchitectureMismatch(f'Checkpoint tensor {prefix}.{k} missing or misshaped')
        v[...] = saved


def build_agent(algo: str, ppo: PPOConfig = PPOConfig(), ddpg: DDPGConfig = DDPGConfig(),
                net: NetConfig = NetConfig(), seed: int = 0):
    if algo in ('ppo_res', 'ppo_mlp'):
        return PPOAgent(algo, ppo, net, seed)
    if algo == 'ddpg':
        return DDPGAgent(ddpg, net, seed)
    raise ConfigError(f'Unknown algo: {algo} (expected one of {ALGOS})')


def save_agent(path, agent):
    return save_checkpoint(path, agent.arch, agent.state_tensors())


def parse_arch(arch: str) -> tuple:
    try:
        algo, hidden = arch.split(';hidden=')
        return algo, int(hidden)
    except ValueError:
        raise ArchitectureMismatch(f'Unrecognized architecture tag: {arch!r}')


def load_agent(path, expected_algo: Optional[str] = None):
    arch, tensors = load_checkpoint(path)
    algo, hidden = parse_arch(arch)
    if expected_algo and algo != expected_algo:
        raise ArchitectureMismatch(f'Checkpoint holds {algo}, requested {expected_algo}')
    if algo not in ALGOS:
        raise ArchitectureMismatch(f'Unknown algorithm in checkpoint: {algo}')
    head_scale = NetConfig().head_scale
    agent = build_agent(algo, net=NetConfig(hidden=hidden, head_scale=head_scale))
    agent.load_tensors(tensors)
    return agent


# ===================
# ROLLOUT WORKER
# ===================

@dataclass
class _EpisodeState:
    cum_reward: float = 0.0
    steps: int = 0
    started: float = 0.0


class RolloutWorker:
    """
    Owns one environment and its episode bookkeeping. A worker is used by one
    thread at a time; parallel collection gives each thread its own worker.
    """

    def __init__(self, env_config: EnvConfig, seed: int, record_wall: bool = False):
        self.env = NavigationEnv(env_config)
        self.rng = make_rng(seed)
        self.record_wall = record_wall
        self.episode = _EpisodeState()
        self.obs = self._begin()

    def _begin(self) -> np.ndarray:
        self.episode = _EpisodeState(started=time.perf_counter())
        return self.env.reset(seed=int(self.rng.integers(2 ** 31))).to_vector()

    def step(self, action, log_prob: float = 0.0, value: float = 0.0, raw_action=None) -> tuple:
        """(transition, finished EpisodeRecord or None). Starts a new episode after a terminal step."""
        result = self.env.step(action)
        next_obs = result.observation.to_vector()
        transition = Transition(
            obs=self.obs, action=np.asarray(action, dtype=np.float64), log_prob=log_prob,
            reward=result.reward, next_obs=next_obs, done=result.done, value=value,
            raw_action=None if raw_action is None else np.asarray(raw_action, dtype=np.float64),
        )
        self.episode.cum_reward += result.reward
        self.episode.steps += 1

        record = None
        if result.done:
            wall_ms = int(round((time.perf_counter() - self.episode.started) * 1000)) if self.record_wall else 0
            record = EpisodeRecord(
                episode=0, cum_reward=self.episode.cum_reward, steps=self.episode.steps,
                arrivals=self.env.arrivals, event=result.event.value, wall_ms=wall_ms,
            )
            self.obs = self._begin()
        else:
            self.obs = next_obs
        return transition, record

    def collect_ppo(self, agent: PPOAgent, n_steps: int, episode_budget: int) -> tuple:
        """
        Up to n_steps stochastic steps, stopping early once episode_budget
        episodes have finished. Returns (finalized segment, records).
        """
        segment = TrajectoryBuffer()
        records = []
        for _ in range(n_steps):
            action, log_prob, raw = agent.act(self.obs, STOCHASTIC, self.rng)
            value = agent.value(self.obs)
            transition, record = self.step(action, log_prob, value, raw)
            segment.add(transition)
            if record is not None:
                records.append(record)
                if len(records) >= episode_budget:
                    break
        last = segment.transitions[-1]
        bootstrap = 0.0 if last.done else agent.value(self.obs)
        segment.finalize(agent.cfg.gamma, agent.cfg.lam, bootstrap)
        return segment, records

    def run_greedy_episode(self, agent, trace: Optional[list] = None) -> EpisodeRecord:
        """One deterministic-policy episode from a fresh reset, no learning."""
        self.obs = self._begin()
        while True:
            action, _, _ = agent.act(self.obs, DETERMINISTIC)
            if trace is not None:
                trace.append((self.env.pose, np.array(action)))
            _, record = self.step(action)
            if record is not None:
                return record
