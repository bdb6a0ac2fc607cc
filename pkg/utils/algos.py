"""
navlab - Algorithms
PPO (clipped surrogate + value loss, GAE advantages) and the DDPG baseline.

The update phase owns the parameters exclusively; rollout collection only
reads them.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from utils.errors import ConfigError, ContractViolation, NanAbort
from utils.nn import (
    ActorNetwork, AdamState, CriticNetwork,
    actor_forward, adam_step, assign_params, flatten_params, gaussian_entropy, gaussian_logprob,
    soft_update,
)

# ===================
# CONFIG
# ===================

ACTION_LOW = np.array([0.0, -1.0])
ACTION_HIGH = np.array([1.0, 1.0])

STOCHASTIC = 'stochastic'
DETERMINISTIC = 'deterministic'
DDPG_EXPLORE = 'ddpg_explore'
ACTION_MODES = (STOCHASTIC, DETERMINISTIC, DDPG_EXPLORE)


@dataclass(frozen=True)
class PPOConfig:
    clip: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    epochs: int = 10
    minibatch: int = 64
    value_coef: float = 0.5
    entropy_coef: float = 0.0
    rollout: int = 2048
    lr: float = 3e-4

    def __post_init__(self):
        if not 0.0 < self.clip < 1.0:
            raise ConfigError(f'ppo.clip must be in (0, 1), got {self.clip}')
        if not (0.0 < self.gamma <= 1.0 and 0.0 < self.lam <= 1.0):
            raise ConfigError(f'ppo.gamma and ppo.lam must be in (0, 1], got {self.gamma}, {self.lam}')
        if min(self.epochs, self.minibatch, self.rollout) <= 0:
            raise ConfigError('ppo.epochs, ppo.minibatch and ppo.rollout must be positive')


@dataclass(frozen=True)
class DDPGConfig:
    gamma: float = 0.99
    tau: float = 0.005
    noise_std: float = 0.1
    batch: int = 128
    warmup: int = 1000
    buffer: int = 100_000
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f'ddpg.tau must be in (0, 1], got {self.tau}')
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f'ddpg.gamma must be in (0, 1], got {self.gamma}')
        if self.batch <= 0 or self.buffer < self.batch or self.warmup < 0:
            raise ConfigError('ddpg.batch, ddpg.buffer and ddpg.warmup are inconsistent')


# ===================
# TRANSITIONS + BUFFERS
# ===================

@dataclass
class Transition:
    obs: np.ndarray
    action: np.ndarray          # executed, inside the action box
    log_prob: float
    reward: float
    next_obs: np.ndarray
    done: bool
    value: float = 0.0
    raw_action: Optional[np.ndarray] = None   # unclamped Gaussian sample (PPO)

    def __post_init__(self):
        if not np.isfinite(self.log_prob):
            raise ContractViolation(f'Transition log_prob must be finite, got {self.log_prob}')
        a = np.asarray(self.action, dtype=np.float64)
        if np.any(a < ACTION_LOW) or np.any(a > ACTION_HIGH):
            raise ContractViolation(f'Transition action {a} outside the action box')


class TrajectoryBuffer:
    """Ordered PPO transitions; finalize() fills returns and advantages."""

    def __init__(self):
        self.transitions = []
        self.returns: Optional[np.ndarray] = None
        self.advantages: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.transitions)

    def add(self, transition: Transition):
        self.transitions.append(transition)
        self.returns = self.advantages = None

    def extend(self, other: 'TrajectoryBuffer'):
        """Append a finalized segment, keeping its returns/advantages."""
        if other.advantages is None or (self.transitions and self.advantages is None):
            raise ContractViolation('Only finalized segments can be merged')
        if self.advantages is None:
            self.advantages, self.returns = other.advantages.copy(), other.returns.copy()
        else:
            self.advantages = np.concatenate([self.advantages, other.advantages])
            self.returns = np.concatenate([self.returns, other.returns])
        self.transitions.extend(other.transitions)

    @property
    def finalized(self) -> bool:
        return self.advantages is not None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(t, name) for t in self.transitions], dtype=np.float64)

    def finalize(self, gamma: float, lam: float, bootstrap_value: float):
        self.returns, self.advantages = compute_returns_advantages(self, gamma, lam, bootstrap_value)
        return self

    def batch(self) -> dict:
        if not self.finalized:
            raise ContractViolation('Buffer must be finalized before an update')
        return {
            'obs': np.stack([t.obs for t in self.transitions]),
            'actions': np.stack([t.raw_action if t.raw_action is not None else t.action
                                 for t in self.transitions]),
            'log_probs': self.column('log_prob'),
            'advantages': self.advantages.copy(),
            'returns': self.returns.copy(),
        }


class ReplayBuffer:
    """Ring buffer with uniform sampling for DDPG."""

    def __init__(self, capacity: int, obs_dim: int = 16, act_dim: int = 2):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, act_dim))
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.dones = np.zeros(capacity)
        self.ptr = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, t: Transition):
        i = self.ptr
        self.obs[i] = t.obs
        self.actions[i] = t.action
        self.rewards[i] = t.reward
        self.next_obs[i] = t.next_obs
        self.dones[i] = float(t.done)
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict:
        if self.size < batch_size:
            raise ContractViolation(f'Replay holds {self.size} transitions, need {batch_size}')
        idx = rng.integers(0, self.size, size=batch_size)
        return {
            'obs': self.obs[idx], 'actions': self.actions[idx], 'rewards': self.rewards[idx],
            'next_obs': self.next_obs[idx], 'dones': self.dones[idx],
        }


# ===================
# ADVANTAGES
# ===================

def gae(rewards, values, dones, gamma: float, lam: float, bootstrap_value: float) -> tuple:
    """(returns, advantages) by generalized advantage estimation over one segment."""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    not_done = 1.0 - np.asarray(dones, dtype=np.float64)
    n = len(rewards)
    if n == 0:
        raise ContractViolation('Cannot compute advantages for an empty segment')
    next_values = np.append(values[1:], bootstrap_value)
    deltas = rewards + gamma * next_values * not_done - values
    advantages = np.zeros(n)
    running = 0.0
    for t in reversed(range(n)):
        running = deltas[t] + gamma * lam * not_done[t] * running
        advantages[t] = running
    return advantages + values, advantages


def compute_returns_advantages(buffer: TrajectoryBuffer, gamma: float, lam: float,
                               bootstrap_value: float) -> tuple:
    if len(buffer) == 0:
        raise ContractViolation('Cannot compute advantages for an empty buffer')
    return gae(buffer.column('reward'), buffer.column('value'), buffer.column('done'),
               gamma, lam, bootstrap_value)


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    centered = advantages - advantages.mean()
    std = centered.std()
    if std < 1e-12:
        return np.zeros_like(centered)
    return centered / std


# ===================
# PPO
# ===================

def ppo_surrogate(log_prob_new, log_prob_old, advantage, clip: float) -> np.ndarray:
    """Per-sample clipped surrogate min(r A, clip(r) A)."""
    ratio = np.exp(np.asarray(log_prob_new, dtype=np.float64) - np.asarray(log_prob_old, dtype=np.float64))
    advantage = np.asarray(advantage, dtype=np.float64)
    return np.minimum(ratio * advantage, np.clip(ratio, 1.0 - clip, 1.0 + clip) * advantage)


def value_loss(values_pred, returns) -> float:
    values_pred = np.asarray(values_pred, dtype=np.float64)
    returns = np.asarray(returns, dtype=np.float64)
    if values_pred.shape != returns.shape:
        raise ContractViolation(f'Length mismatch: {values_pred.shape} vs {returns.shape}')
    return float(np.mean((values_pred - returns) ** 2))


def ppo_loss_and_grads(actor: ActorNetwork, critic: CriticNetwork, batch: dict, cfg: PPOConfig):
    """
    Total loss -surrogate + value_coef * value_loss - entropy_coef * entropy
    with exact gradients for both networks.

    Returns (loss, actor_grads, critic_grads, stats).
    """
    obs, actions = batch['obs'], batch['actions']
    old_lp, adv, returns = batch['log_probs'], batch['advantages'], batch['returns']
    n = len(obs)

    mean, acache = actor.forward(obs)
    log_std = actor.params['log_std']
    new_lp = gaussian_logprob(mean, log_std, actions)
    ratio = np.exp(new_lp - old_lp)
    clipped = np.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip)
    surrogate = np.minimum(ratio * adv, clipped * adv)

    values, ccache = critic.forward(obs)
    v_loss = value_loss(values, returns)
    entropy = gaussian_entropy(log_std)
    policy_loss = -float(surrogate.mean())
    loss = policy_loss + cfg.value_coef * v_loss - cfg.entropy_coef * entropy

    # d surrogate / d new_lp is r*A where the unclipped term is the minimum, else 0
    g_lp = -np.where(ratio * adv <= clipped * adv, ratio * adv, 0.0) / n
    inv_var = np.exp(-2.0 * log_std)
    diff = actions - mean
    g_mean = g_lp[:, None] * diff * inv_var
    g_log_std = (g_lp[:, None] * (diff * diff * inv_var - 1.0)).sum(axis=0) - cfg.entropy_coef
    actor_grads, _ = actor.backward_mean(acache, g_mean, g_log_std)
    critic_grads, _ = critic.backward_value(ccache, cfg.value_coef * 2.0 * (values - returns) / n)

    stats = {
        'loss': float(loss),
        'policy_loss': policy_loss,
        'value_loss': v_loss,
        'entropy': entropy,
        'mean_ratio': float(ratio.mean()),
        'clip_fraction': float(np.mean(np.abs(ratio - 1.0) > cfg.clip)),
        'approx_kl': float(np.mean(old_lp - new_lp)),
    }
    return float(loss), actor_grads, critic_grads, stats


def _assert_finite(tag: str, arrays: dict):
    for name, value in arrays.items():
        if not np.all(np.isfinite(value)):
            raise NanAbort(f'[{tag}] non-finite values in {name}')


class _Rollback:
    """Snapshot of networks and optimizer moments taken before an update phase."""

    def __init__(self, networks, optimizers):
        self.networks = [(net.params, flatten_params(net.params)) for net in networks]
        self.optimizers = [
            (opt, opt.t, {k: v.copy() for k, v in opt.m.items()}, {k: v.copy() for k, v in opt.v.items()})
            for opt in optimizers
        ]

    def restore(self):
        for params, flat in self.networks:
            assign_params(params, flat)
        for opt, t, m, v in self.optimizers:
            opt.t, opt.m, opt.v = t, m, v


def ppo_update(actor: ActorNetwork, critic: CriticNetwork, buffer: TrajectoryBuffer, cfg: PPOConfig,
               actor_opt: AdamState, critic_opt: AdamState, rng: np.random.Generator) -> dict:
    """Epochs of shuffled minibatch Adam steps on the clipped PPO objective."""
    data = buffer.batch()
    data['advantages'] = normalize_advantages(data['advantages'])
    n = len(buffer)
    history = []
    rollback = _Rollback((actor, critic), (actor_opt, critic_opt))

    try:
        for _ in range(cfg.epochs):
            order = rng.permutation(n)
            for start in range(0, n, cfg.minibatch):
                idx = order[start:start + cfg.minibatch]
                mini = {k: v[idx] for k, v in data.items()}
                loss, a_grads, c_grads, stats = ppo_loss_and_grads(actor, critic, mini, cfg)
                if not np.isfinite(loss):
                    raise NanAbort(f'[ppo] loss is {loss} (stats {stats})')
                _assert_finite('ppo', a_grads)
                _assert_finite('ppo', c_grads)
                adam_step(actor.params, a_grads, actor_opt)
                adam_step(critic.params, c_grads, critic_opt)
                _assert_finite('ppo', actor.params)
                _assert_finite('ppo', critic.params)
                history.append(stats)
    except NanAbort:
        rollback.restore()
        print(f"[ppo] Non-finite update after {len(history)} minibatches, parameters rolled back")
        raise

    summary = {k: float(np.mean([h[k] for h in history])) for k in history[0]}
    summary['first_mean_ratio'] = history[0]['mean_ratio']
    summary['updates'] = len(history)
    return summary


# ===================
# DDPG
# ===================

def ddpg_targets(target_actor: ActorNetwork, target_critic: CriticNetwork, batch: dict, gamma: float):
    """y = r + gamma * (1 - done) * Q'(s', mu'(s'))."""
    next_actions, _ = target_actor.forward(batch['next_obs'])
    q_next, _ = target_critic.forward(np.concatenate([batch['next_obs'], next_actions], axis=1))
    return batch['rewards'] + gamma * (1.0 - batch['dones']) * q_next


def ddpg_critic_loss_and_grads(critic: CriticNetwork, batch: dict, targets: np.ndarray):
    n = len(targets)
    q, cache = critic.forward(np.concatenate([batch['obs'], batch['actions']], axis=1))
    td = q - targets
    grads, _ = critic.backward_value(cache, 2.0 * td / n)
    return float(np.mean(td * td)), grads, td


def ddpg_actor_loss_and_grads(actor: ActorNetwork, critic: CriticNetwork, batch: dict):
    """-mean Q(s, mu(s)), chained through dQ/da into the actor."""
    obs = batch['obs']
    n = len(obs)
    mu, acache = actor.forward(obs)
    q, qcache = critic.forward(np.concatenate([obs, mu], axis=1))
    _, g_input = critic.backward_value(qcache, np.full(n, -1.0 / n))
    grads, _ = actor.backward_mean(acache, g_input[:, obs.shape[1]:])
    return -float(q.mean()), grads


def ddpg_update(actor: ActorNetwork, critic: CriticNetwork,
                target_actor: ActorNetwork, target_critic: CriticNetwork,
                replay: ReplayBuffer, cfg: DDPGConfig,
                actor_opt: AdamState, critic_opt: AdamState, rng: np.random.Generator) -> dict:
    if len(replay) < max(cfg.warmup, cfg.batch):
        raise ContractViolation(f'Replay holds {len(replay)} transitions, warmup is {cfg.warmup}')
    batch = replay.sample(cfg.batch, rng)
    rollback = _Rollback((actor, critic, target_actor, target_critic), (actor_opt, critic_opt))

    try:
        targets = ddpg_targets(target_actor, target_critic, batch, cfg.gamma)
        critic_loss, c_grads, td = ddpg_critic_loss_and_grads(critic, batch, targets)
        _assert_finite('ddpg', c_grads)
        adam_step(critic.params, c_grads, critic_opt)

        actor_loss, a_grads = ddpg_actor_loss_and_grads(actor, critic, batch)
        _assert_finite('ddpg', a_grads)
        adam_step(actor.params, a_grads, actor_opt)

        soft_update(target_actor, actor, cfg.tau)
        soft_update(target_critic, critic, cfg.tau)
        _assert_finite('ddpg', actor.params)
        _assert_finite('ddpg', critic.params)
    except NanAbort:
        rollback.restore()
        print("[ddpg] Non-finite update, parameters rolled back")
        raise

    return {
        'critic_loss': critic_loss,
        'actor_loss': actor_loss,
        'mean_abs_td': float(np.mean(np.abs(td))),
    }


# ===================
# ACTIONS
# ===================

def select_action(actor: ActorNetwork, obs, mode: str = STOCHASTIC,
                  rng: Optional[np.random.Generator] = None, noise_std: float = 0.1) -> tuple:
    """
    (action, log_prob, raw_action). action is always inside the box.

    stochastic:    Gaussian sample around the squashed mean; log_prob of the unclamped sample
    deterministic: the squashed mean, log_prob None
    ddpg_explore:  mean plus N(0, noise_std), clamped, log_prob None
    """
    if mode not in ACTION_MODES:
        raise ContractViolation(f'Unknown action mode: {mode}')
    mean_lin, mean_ang, log_std = actor_forward(actor, obs)
    mean = np.array([mean_lin, mean_ang])

    if mode == DETERMINISTIC:
        return mean, None, mean

    rng = rng if rng is not None else np.random.default_rng()
    if mode == DDPG_EXPLORE:
        raw = mean + noise_std * rng.standard_normal(2)
        return np.clip(raw, ACTION_LOW, ACTION_HIGH), None, raw

    raw = mean + np.exp(log_std) * rng.standard_normal(2)
    log_prob = float(gaussian_logprob(mean, log_std, raw))
    return np.clip(raw, ACTION_LOW, ACTION_HIGH), log_prob, raw
