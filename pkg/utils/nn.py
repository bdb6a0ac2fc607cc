"""
navlab - Neural Network Core
Dense layers, concatenating residual blocks, actor/critic networks, manual
reverse-mode gradients and Adam. Float64 throughout.

Body (res): two blocks of
    Dense(hidden, leaky_relu) -> Dense(in, linear) -> +input -> leaky_relu -> concat(input)
so widths go 16 -> 32 -> 64. Body (mlp): two Dense(hidden, leaky_relu) layers.

Forward/backward only read parameters, so several readers may share a network.
Updates (adam_step) need exclusive access; the trainer serializes them.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from utils.errors import ConfigError, ContractViolation

# ===================
# CONFIG
# ===================

LEAKY_SLOPE = 0.01
HIDDEN = 512
HEAD_SCALE = 0.01
INIT_LOG_STD = math.log(0.3)
LOG_2PI = math.log(2.0 * math.pi)

ACTIVATIONS = ('leaky_relu', 'linear', 'tanh', 'sigmoid')
BODIES = ('res', 'mlp')


@dataclass(frozen=True)
class NetConfig:
    hidden: int = HIDDEN
    head_scale: float = HEAD_SCALE

    def __post_init__(self):
        if self.hidden <= 0 or self.head_scale <= 0:
            raise ConfigError(f'nn.hidden and nn.head_scale must be positive, got {self}')


# ===================
# ACTIVATIONS
# ===================

def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def activate(z, kind: str):
    if kind == 'leaky_relu':
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    if kind == 'linear':
        return z
    if kind == 'tanh':
        return np.tanh(z)
    if kind == 'sigmoid':
        return sigmoid(z)
    raise ContractViolation(f'Unknown activation: {kind}')


def activate_grad(z, a, kind: str):
    """Elementwise derivative given pre-activation z and activation a."""
    if kind == 'leaky_relu':
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    if kind == 'linear':
        return np.ones_like(z)
    if kind == 'tanh':
        return 1.0 - a * a
    if kind == 'sigmoid':
        return a * (1.0 - a)
    raise ContractViolation(f'Unknown activation: {kind}')


# ===================
# LAYERS
# ===================

@dataclass
class DenseLayer:
    weights: np.ndarray     # (out, in)
    bias: np.ndarray        # (out,)
    activation: str = 'linear'

    def __post_init__(self):
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ContractViolation(
                f'Inconsistent dense shapes: W {self.weights.shape}, b {self.bias.shape}'
            )
        if self.activation not in ACTIVATIONS:
            raise ContractViolation(f'Unknown activation: {self.activation}')

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class ResConcatBlock:
    fc1: DenseLayer
    fc2: DenseLayer

    def __post_init__(self):
        if self.fc2.out_dim != self.fc1.in_dim or self.fc2.in_dim != self.fc1.out_dim:
            raise ContractViolation('fc2 must project back to the block input width')

    @property
    def in_dim(self) -> int:
        return self.fc1.in_dim


def _check_input(x: np.ndarray, in_dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != in_dim:
        raise ContractViolation(f'Expected input width {in_dim}, got shape {x.shape}')
    return x


def dense_forward(layer: DenseLayer, x: np.ndarray, cache: Optional[dict] = None) -> np.ndarray:
    """activation(W x + b) for a vector or a (n, in) batch. Records the pre-activation in cache['z']."""
    x = _check_input(x, layer.in_dim)
    z = x @ layer.weights.T + layer.bias
    if cache is not None:
        cache['z'] = z
    return activate(z, layer.activation)


def res_block_forward(block: ResConcatBlock, x: np.ndarray, cache: Optional[dict] = None) -> np.ndarray:
    """concat(leaky_relu(fc2(fc1(x)) + x), x): output is twice as wide as the input."""
    x = _check_input(x, block.in_dim)
    c1 = {}
    h1 = dense_forward(block.fc1, x, c1)
    s = dense_forward(block.fc2, h1) + x
    if cache is not None:
        cache.update({'in': x, 'z1': c1['z'], 'h1': h1, 's': s})
    return np.concatenate([activate(s, 'leaky_relu'), x], axis=-1)


def gaussian_logprob(mean, log_std, action):
    """Diagonal Gaussian log-density summed over the last axis."""
    mean = np.asarray(mean, dtype=np.float64)
    log_std = np.asarray(log_std, dtype=np.float64)
    action = np.asarray(action, dtype=np.float64)
    z = (action - mean) / np.exp(log_std)
    return np.sum(-0.5 * z * z - log_std - 0.5 * LOG_2PI, axis=-1)


def gaussian_entropy(log_std) -> float:
    return float(np.sum(np.asarray(log_std) + 0.5 * (LOG_2PI + 1.0)))


# ===================
# NETWORKS
# ===================

class Network:
    """
    Parameters live in an ordered dict of arrays (name -> ndarray) so the
    optimizer and the checkpoint codec can walk them. Adam updates the arrays
    in place, so DenseLayer views stay valid.
    """

    kind = 'network'

    def __init__(self, in_dim: int, out_dim: int, body: str = 'res', hidden: int = HIDDEN,
                 rng: Optional[np.random.Generator] = None, head_scale: float = HEAD_SCALE):
        if body not in BODIES:
            raise ContractViolation(f'Unknown body: {body} (expected one of {BODIES})')
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.body = body
        self.hidden = hidden
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params = {}

        if body == 'res':
            width = in_dim
            for name in ('block1', 'block2'):
                self._init_dense(f'{name}.fc1', width, hidden, rng)
                self._init_dense(f'{name}.fc2', hidden, width, rng)
                width *= 2
            self.body_dim = width
        else:
            self._init_dense('body.fc1', in_dim, hidden, rng)
            self._init_dense('body.fc2', hidden, hidden, rng)
            self.body_dim = hidden
        self._init_dense('head', self.body_dim, out_dim, rng, scale=head_scale)

    def _init_dense(self, name, fan_in, fan_out, rng, scale=1.0):
        bound = scale * math.sqrt(6.0 / fan_in)
        self.params[f'{name}.W'] = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        self.params[f'{name}.b'] = np.zeros(fan_out)

    # -------------------
    # views
    # -------------------

    def layer(self, name: str, activation: str) -> DenseLayer:
        return DenseLayer(self.params[f'{name}.W'], self.params[f'{name}.b'], activation)

    def block(self, name: str) -> ResConcatBlock:
        return ResConcatBlock(self.layer(f'{name}.fc1', 'leaky_relu'), self.layer(f'{name}.fc2', 'linear'))

    @property
    def arch(self) -> str:
        return f'{self.kind}-{self.body}-{self.in_dim}-{self.hidden}-{self.out_dim}'

    def body_param_count(self) -> int:
        return sum(v.size for k, v in self.params.items() if not k.startswith('head') and k != 'log_std')

    def copy(self) -> 'Network':
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.params = {k: v.copy() for k, v in self.params.items()}
        return clone

    # -------------------
    # forward
    # -------------------

    def _forward_body(self, x: np.ndarray):
        cache = {'x': x}
        if self.body == 'res':
            h = x
            for name in ('block1', 'block2'):
                cache[name] = {}
                h = res_block_forward(self.block(name), h, cache[name])
        else:
            c1, c2 = {}, {}
            h1 = dense_forward(self.layer('body.fc1', 'leaky_relu'), x, c1)
            h = dense_forward(self.layer('body.fc2', 'leaky_relu'), h1, c2)
            cache['body'] = {'z1': c1['z'], 'h1': h1, 'z2': c2['z']}
        cache['features'] = h
        z = dense_forward(self.layer('head', 'linear'), h)
        cache['z'] = z
        return z, cache

    def _backward_body(self, cache, g_features):
        p = self.params
        grads = {}
        g = g_features
        if self.body == 'res':
            for name in ('block2', 'block1'):
                c = cache[name]
                width = c['in'].shape[1]
                g_r, g_in = g[:, :width], g[:, width:].copy()
                g_s = g_r * activate_grad(c['s'], None, 'leaky_relu')
                grads[f'{name}.fc2.W'] = g_s.T @ c['h1']
                grads[f'{name}.fc2.b'] = g_s.sum(axis=0)
                g_z1 = (g_s @ p[f'{name}.fc2.W']) * activate_grad(c['z1'], None, 'leaky_relu')
                grads[f'{name}.fc1.W'] = g_z1.T @ c['in']
                grads[f'{name}.fc1.b'] = g_z1.sum(axis=0)
                g = g_in + g_s + g_z1 @ p[f'{name}.fc1.W']
        else:
            c = cache['body']
            g_z2 = g * activate_grad(c['z2'], None, 'leaky_relu')
            grads['body.fc2.W'] = g_z2.T @ c['h1']
            grads['body.fc2.b'] = g_z2.sum(axis=0)
            g_z1 = (g_z2 @ p['body.fc2.W']) * activate_grad(c['z1'], None, 'leaky_relu')
            grads['body.fc1.W'] = g_z1.T @ cache['x']
            grads['body.fc1.b'] = g_z1.sum(axis=0)
            g = g_z1 @ p['body.fc1.W']
        return grads, g

    def backward(self, cache, g_z: np.ndarray):
        """
        Gradients of a scalar loss given dL/dz for the head pre-activations.

        Returns (grads, dL/dinput) with grads keyed like self.params.
        """
        grads = {'head.W': g_z.T @ cache['features'], 'head.b': g_z.sum(axis=0)}
        body_grads, g_x = self._backward_body(cache, g_z @ self.params['head.W'])
        grads.update(body_grads)
        return {k: grads.get(k, np.zeros_like(v)) for k, v in self.params.items()}, g_x


class ActorNetwork(Network):
    """Squashed-mean policy head: sigmoid on linear velocity, tanh on angular velocity."""

    kind = 'actor'

    def __init__(self, in_dim: int = 16, body: str = 'res', hidden: int = HIDDEN,
                 rng: Optional[np.random.Generator] = None, head_scale: float = HEAD_SCALE,
                 learn_std: bool = True):
        super().__init__(in_dim, 2, body=body, hidden=hidden, rng=rng, head_scale=head_scale)
        if learn_std:
            self.params['log_std'] = np.full(2, INIT_LOG_STD)

    def forward(self, obs: np.ndarray):
        """(mean (n,2), cache) for a (n, in) batch."""
        obs = _check_input(obs, self.in_dim).reshape(-1, self.in_dim)
        z, cache = self._forward_body(obs)
        mean = np.stack([sigmoid(z[:, 0]), np.tanh(z[:, 1])], axis=1)
        cache['mean'] = mean
        return mean, cache

    def log_std(self) -> np.ndarray:
        return self.params.get('log_std', np.full(2, -np.inf))

    def backward_mean(self, cache, g_mean: np.ndarray, g_log_std: Optional[np.ndarray] = None):
        """Backprop dL/dmean (and optionally dL/dlog_std) to all parameters."""
        mean = cache['mean']
        g_z = np.stack([
            g_mean[:, 0] * mean[:, 0] * (1.0 - mean[:, 0]),
            g_mean[:, 1] * (1.0 - mean[:, 1] ** 2),
        ], axis=1)
        grads, g_x = self.backward(cache, g_z)
        if 'log_std' in self.params:
            grads['log_std'] = np.zeros(2) if g_log_std is None else np.asarray(g_log_std, dtype=np.float64)
        return grads, g_x


class CriticNetwork(Network):
    """Scalar value (or Q-value when fed state+action) with a linear head."""

    kind = 'critic'

    def __init__(self, in_dim: int = 16, body: str = 'res', hidden: int = HIDDEN,
                 rng: Optional[np.random.Generator] = None, head_scale: float = HEAD_SCALE):
        super().__init__(in_dim, 1, body=body, hidden=hidden, rng=rng, head_scale=head_scale)

    def forward(self, x: np.ndarray):
        """(values (n,), cache) for a (n, in) batch."""
        x = _check_input(x, self.in_dim).reshape(-1, self.in_dim)
        z, cache = self._forward_body(x)
        return z[:, 0], cache

    def backward_value(self, cache, g_value: np.ndarray):
        return self.backward(cache, np.asarray(g_value, dtype=np.float64).reshape(-1, 1))


def actor_forward(actor: ActorNetwork, obs) -> tuple:
    """Single observation -> (mean_lin, mean_ang, log_std)."""
    mean, _ = actor.forward(np.asarray(obs, dtype=np.float64).reshape(1, -1))
    return float(mean[0, 0]), float(mean[0, 1]), actor.log_std().copy()


def critic_forward(critic: CriticNetwork, obs) -> float:
    value, _ = critic.forward(np.asarray(obs, dtype=np.float64).reshape(1, -1))
    return float(value[0])


def flatten_params(params: dict) -> np.ndarray:
    """All parameters as one vector, in dict order."""
    return np.concatenate([v.ravel() for v in params.values()])


def assign_params(params: dict, flat: np.ndarray):
    """Inverse of flatten_params; writes into the existing arrays."""
    flat = np.asarray(flat, dtype=np.float64)
    total = sum(v.size for v in params.values())
    if flat.shape != (total,):
        raise ContractViolation(f'Expected {total} values, got shape {flat.shape}')
    offset = 0
    for value in params.values():
        value[...] = flat[offset:offset + value.size].reshape(value.shape)
        offset += value.size
    return params


def soft_update(target: Network, online: Network, tau: float):
    """Polyak averaging: target <- tau * online + (1 - tau) * target."""
    for name, value in online.params.items():
        target.params[name] *= (1.0 - tau)
        target.params[name] += tau * value


# ===================
# ADAM
# ===================

@dataclass
class AdamState:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict, **kwargs) -> 'AdamState':
        state = cls(**kwargs)
        state.m = {k: np.zeros_like(v) for k, v in params.items()}
        state.v = {k: np.zeros_like(v) for k, v in params.items()}
        return state


def adam_step(params: dict, grads: dict, state: AdamState):
    """Bias-corrected Adam, in place. Returns (params, state)."""
    if set(grads) - set(params):
        raise ContractViolation(f'Gradients for unknown parameters: {sorted(set(grads) - set(params))}')
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise ContractViolation(f'Gradient shape {g.shape} != parameter shape {params[name].shape} for {name}')
        m = state.m.setdefault(name, np.zeros_like(g))
        v = state.v.setdefault(name, np.zeros_like(g))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        params[name] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state
