"""Linear Q readout trained by Q-learning with experience replay."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConfigurationError, DimensionError, NumericalDivergenceError


@dataclass(frozen=True)
class Hyperparams:
    alpha: float = 4e-4
    gamma: float = 0.995

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigurationError("alpha must be positive")
        if not 0 < self.gamma < 1:
            raise ConfigurationError("gamma must lie in (0, 1)")


CARTPOLE_HYPERPARAMS = Hyperparams(alpha=0.000400, gamma=0.995)
MOUNTAINCAR_HYPERPARAMS = Hyperparams(alpha=0.000010, gamma=0.995)


@dataclass(frozen=True)
class EpsilonSchedule:
    eps0: float = 0.01
    k_eps: float = 0.04

    def __post_init__(self):
        if not 0 <= self.eps0 <= 1:
            raise ConfigurationError("eps0 must lie in [0, 1]")
        if not self.k_eps > 0:
            raise ConfigurationError("k_eps must be positive")

    def __call__(self, n_ep: int) -> float:
        return epsilon_at(self, n_ep)


def epsilon_at(schedule: EpsilonSchedule, n_ep: int) -> float:
    """Exploration rate eps0 + (1 - eps0) exp(-k_eps n_ep)."""
    if n_ep < 0:
        raise ValueError("episode index must be non-negative")
    return schedule.eps0 + (1.0 - schedule.eps0) * math.exp(-schedule.k_eps * n_ep)


def init_weights(N: int, A: int, seed) -> np.ndarray:
    """Readout weights of shape (A, N), i.i.d. uniform on [-0.1, 0.1]."""
    if N < 1 or A < 1:
        raise ConfigurationError(f"weight dimensions must be positive, got N={N}, A={A}")
    return np.random.default_rng(seed).uniform(-0.1, 0.1, size=(A, N))


def q_values(weights: np.ndarray, v: np.ndarray) -> np.ndarray:
    if weights.ndim != 2 or v.shape != (weights.shape[1],):
        raise DimensionError(f"weights {weights.shape} incompatible with node vector {v.shape}")
    return weights @ v


def select_action(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice; greedy ties go to the lowest index."""
    if len(q) == 0:
        raise DimensionError("empty Q vector")
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(len(q)))
    # np.argmax returns the first maximum
    return int(np.argmax(q))


@dataclass
class Transition:
    v_n: np.ndarray
    v_next: np.ndarray
    action: int
    reward: float
    terminal: bool = False


@numba.njit(cache=True)
def _td_sequential(w, V, Vn, actions, rewards, terminals, order, alpha, gamma):
    A, N = w.shape
    for t in range(order.shape[0]):
        j = order[t]
        a = actions[j]
        q_sa = 0.0
        for i in range(N):
            q_sa += w[a, i] * V[j, i]
        target = rewards[j]
        if not terminals[j]:
            best = -np.inf
            for b in range(A):
                q = 0.0
                for i in range(N):
                    q += w[b, i] * Vn[j, i]
                if q > best:
                    best = q
            target += gamma * best
        delta = target - q_sa
        if not math.isfinite(delta):
            return t
        step = alpha * delta
        for i in range(N):
            w[a, i] += step * V[j, i]
    return -1


def _td_mean(w, V, Vn, actions, rewards, terminals, order, alpha, gamma):
    idx = np.asarray(order)
    v, vn, a = V[idx], Vn[idx], actions[idx]
    q_sa = np.einsum("ij,ij->i", w[a], v)
    boot = np.where(terminals[idx], 0.0, gamma * (vn @ w.T).max(axis=1))
    delta = rewards[idx] + boot - q_sa
    if not np.all(np.isfinite(delta)):
        return int(np.argmin(np.isfinite(delta)))
    np.add.at(w, a, (alpha / len(idx)) * delta[:, None] * v)
    return -1


def td_update(weights: np.ndarray, t: Transition, h: Hyperparams) -> np.ndarray:
    """One Q-learning step on the row of ``t.action``, in place.

    The bootstrap term is dropped for terminal transitions.
    """
    N = weights.shape[1]
    if t.v_n.shape != (N,) or t.v_next.shape != (N,):
        raise DimensionError("node vectors do not match the weight width")
    if not 0 <= t.action < weights.shape[0]:
        raise DimensionError(f"action {t.action} out of range")
    bad = _td_sequential(
        weights, t.v_n[None, :].astype(np.float64), t.v_next[None, :].astype(np.float64),
        np.array([t.action], dtype=np.int64), np.array([t.reward], dtype=np.float64),
        np.array([t.terminal]), np.zeros(1, dtype=np.int64), h.alpha, h.gamma)
    if bad >= 0:
        raise NumericalDivergenceError("non-finite TD error")
    return weights


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions stored in preallocated arrays."""

    def __init__(self, N: int, capacity: int = 4000, seed=None):
        if capacity < 1:
            raise ConfigurationError("replay capacity must be positive")
        self.N = N
        self.capacity = capacity
        self.rng = np.random.default_rng(seed)
        self.v = np.zeros((capacity, N))
        self.v_next = np.zeros((capacity, N))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.terminals = np.zeros(capacity, dtype=np.bool_)
        self._head = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, t: Transition) -> "ReplayBuffer":
        if t.v_n.shape != (self.N,) or t.v_next.shape != (self.N,):
            raise DimensionError("transition node vectors do not match buffer width")
        k = self._head
        self.v[k] = t.v_n
        self.v_next[k] = t.v_next
        self.actions[k] = t.action
        self.rewards[k] = t.reward
        self.terminals[k] = t.terminal
        self._head = (k + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)
        return self

    def slots(self, logical) -> np.ndarray:
        """Storage slots for logical indices (0 = oldest)."""
        start = (self._head - self._size) % self.capacity
        return (start + np.asarray(logical, dtype=np.int64)) % self.capacity

    def __getitem__(self, i: int) -> Transition:
        if not -self._size <= i < self._size:
            raise IndexError(i)
        k = int(self.slots(i % self._size))
        return Transition(self.v[k].copy(), self.v_next[k].copy(), int(self.actions[k]),
                          float(self.rewards[k]), bool(self.terminals[k]))

    def __iter__(self):
        return (self[i] for i in range(self._size))

    def sample_slots(self, k: int) -> np.ndarray:
        k = min(k, self._size)
        return self.slots(self.rng.choice(self._size, size=k, replace=False))


def push_transition(buffer: ReplayBuffer, t: Transition) -> ReplayBuffer:
    return buffer.push(t)


def replay_update(weights: np.ndarray, buffer: ReplayBuffer, h: Hyperparams,
                  minibatch: int = 256, mode: str = "sequential") -> np.ndarray:
    """Sample up to ``minibatch`` stored transitions without replacement and learn from them.

    ``mode="sequential"`` applies :func:`td_update` to each sample in draw
    order; ``mode="mean"`` applies one averaged step. An empty buffer is a no-op.
    """
    if len(buffer) == 0:
        return weights
    if weights.shape[1] != buffer.N:
        raise DimensionError("buffer width does not match weights")
    order = buffer.sample_slots(minibatch)
    if mode == "sequential":
        fn = _td_sequential
    elif mode == "mean":
        fn = _td_mean
    else:
        raise ConfigurationError(f"unknown replay mode {mode!r}")
    bad = fn(weights, buffer.v, buffer.v_next, buffer.actions, buffer.rewards,
             buffer.terminals, order, h.alpha, h.gamma)
    if bad >= 0:
        raise NumericalDivergenceError(f"non-finite TD error at minibatch sample {bad}")
    return weights
