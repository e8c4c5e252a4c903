"""CartPole-v0 and MountainCar-v0 dynamics, written from the classic-control equations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UsageError


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    terminal: bool
    truncated: bool

    @property
    def done(self) -> bool:
        return self.terminal or self.truncated


@dataclass
class CartPoleState:
    x: float
    x_dot: float
    pole_angle: float
    pole_angle_dot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.pole_angle, self.pole_angle_dot])


@dataclass
class MountainCarState:
    position: float
    velocity: float

    def as_array(self) -> np.ndarray:
        return np.array([self.position, self.velocity])


class CartPole:
    name = "cartpole"
    n_state = 4
    n_actions = 2

    gravity = 9.8
    masscart = 1.0
    masspole = 0.1
    total_mass = masscart + masspole
    length = 0.5  # half the pole length
    polemass_length = masspole * length
    force_mag = 10.0
    tau = 0.02
    theta_threshold = 12 * 2 * math.pi / 360
    x_threshold = 2.4
    max_steps = 200

    def __init__(self, scales=(2.4, 3.0, 12 * 2 * math.pi / 360, 3.0), max_steps: int = 200):
        self.scales = np.asarray(scales, dtype=np.float64)
        if self.scales.shape != (4,) or np.any(self.scales <= 0):
            raise ConfigurationError("CartPole needs four positive normalization divisors")
        self.max_steps = max_steps
        self.state: CartPoleState | None = None
        self.steps = 0
        self._done = True

    def reset(self, rng: np.random.Generator) -> CartPoleState:
        self.state = CartPoleState(*rng.uniform(-0.05, 0.05, size=4))
        self.steps = 0
        self._done = False
        return self.state

    def step(self, action: int) -> tuple[CartPoleState, StepResult]:
        if self._done or self.state is None:
            raise UsageError("step() called on a finished episode; call reset()")
        if action not in (0, 1):
            raise ValueError(f"invalid CartPole action {action!r}")
        s = self.state
        force = self.force_mag if action == 1 else -self.force_mag
        costheta = math.cos(s.pole_angle)
        sintheta = math.sin(s.pole_angle)
        temp = (force + self.polemass_length * s.pole_angle_dot ** 2 * sintheta) / self.total_mass
        thetaacc = (self.gravity * sintheta - costheta * temp) / (
            self.length * (4.0 / 3.0 - self.masspole * costheta ** 2 / self.total_mass))
        xacc = temp - self.polemass_length * thetaacc * costheta / self.total_mass
        # explicit Euler, position before velocity
        self.state = CartPoleState(
            x=s.x + self.tau * s.x_dot,
            x_dot=s.x_dot + self.tau * xacc,
            pole_angle=s.pole_angle + self.tau * s.pole_angle_dot,
            pole_angle_dot=s.pole_angle_dot + self.tau * thetaacc,
        )
        self.steps += 1
        n = self.state
        terminal = bool(
            n.x < -self.x_threshold or n.x > self.x_threshold
            or n.pole_angle < -self.theta_threshold or n.pole_angle > self.theta_threshold)
        truncated = (not terminal) and self.steps >= self.max_steps
        self._done = terminal or truncated
        return n, StepResult(self.normalize(n), 1.0, terminal, truncated)

    def normalize(self, state: CartPoleState | None = None) -> np.ndarray:
        state = self.state if state is None else state
        return state.as_array() / self.scales


class MountainCar:
    name = "mountaincar"
    n_state = 2
    n_actions = 3

    min_position = -1.2
    max_position = 0.6
    max_speed = 0.07
    goal_position = 0.5
    goal_velocity = 0.0
    force = 0.001
    gravity = 0.0025

    def __init__(self, max_steps: int = 200):
        self.max_steps = max_steps
        self.state: MountainCarState | None = None
        self.steps = 0
        self._done = True

    def reset(self, rng: np.random.Generator) -> MountainCarState:
        self.state = MountainCarState(float(rng.uniform(-0.6, -0.4)), 0.0)
        self.steps = 0
        self._done = False
        return self.state

    def step(self, action: int) -> tuple[MountainCarState, StepResult]:
        if self._done or self.state is None:
            raise UsageError("step() called on a finished episode; call reset()")
        if action not in (0, 1, 2):
            raise ValueError(f"invalid MountainCar action {action!r}")
        position, velocity = self.state.position, self.state.velocity
        velocity += (action - 1) * self.force + math.cos(3 * position) * (-self.gravity)
        velocity = min(max(velocity, -self.max_speed), self.max_speed)
        position += velocity
        position = min(max(position, self.min_position), self.max_position)
        if position == self.min_position and velocity < 0:
            velocity = 0.0
        self.state = MountainCarState(position, velocity)
        self.steps += 1
        terminal = bool(position >= self.goal_position and velocity >= self.goal_velocity)
        truncated = (not terminal) and self.steps >= self.max_steps
        self._done = terminal or truncated
        return self.state, StepResult(self.normalize(self.state), -1.0, terminal, truncated)

    def normalize(self, state: MountainCarState | None = None) -> np.ndarray:
        state = self.state if state is None else state
        half = 0.5 * (self.max_position - self.min_position)
        centre = 0.5 * (self.max_position + self.min_position)
        return np.array([(state.position - centre) / half, state.velocity / self.max_speed])


TASKS = {"cartpole": CartPole, "mountaincar": MountainCar}


def make_env(task: str, **kwargs):
    try:
        return TASKS[task](**kwargs)
    except KeyError:
        raise ConfigurationError(f"unknown task {task!r}; expected one of {sorted(TASKS)}") from None


def normalize_observation(task: str, state) -> np.ndarray:
    return make_env(task).normalize(state)
