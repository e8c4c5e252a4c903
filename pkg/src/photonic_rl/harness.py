"""Training loop, sweeps, fixed-weight evaluation and file formats."""

from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .agent import (EpsilonSchedule, Hyperparams, ReplayBuffer, Transition, epsilon_at,
                    init_weights, q_values, replay_update, select_action)
from .envs import make_env
from .errors import ConfigurationError, DimensionError, NumericalDivergenceError, ParseError
from .preprocess import InputScaling, MaskMatrix, encode_state, generate_mask
from .reservoir import Reservoir, ReservoirParams


TASK_ALPHA = {"cartpole": 0.000400, "mountaincar": 0.000010}
SOLVED_MOUNTAINCAR = -110.0
WINDOW = 100
CSV_HEADER = ["episode", "steps", "total_reward", "moving_avg_100", "epsilon"]

_DEFAULT_RESERVOIR = ReservoirParams()


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "cartpole"
    episodes: int = 500
    seed: int = 0
    # reservoir
    tau_L: float = _DEFAULT_RESERVOIR.tau_L
    tau_H: float = _DEFAULT_RESERVOIR.tau_H
    tau: float = _DEFAULT_RESERVOIR.tau
    beta: float = _DEFAULT_RESERVOIR.beta
    kappa: float = _DEFAULT_RESERVOIR.kappa
    phi0: float = _DEFAULT_RESERVOIR.phi0
    noise_sigma: float = _DEFAULT_RESERVOIR.noise_sigma
    N: int = _DEFAULT_RESERVOIR.N
    theta: float = _DEFAULT_RESERVOIR.theta
    dt_divisor: int = 8
    scheme: str = "fitted"
    sampling: str = "end"
    # preprocessing
    mu: float = 0.6
    bias: float = 0.8
    # learning; alpha=None picks the task default
    alpha: float | None = None
    gamma: float = 0.995
    eps0: float = 0.01
    k_eps: float = 0.04
    replay_capacity: int = 4000
    minibatch: int = 256
    replay_mode: str = "sequential"
    # False: the step limit ends the episode like a failure (no bootstrap)
    bootstrap_truncated: bool = False
    # normalization divisors
    cartpole_scales: tuple = (2.4, 3.0, 12 * 2 * math.pi / 360, 3.0)
    max_steps: int = 200
    # I/O and parallelism
    out: str | None = None
    weights_out: str | None = None
    weights_in: str | None = None
    save_weights_at: str = "final"  # or "best": snapshot at the max moving average
    trials: int = 10
    jobs: int = 1

    def __post_init__(self):
        if self.task not in TASK_ALPHA:
            raise ConfigurationError(f"unknown task {self.task!r}")
        if self.episodes < 0:
            raise ConfigurationError("episodes must be non-negative")
        if self.dt_divisor < 1 or int(self.dt_divisor) != self.dt_divisor:
            raise ConfigurationError("dt_divisor must be a positive integer")
        if self.minibatch < 1:
            raise ConfigurationError("minibatch must be positive")
        if self.trials < 1 or self.jobs < 1:
            raise ConfigurationError("trials and jobs must be positive")
        if self.save_weights_at not in ("final", "best"):
            raise ConfigurationError("save_weights_at must be 'final' or 'best'")
        self.hyperparams()
        self.schedule()

    @property
    def dt(self) -> float:
        return self.theta / self.dt_divisor

    def reservoir_params(self) -> ReservoirParams:
        return ReservoirParams(
            tau_L=self.tau_L, tau_H=self.tau_H, tau=self.tau, beta=self.beta,
            kappa=self.kappa, phi0=self.phi0, noise_sigma=self.noise_sigma, N=self.N,
            theta=self.theta, dt=self.dt, scheme=self.scheme, sampling=self.sampling)

    def scaling(self) -> InputScaling:
        return InputScaling(mu=self.mu, b=self.bias)

    def hyperparams(self) -> Hyperparams:
        alpha = TASK_ALPHA[self.task] if self.alpha is None else self.alpha
        return Hyperparams(alpha=alpha, gamma=self.gamma)

    def schedule(self) -> EpsilonSchedule:
        return EpsilonSchedule(eps0=self.eps0, k_eps=self.k_eps)

    def make_env(self):
        if self.task == "cartpole":
            return make_env("cartpole", scales=self.cartpole_scales, max_steps=self.max_steps)
        return make_env("mountaincar", max_steps=self.max_steps)


@dataclass
class EpisodeRecord:
    episode: int
    steps: int
    total_reward: float
    moving_avg_100: float
    epsilon: float


@dataclass
class TrainingLog:
    records: list[EpisodeRecord] = field(default_factory=list)
    solved_at: int | None = None
    weights: np.ndarray | None = None
    # copy taken when the full-window moving average last hit its maximum
    best_weights: np.ndarray | None = None
    best_episode: int | None = None

    @property
    def totals(self) -> np.ndarray:
        return np.array([r.total_reward for r in self.records])

    @property
    def moving_avg(self) -> np.ndarray:
        return np.array([r.moving_avg_100 for r in self.records])

    def max_moving_avg(self) -> float:
        """Best 100-episode average; full windows only once 100 episodes exist."""
        ma = self.moving_avg
        if len(ma) == 0:
            return math.nan
        if len(ma) >= WINDOW:
            ma = ma[WINDOW - 1:]
        return float(ma.max())


class TrainingAborted(NumericalDivergenceError):
    def __init__(self, message: str, partial: TrainingLog):
        super().__init__(message)
        self.partial = partial


@dataclass
class Streams:
    """Independent random streams fanned out from one seed."""

    mask: np.random.SeedSequence
    weights: np.random.SeedSequence
    env: np.random.Generator
    noise: np.random.SeedSequence
    replay: np.random.SeedSequence
    policy: np.random.Generator

    @classmethod
    def from_seed(cls, seed) -> "Streams":
        mask, weights, env, noise, replay, policy = np.random.SeedSequence(seed).spawn(6)
        return cls(mask, weights, np.random.default_rng(env), noise, replay,
                   np.random.default_rng(policy))


def run_episode(reservoir: Reservoir, mask: MaskMatrix, scaling: InputScaling,
                weights: np.ndarray, buffer: ReplayBuffer | None, env, h: Hyperparams,
                epsilon: float, *, env_rng: np.random.Generator,
                policy_rng: np.random.Generator, minibatch: int = 256,
                replay_mode: str = "sequential", learn: bool = True,
                bootstrap_truncated: bool = False) -> EpisodeRecord:
    """Play one episode; with ``learn`` the weights and buffer are updated in place.

    The transition for step n is pushed once v_{n+1} is known, so each
    environment step triggers exactly one replay update. Failure or goal
    terminations store a zero v_next. A step-limit ending is stored the same
    way unless ``bootstrap_truncated``, in which case the reservoir is driven
    once more so the last transition can bootstrap.
    """
    if weights.shape != (env.n_actions, reservoir.params.N) or mask.n_state != env.n_state:
        raise DimensionError("reservoir, mask, weights and environment disagree in size")
    reservoir.reset()
    env.reset(env_rng)
    obs = env.normalize()
    total = 0.0
    steps = 0
    pending = None

    def commit(v_next, terminal):
        v_prev, a, r = pending
        buffer.push(Transition(v_prev, v_next, a, r, terminal))
        replay_update(weights, buffer, h, minibatch, replay_mode)

    while True:
        v = reservoir.drive(encode_state(obs, mask, scaling))
        if learn and pending is not None:
            commit(v, False)
        action = select_action(q_values(weights, v), epsilon, policy_rng)
        _, result = env.step(action)
        total += result.reward
        steps += 1
        obs = result.observation
        pending = (v, action, result.reward)
        if result.terminal:
            if learn:
                commit(np.zeros_like(v), True)
            break
        if result.truncated:
            if learn and bootstrap_truncated:
                commit(reservoir.drive(encode_state(obs, mask, scaling)), False)
            elif learn:
                commit(np.zeros_like(v), True)
            break
    return EpisodeRecord(0, steps, total, math.nan, epsilon)


def _moving_avg(totals: list[float]) -> float:
    return float(np.mean(totals[-WINDOW:]))


def _solved(task: str, totals: list[float], max_steps: int) -> bool:
    if len(totals) < WINDOW:
        return False
    if task == "cartpole":
        return all(t == max_steps for t in totals[-WINDOW:])
    return _moving_avg(totals) >= SOLVED_MOUNTAINCAR


@dataclass
class Components:
    reservoir: Reservoir
    mask: MaskMatrix
    weights: np.ndarray
    buffer: ReplayBuffer
    env: object
    streams: Streams


def build(config: ExperimentConfig, weights: np.ndarray | None = None) -> Components:
    streams = Streams.from_seed(config.seed)
    env = config.make_env()
    mask = generate_mask(streams.mask, config.N, env.n_state)
    reservoir = Reservoir(config.reservoir_params(), streams.noise)
    if weights is None:
        weights = init_weights(config.N, env.n_actions, streams.weights)
    elif weights.shape != (env.n_actions, config.N):
        raise DimensionError(
            f"weights have shape {weights.shape}, expected {(env.n_actions, config.N)}")
    buffer = ReplayBuffer(config.N, config.replay_capacity, streams.replay)
    return Components(reservoir, mask, weights, buffer, env, streams)


def _loop(config: ExperimentConfig, c: Components, learn: bool, progress=None) -> TrainingLog:
    h = config.hyperparams()
    schedule = config.schedule()
    scaling = config.scaling()
    out = TrainingLog(weights=c.weights)
    totals: list[float] = []
    best = -math.inf
    for n_ep in range(config.episodes):
        eps = epsilon_at(schedule, n_ep) if learn else 0.0
        try:
            rec = run_episode(c.reservoir, c.mask, scaling, c.weights, c.buffer, c.env, h, eps,
                              env_rng=c.streams.env, policy_rng=c.streams.policy,
                              minibatch=config.minibatch, replay_mode=config.replay_mode,
                              learn=learn, bootstrap_truncated=config.bootstrap_truncated)
        except NumericalDivergenceError as exc:
            raise TrainingAborted(f"episode {n_ep + 1}: {exc}", out) from exc
        totals.append(rec.total_reward)
        rec.episode = n_ep + 1
        rec.moving_avg_100 = _moving_avg(totals)
        out.records.append(rec)
        if out.solved_at is None and _solved(config.task, totals, config.max_steps):
            out.solved_at = rec.episode
        full = len(totals) >= WINDOW or config.episodes < WINDOW
        if full and (out.best_episode is None or rec.moving_avg_100 > best):
            best = rec.moving_avg_100
            out.best_weights, out.best_episode = c.weights.copy(), rec.episode
        if progress is not None:
            progress(rec)
    return out


def train(config: ExperimentConfig, progress=None) -> TrainingLog:
    """Run Q-learning for ``config.episodes`` episodes from a fresh seeded setup.

    ``solved_at`` is the 1-based episode that first meets the task criterion:
    100 consecutive full-length episodes for CartPole, a 100-episode average
    of at least -110 for MountainCar.
    """
    return _loop(config, build(config), learn=True, progress=progress)


def evaluate_fixed(weights: np.ndarray, config: ExperimentConfig, episodes: int | None = None,
                   progress=None, eval_seed: int | None = None) -> TrainingLog:
    """Greedy play with frozen weights; nothing is stored or updated.

    The mask always comes from ``config.seed`` so the weights see the reservoir
    they were trained on. ``eval_seed`` reseeds the episode starts and the
    reservoir noise only.
    """
    if episodes is not None:
        config = replace(config, episodes=episodes)
    c = build(config, weights=np.array(weights, dtype=np.float64))
    if eval_seed is not None:
        env, noise = np.random.SeedSequence([config.seed, eval_seed]).spawn(2)
        c.streams.env = np.random.default_rng(env)
        c.reservoir.rng = np.random.default_rng(noise)
    return _loop(config, c, learn=False, progress=progress)


# sweeps

SWEEP_PARAMS = {"bias": "bias", "b": "bias", "kappa": "kappa", "feedback": "kappa"}


def trial_seed(base_seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([base_seed, trial]).generate_state(1)[0])


def _sweep_cell(args) -> float:
    config, field_name, value, trial = args
    cfg = replace(config, **{field_name: value}, seed=trial_seed(config.seed, trial))
    return train(cfg).max_moving_avg()


@dataclass
class SweepResult:
    param: str
    rows: list[tuple[float, int, float]]

    def summary(self) -> list[tuple[float, float, float, float]]:
        out = []
        for value in dict.fromkeys(r[0] for r in self.rows):
            vals = np.array([r[2] for r in self.rows if r[0] == value])
            out.append((value, float(vals.mean()), float(vals.min()), float(vals.max())))
        return out


def sweep(config: ExperimentConfig, param: str, values, trials: int | None = None,
          jobs: int | None = None) -> SweepResult:
    """Max 100-episode average per (value, trial); trial t uses the same seed for every value."""
    values = [float(v) for v in values]
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    try:
        field_name = SWEEP_PARAMS[param]
    except KeyError:
        raise ConfigurationError(f"cannot sweep {param!r}; use 'bias' or 'kappa'") from None
    trials = config.trials if trials is None else trials
    jobs = config.jobs if jobs is None else jobs
    if trials < 1:
        raise ConfigurationError("trials must be at least 1")
    cells = [(config, field_name, v, t) for v in values for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(cell) for cell in cells]
    rows = [(v, t, r) for (_, _, v, t), r in zip(cells, results)]
    return SweepResult(field_name, rows)


# file formats

def _fmt(value: float) -> str:
    return repr(float(value))


def export_csv(log_: TrainingLog, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in log_.records:
            w.writerow([r.episode, r.steps, _fmt(r.total_reward), _fmt(r.moving_avg_100),
                        _fmt(r.epsilon)])


def read_csv(path) -> list[EpisodeRecord]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ParseError(f"unexpected header {header!r}", 1)
        records = []
        for lineno, row in enumerate(reader, start=2):
            try:
                records.append(EpisodeRecord(int(row[0]), int(row[1]), float(row[2]),
                                             float(row[3]), float(row[4])))
            except (ValueError, IndexError) as exc:
                raise ParseError(str(exc), lineno) from None
    return records


def export_sweep(result: SweepResult, path, summary_path=None) -> None:
    path = Path(path)
    if summary_path is None:
        summary_path = path.with_name(path.stem + "_summary" + path.suffix)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["param_value", "trial", "max_moving_avg_100"])
        for value, trial, best in result.rows:
            w.writerow([_fmt(value), trial, _fmt(best)])
    with open(summary_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["param_value", "mean", "min", "max"])
        for row in result.summary():
            w.writerow([_fmt(x) for x in row])


def save_weights(weights: np.ndarray, path) -> None:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2:
        raise DimensionError("weights must be a 2-D array")
    A, N = weights.shape
    with open(path, "w") as f:
        f.write(f"{A} {N}\n")
        for row in weights:
            f.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_weights(path) -> np.ndarray:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise ParseError("empty weights file", 1)
    head = lines[0].split()
    try:
        A, N = (int(t) for t in head)
    except ValueError:
        raise ParseError(f"expected 'A N' header, got {lines[0]!r}", 1) from None
    if A < 1 or N < 1:
        raise ParseError("dimensions must be positive", 1)
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    weights = np.empty((A, N))
    for i, line in enumerate(body):
        if i >= A:
            raise ParseError(f"expected {A} weight rows, found more", i + 2)
        tokens = line.split()
        if len(tokens) != N:
            raise ParseError(f"expected {N} values, found {len(tokens)}", i + 2)
        try:
            weights[i] = [float(t) for t in tokens]
        except ValueError as exc:
            raise ParseError(str(exc), i + 2) from None
    if len(body) != A:
        raise ParseError(f"expected {A} weight rows, found {len(body)}", len(body) + 2)
    return weights


# config files: "key = value" lines

def _coerce(name: str, raw: str):
    types = {f.name: f for f in fields(ExperimentConfig)}
    if name not in types:
        raise ConfigurationError(f"unknown config key {name!r}")
    default = types[name].default
    raw = raw.strip()
    if name in ("alpha", "out", "weights_out", "weights_in"):
        if raw.lower() in ("", "none"):
            return None
        return float(raw) if name == "alpha" else raw
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(float(t) for t in raw.replace(",", " ").split())
    return raw


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Dashes in keys become underscores."""
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {line!r}", lineno)
            key, raw = (s.strip() for s in line.split("=", 1))
            key = CONFIG_ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
            try:
                values[key] = _coerce(key, raw)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    return values


CONFIG_ALIASES = {"b": "bias"}


def config_to_dict(config: ExperimentConfig) -> dict:
    return dataclasses.asdict(config)
