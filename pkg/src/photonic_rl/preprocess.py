"""Input masking and temporal stretching.

A state s (length N_s) becomes the per-node input vector
``u = (mu*s, b) @ M`` with M of shape (N_s + 1, N); the last mask row
carries the bias. Each u[i] is then held for one node interval theta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError


@dataclass(frozen=True)
class InputScaling:
    mu: float = 0.6
    b: float = 0.8


# input scaling used with the hardware (feedback-free) setup
EXPERIMENT_SCALING = InputScaling(mu=0.5, b=0.4)


@dataclass(frozen=True, eq=False)
class MaskMatrix:
    entries: np.ndarray
    seed: int | None = None

    @property
    def n_state(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def n_nodes(self) -> int:
        return self.entries.shape[1]

    @property
    def bias_row(self) -> np.ndarray:
        return self.entries[-1]


def generate_mask(seed, N: int, N_s: int) -> MaskMatrix:
    """Draw an (N_s + 1) x N mask, i.i.d. uniform on [-1, 1]."""
    if N < 1 or N_s < 1:
        raise ConfigurationError(f"mask dimensions must be positive, got N={N}, N_s={N_s}")
    rng = np.random.default_rng(seed)
    entries = rng.uniform(-1.0, 1.0, size=(N_s + 1, N))
    entries.setflags(write=False)
    return MaskMatrix(entries, seed if isinstance(seed, int) else None)


def encode_state(s, mask: MaskMatrix, scaling: InputScaling) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (mask.n_state,):
        raise DimensionError(f"state has shape {s.shape}, mask expects ({mask.n_state},)")
    row = np.empty(mask.n_state + 1)
    row[:-1] = scaling.mu * s
    row[-1] = scaling.b
    return row @ mask.entries


@dataclass(frozen=True, eq=False)
class Waveform:
    """Piecewise-constant u(t): ``values[i]`` on [i*theta, (i+1)*theta)."""

    values: np.ndarray
    theta: float

    @property
    def span(self) -> float:
        return len(self.values) * self.theta

    def __call__(self, t: float) -> float:
        if not 0.0 <= t < self.span:
            raise ValueError(f"t={t!r} outside [0, {self.span!r})")
        i = int(t // self.theta)
        # floor division can land one interval off near a boundary
        if (i + 1) * self.theta <= t:
            i += 1
        elif i * self.theta > t:
            i -= 1
        return float(self.values[min(i, len(self.values) - 1)])


def build_waveform(u, theta: float) -> Waveform:
    return Waveform(np.asarray(u, dtype=np.float64), theta)
