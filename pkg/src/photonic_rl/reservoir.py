"""Optoelectronic delay reservoir.

The MZM output x and the high-pass integral y obey

    tau_L dx/dt = -(1 + tau_L/tau_H) x - y + beta cos^2(kappa x(t - tau) + pi/4 u(t) + phi0)
    tau_H dy/dt = x

driven by a piecewise-constant input u(t) that holds one value per node
interval theta. One call to :meth:`Reservoir.drive` integrates one mask
period N*theta and returns the node vector.

Three fixed-step explicit schemes are available. All integrate the stiff
linear decay of x exactly except ``"heun"``.

``"fitted"`` (default) writes each step as the variation-of-constants
integral x_{n+1} = e^{-lam h} x_n + int e^{-lam(h-s)} G(s) ds / tau_L and
evaluates it by Gauss-Legendre quadrature. The forcing G depends on the
delayed x, which after every input switch relaxes on the tau_L scale, faster
than one step (dt = theta/8 is about 3.9 tau_L). The history is therefore
stored with the one-sided derivatives at both ends of every step and
reconstructed inside a step from {1, s, e^{-lam s}, s e^{-lam s}}, which
reproduces those relaxation transients. y is integrated from the same
quadrature.

``"etd"`` is exponential Heun (ETD2) with a linear-in-time forcing.
``"heun"`` is the plain explicit trapezoidal rule; it diverges at the default
step and is kept for small-dt checks.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, replace

import numba
import numpy as np

from .errors import ConfigurationError, DimensionError, NumericalDivergenceError

SCHEMES = ("fitted", "etd", "heun")
SAMPLING = ("end", "mean")

_SCHEME_CODE = {"etd": 0, "heun": 1, "fitted": 2}
QUADRATURE_POINTS = 4
_SAMPLING_CODE = {"end": 0, "mean": 1}


@dataclass(frozen=True)
class ReservoirParams:
    tau_L: float = 1.0 / (2.0 * math.pi * 12.5e9)
    tau_H: float = 1.0 / (2.0 * math.pi * 0.625e6)
    tau: float = 239.6e-9
    beta: float = 1.0
    kappa: float = 0.9
    phi0: float = -0.25 * math.pi
    noise_sigma: float = 1e-3
    N: int = 600
    theta: float = 0.4e-9
    dt: float = 0.05e-9
    scheme: str = "fitted"
    sampling: str = "end"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("tau_L", "tau_H", "theta", "dt"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive, got {value!r}")
        for name in ("beta", "kappa", "phi0", "noise_sigma", "tau"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be non-negative")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError(f"N must be a positive integer, got {self.N!r}")
        ratio = self.theta / self.dt
        if abs(ratio - round(ratio)) > 1e-6 * ratio or round(ratio) < 1:
            raise ConfigurationError(
                f"theta/dt must be a positive integer, got {ratio:.9g}")
        if self.tau < self.dt:
            raise ConfigurationError("tau must be at least one integration step")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.sampling not in SAMPLING:
            raise ConfigurationError(f"unknown sampling {self.sampling!r}")

    @property
    def steps_per_node(self) -> int:
        return int(round(self.theta / self.dt))

    @property
    def mask_period(self) -> float:
        return self.N * self.theta

    @property
    def delay_steps(self) -> float:
        """Delay in units of dt (may be fractional)."""
        return self.tau / self.dt

    @property
    def buffer_length(self) -> int:
        d = self.delay_steps
        if abs(d - round(d)) < 1e-9:
            return int(round(d)) + 1
        return int(math.floor(d)) + 2

    @property
    def noise_std(self) -> float:
        """Per-step standard deviation of the additive noise on x."""
        return self.noise_sigma * math.sqrt(self.dt / self.tau_L)

    def with_dt_divisor(self, divisor: int) -> "ReservoirParams":
        return replace(self, dt=self.theta / divisor)


@numba.njit(cache=True)
def _delayed(buf, w, d0, frac, ahead):
    # x(t_{n+ahead} - tau) with x_n stored at buf[w]
    L = buf.shape[0]
    i0 = (w + ahead - d0) % L
    if frac == 0.0:
        return buf[i0]
    return (1.0 - frac) * buf[i0] + frac * buf[(i0 - 1) % L]


@numba.njit(cache=True)
def _integrate(state, buf, u_nodes, steps_per_node, noise, out, consts,
               scheme, sampling, d0, frac):
    """Advance the delay system over len(u_nodes) node intervals.

    ``state`` is [x, y, w] with w the ring-buffer slot of the current x.
    Writes one sample per node into ``out``. Returns the index of the first
    node whose state became non-finite, or -1.
    """
    tau_L, tau_H, beta, kappa, phi0, h, noise_std = (
        consts[0], consts[1], consts[2], consts[3], consts[4], consts[5], consts[6])
    L = buf.shape[0]
    x = state[0]
    y = state[1]
    w = int(state[2])
    c = 1.0 + tau_L / tau_H
    lam = c / tau_L
    E = math.exp(-lam * h)
    phi1 = (1.0 - E) / lam
    phi2 = (E - 1.0 + lam * h) / (lam * lam * h)
    quarter_pi = 0.25 * math.pi
    use_noise = noise.shape[0] > 0
    k = 0
    bad = -1
    for i in range(u_nodes.shape[0]):
        drive = quarter_pi * u_nodes[i] + phi0
        acc = 0.0
        for _ in range(steps_per_node):
            xd0 = _delayed(buf, w, d0, frac, 0)
            xd1 = _delayed(buf, w, d0, frac, 1)
            cn = math.cos(kappa * xd0 + drive)
            yp = y + h * x / tau_H
            if scheme == 0:
                g0 = (beta * cn * cn - y) / tau_L
                xp = E * x + phi1 * g0
                cp = math.cos(kappa * xd1 + drive)
                g1 = (beta * cp * cp - yp) / tau_L
                xn = xp + phi2 * (g1 - g0)
            else:
                k1 = (-c * x - y + beta * cn * cn) / tau_L
                xp = x + h * k1
                cp = math.cos(kappa * xd1 + drive)
                k2 = (-c * xp - yp + beta * cp * cp) / tau_L
                xn = x + 0.5 * h * (k1 + k2)
            y = y + 0.5 * h * (x + xp) / tau_H
            if use_noise:
                xn += noise_std * noise[k]
            k += 1
            x = xn
            w = (w + 1) % L
            buf[w] = x
            acc += x
        if sampling == 0:
            out[i] = x
        else:
            out[i] = acc / steps_per_node
        if not (math.isfinite(x) and math.isfinite(y)):
            bad = i
            break
    state[0] = x
    state[1] = y
    state[2] = w
    return bad


def fitted_tables(params: ReservoirParams, points: int = QUADRATURE_POINTS):
    """Quadrature weights and history-interpolation coefficients for ``"fitted"``.

    Returns (kx, ky, sq, off, coef). Evaluation point q lies in the past step
    starting at n - d0 + off[q]; the delayed x there is
    coef[:, q] @ (x_j, x_{j+1}, x'_j+, x'_{j+1}-). The first ``points`` entries
    are the quadrature nodes sq, then the step start and the step end.
    """
    h = params.dt
    lam = (1.0 + params.tau_L / params.tau_H) / params.tau_L
    lh = lam * h  # work in units of h so the small systems are well scaled
    t, _ = np.polynomial.legendre.leggauss(points)
    rq = 0.5 * (t + 1.0)
    sq = h * rq
    # product-integration weights: exact for each kernel times any polynomial of
    # degree < points, moments taken by a much finer Gauss rule
    tf, wf = np.polynomial.legendre.leggauss(64)
    rf, wf = 0.5 * (tf + 1.0), 0.5 * wf
    V = np.vander(rq, points, increasing=True).T
    Vf = np.vander(rf, points, increasing=True).T
    ex = np.exp(-lh * (1.0 - rf))
    kx = h * np.linalg.solve(V, Vf @ (wf * ex))
    ky = h * np.linalg.solve(V, Vf @ (wf * (1.0 - ex))) / lam

    def basis(r):
        return np.array([1.0, r, math.exp(-lh * r), r * math.exp(-lh * r)])

    def dbasis(r):
        return np.array([0.0, 1.0, -lh * math.exp(-lh * r), (1.0 - lh * r) * math.exp(-lh * r)])

    # rows: x(0), x(1), h x'(0), h x'(1)
    A = np.array([basis(0.0), basis(1.0), dbasis(0.0), dbasis(1.0)])
    frac = params.delay_steps - math.floor(params.delay_steps)
    if abs(frac - round(frac)) < 1e-9:
        frac = 0.0
    off, coef = [], []
    for s_ in list(sq) + [0.0, h]:
        r = s_ / h - frac
        o = 0
        if r < 0.0:
            r, o = r + 1.0, -1
        if r == 0.0:
            c = np.array([1.0, 0.0, 0.0, 0.0])
        elif r == 1.0:
            c = np.array([0.0, 1.0, 0.0, 0.0])
        else:
            c = np.linalg.solve(A.T, basis(r))
            c[2:] *= h  # data are derivatives in 1/s
        off.append(o)
        coef.append(c)
    return kx, ky, sq, np.array(off, dtype=np.int64), np.array(coef).T.copy()


@numba.njit(cache=True)
def _integrate_fitted(state, buf, deriv, u_nodes, steps_per_node, noise, out, consts,
                      sampling, d0, kx, ky, sq, off, coef):
    """``"fitted"`` counterpart of :func:`_integrate`; ``deriv`` is (2, L).

    deriv[0, j] is x' just after t_j, deriv[1, j] is x' just before t_j.
    """
    tau_L, tau_H, beta, kappa, phi0, h, noise_std = (
        consts[0], consts[1], consts[2], consts[3], consts[4], consts[5], consts[6])
    L = buf.shape[0]
    m = sq.shape[0]
    x = state[0]
    y = state[1]
    w = int(state[2])
    lam = (1.0 + tau_L / tau_H) / tau_L
    E = math.exp(-lam * h)
    phi1 = (1.0 - E) / lam
    quarter_pi = 0.25 * math.pi
    use_noise = noise.shape[0] > 0
    P = off.shape[0]
    xd = np.empty(P)
    k = 0
    bad = -1
    for i in range(u_nodes.shape[0]):
        drive = quarter_pi * u_nodes[i] + phi0
        acc = 0.0
        for _ in range(steps_per_node):
            for q in range(P):
                j = (w - d0 + off[q]) % L
                j1 = (j + 1) % L
                xd[q] = (coef[0, q] * buf[j] + coef[1, q] * buf[j1]
                         + coef[2, q] * deriv[0, j] + coef[3, q] * deriv[1, j1])
            ax = 0.0
            ay = 0.0
            for q in range(m):
                cq = math.cos(kappa * xd[q] + drive)
                g = beta * cq * cq - (y + sq[q] * x / tau_H)
                ax += kx[q] * g
                ay += ky[q] * g
            c0 = math.cos(kappa * xd[m] + drive)
            deriv[0, w] = -lam * x + (beta * c0 * c0 - y) / tau_L
            xn = E * x + ax / tau_L
            area = phi1 * x + ay / tau_L  # integral of x over the step
            y = y + area / tau_H
            if use_noise:
                xn += noise_std * noise[k]
            k += 1
            x = xn
            w = (w + 1) % L
            buf[w] = x
            c1 = math.cos(kappa * xd[m + 1] + drive)
            deriv[1, w] = -lam * x + (beta * c1 * c1 - y) / tau_L
            acc += area
        if sampling == 0:
            out[i] = x
        else:
            out[i] = acc / (steps_per_node * h)
        if not (math.isfinite(x) and math.isfinite(y)):
            bad = i
            break
    state[0] = x
    state[1] = y
    state[2] = w
    return bad


class Reservoir:
    """Mutable integrator state for one delay system.

    Holds the current ``x``, ``y``, the ring buffer of past ``x`` samples at
    ``dt`` resolution and a seeded noise stream. Not thread-safe.
    """

    def __init__(self, params: ReservoirParams, noise_seed: int | np.random.SeedSequence = 0):
        params.validate()
        self.params = params
        self.rng = np.random.default_rng(noise_seed)
        self.delay_buffer = np.zeros(params.buffer_length)
        self._deriv = np.zeros((2, params.buffer_length))
        self._state = np.zeros(3)
        d = params.delay_steps
        if abs(d - round(d)) < 1e-9:
            self._d0, self._frac = int(round(d)), 0.0
        else:
            self._d0, self._frac = int(math.floor(d)), d - math.floor(d)
        p = params
        self._consts = np.array(
            [p.tau_L, p.tau_H, p.beta, p.kappa, p.phi0, p.dt, p.noise_std])
        self._scheme = _SCHEME_CODE[p.scheme]
        self._sampling = _SAMPLING_CODE[p.sampling]
        self._tables = fitted_tables(p) if p.scheme == "fitted" else None

    @property
    def x(self) -> float:
        return float(self._state[0])

    @x.setter
    def x(self, value: float) -> None:
        self._state[0] = value
        self.delay_buffer[self.write_index] = value

    @property
    def y(self) -> float:
        return float(self._state[1])

    @y.setter
    def y(self, value: float) -> None:
        self._state[1] = value

    @property
    def write_index(self) -> int:
        return int(self._state[2])

    def reset(self) -> "Reservoir":
        """Zero x, y and the delay buffer; the noise stream keeps its position."""
        self._state[:] = 0.0
        self.delay_buffer[:] = 0.0
        self._deriv[:] = 0.0
        return self

    def copy(self) -> "Reservoir":
        return copy.deepcopy(self)

    def _noise(self, n_steps: int) -> np.ndarray:
        if self.params.noise_sigma == 0.0:
            return np.empty(0)
        return self.rng.standard_normal(n_steps)

    def _run(self, u_nodes: np.ndarray, steps_per_node: int) -> np.ndarray:
        u_nodes = np.ascontiguousarray(u_nodes, dtype=np.float64)
        out = np.empty(u_nodes.shape[0])
        noise = self._noise(u_nodes.shape[0] * steps_per_node)
        if self._tables is not None:
            bad = _integrate_fitted(self._state, self.delay_buffer, self._deriv, u_nodes,
                                    steps_per_node, noise, out, self._consts, self._sampling,
                                    self._d0, *self._tables)
        else:
            bad = _integrate(self._state, self.delay_buffer, u_nodes, steps_per_node,
                             noise, out, self._consts, self._scheme, self._sampling,
                             self._d0, self._frac)
        if bad >= 0:
            raise NumericalDivergenceError(
                f"reservoir state became non-finite in interval {bad} "
                f"(x={self._state[0]!r}, y={self._state[1]!r}, dt={self.params.dt:.3g}, "
                f"scheme={self.params.scheme})")
        return out

    def step(self, u_value: float) -> "Reservoir":
        """Advance by a single integration step dt with input held at ``u_value``."""
        if not math.isfinite(u_value):
            raise ConfigurationError("input value must be finite")
        self._run(np.array([u_value]), 1)
        return self

    def drive(self, u: np.ndarray) -> np.ndarray:
        """Integrate one mask period holding ``u[i]`` over node interval i.

        Returns the length-N node vector (x at the end of each interval, or its
        interval mean if ``sampling="mean"``).
        """
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.params.N,):
            raise DimensionError(f"expected input of shape ({self.params.N},), got {u.shape}")
        return self._run(u, self.params.steps_per_node)

    def drive_sequence(self, inputs: np.ndarray) -> np.ndarray:
        return np.stack([self.drive(u) for u in inputs])

    def free_run(self, duration: float, sample_every: float) -> np.ndarray:
        """Integrate with u = 0 for ``duration`` seconds, sampling x every ``sample_every``."""
        if duration <= 0:
            return np.empty(0)
        dt = self.params.dt
        total = int(round(duration / dt))
        every = max(1, int(round(sample_every / dt)))
        n_samples, rest = divmod(total, every)
        samples = self._run(np.zeros(n_samples), every) if n_samples else np.empty(0)
        if rest:
            self._run(np.zeros(rest), 1)
        return samples


def init_reservoir(params: ReservoirParams, noise_seed: int = 0) -> Reservoir:
    return Reservoir(params, noise_seed)
