"""Deterministic fluid limit of the one-dimensional network on ``[-N, N]``.

Coordinates follow ``dy_i/dt = lam - y_i / sum_j a_{i-j} y_j`` while
positive and ``lam`` at zero; sites outside the window are zero.  The
right-hand side is bounded, so plain RK4 with clamping handles the switch
at zero without a stiff solver.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .dynamics import Box, DynamicsConfig, InitialCondition, run
from .driving import DrivingStream
from .errors import StepTooLargeError
from .interference import InterferenceSequence

DEFAULT_STEP = 1e-3
MAX_RELATIVE_CHANGE = 0.5


@dataclass
class FluidState:
    N: int
    y: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.y.shape != (2 * self.N + 1,):
            raise ValueError(f"expected {2 * self.N + 1} coordinates, got {self.y.shape}")
        if np.any(self.y < 0) or not np.all(np.isfinite(self.y)):
            raise ValueError("coordinates must be finite and non-negative")

    @classmethod
    def from_values(cls, values, t: float = 0.0) -> "FluidState":
        values = np.asarray(values, dtype=np.float64)
        if values.size % 2 == 0:
            raise ValueError("need an odd number of coordinates")
        return cls(values.size // 2, values, t)

    def __getitem__(self, i: int) -> float:
        return float(self.y[i + self.N]) if -self.N <= i <= self.N else 0.0

    @property
    def total(self) -> float:
        return float(self.y.sum())


def _kernel_weights(seq: InterferenceSequence) -> tuple[np.ndarray, np.ndarray]:
    if seq.dimension != 1:
        raise ValueError("the fluid system is one-dimensional")
    offs, w = seq.as_arrays()
    return offs[:, 0].copy(), w


@njit(cache=True)
def _rhs(y, lam, offs, w, out):
    n = y.size
    for i in range(n):
        yi = y[i]
        if yi <= 0.0:
            out[i] = lam
            continue
        s = 0.0
        for k in range(offs.size):
            j = i - offs[k]
            if 0 <= j < n:
                s += w[k] * y[j]
        out[i] = lam - yi / s


@njit(cache=True)
def _rk4(y0, lam, offs, w, h, nsteps, every, limit):
    """Returns (samples, failed step or -1, failed coordinate)."""
    n = y0.size
    out = np.empty((nsteps // every + 1, n))
    y = y0.copy()
    out[0] = y
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    row = 1
    for step in range(1, nsteps + 1):
        _rhs(y, lam, offs, w, k1)
        for i in range(n):
            tmp[i] = max(y[i] + 0.5 * h * k1[i], 0.0)
        _rhs(tmp, lam, offs, w, k2)
        for i in range(n):
            tmp[i] = max(y[i] + 0.5 * h * k2[i], 0.0)
        _rhs(tmp, lam, offs, w, k3)
        for i in range(n):
            tmp[i] = max(y[i] + h * k3[i], 0.0)
        _rhs(tmp, lam, offs, w, k4)
        for i in range(n):
            delta = h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
            # unit floor: small coordinates are judged on absolute change
            if abs(delta) > limit * max(y[i], 1.0):
                return out[:row], step, i
            y[i] = max(y[i] + delta, 0.0)
        if step % every == 0:
            out[row] = y
            row += 1
    return out[:row], -1, -1


@dataclass
class Trajectory:
    N: int
    times: np.ndarray
    states: np.ndarray  # (samples, 2N + 1)
    J: np.ndarray

    def state(self, k: int) -> FluidState:
        return FluidState(self.N, self.states[k], float(self.times[k]))

    def __len__(self) -> int:
        return self.times.size

    def csv_text(self) -> str:
        head = ["t"] + [f"y{i}" for i in range(-self.N, self.N + 1)] + ["J"]
        lines = [",".join(head)]
        for t, row, j in zip(self.times, self.states, self.J):
            lines.append(",".join(repr(float(v)) for v in (t, *row, j)))
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.csv_text())


def fluid_rhs(state: FluidState, lam: float, seq: InterferenceSequence) -> np.ndarray:
    offs, w = _kernel_weights(seq)
    out = np.empty_like(state.y)
    _rhs(state.y, float(lam), offs, w, out)
    return out


def integrate(
    initial: FluidState,
    lam: float,
    seq: InterferenceSequence,
    step: float = DEFAULT_STEP,
    horizon: float = 1.0,
    sample_interval: float | None = None,
) -> Trajectory:
    """RK4 with negatives clamped to zero after every stage.

    Samples are taken every ``sample_interval`` (rounded to whole steps),
    starting with the initial state.
    """
    if step <= 0 or horizon < 0:
        raise ValueError("need step > 0 and horizon >= 0")
    nsteps = int(round(horizon / step))
    every = max(1, int(round((sample_interval or horizon / 100 or step) / step)))
    offs, w = _kernel_weights(seq)
    ys, failed, coord = _rk4(initial.y, float(lam), offs, w, float(step), nsteps, every,
                             MAX_RELATIVE_CHANGE)
    if failed >= 0:
        raise StepTooLargeError(
            f"step {step} moved coordinate {coord - initial.N} by more than "
            f"{MAX_RELATIVE_CHANGE:.0%} at t={initial.t + failed * step:g}",
            step=step, coordinate=coord - initial.N, time=initial.t + failed * step,
        )
    times = initial.t + step * every * np.arange(ys.shape[0])
    J = np.array([lyapunov_value(row, offs, w) for row in ys])
    return Trajectory(initial.N, times, ys, J)


class Unimodality(str, enum.Enum):
    STRICT = "strict"
    WEAK = "weak"
    NONE = "none"


def unimodality(state: FluidState | np.ndarray, tol: float = 0.0) -> Unimodality:
    """Classify a profile; ``tol`` loosens the weak comparisons."""
    y = state.y if isinstance(state, FluidState) else np.asarray(state, dtype=np.float64)
    N = y.size // 2
    right, left = y[N:], y[N::-1]
    scale = np.maximum(np.abs(right), np.abs(left))
    if np.any(np.abs(right - left) > 1e-9 * scale + tol):
        return Unimodality.NONE
    diffs = np.diff(right)
    if np.all(diffs < 0) and np.all(y > 0):
        return Unimodality.STRICT
    if np.all(diffs <= tol) and np.all(y >= -tol):
        return Unimodality.WEAK
    return Unimodality.NONE


def lyapunov_value(y: np.ndarray, offs: np.ndarray, w: np.ndarray) -> float:
    n = y.size
    total = 0.0
    for off, a in zip(offs, w):
        lo, hi = max(0, -off), min(n, n - off)
        if lo < hi:
            total += float(a) * float(np.dot(y[lo:hi], y[lo + off:hi + off]))
    return total


@dataclass(frozen=True)
class LyapunovRecord:
    J: float
    slope_bound_width3: float
    slope_bound_general: float


def lyapunov(state: FluidState, seq: InterferenceSequence, lam: float) -> LyapunovRecord:
    """``J`` together with the two displayed lower bounds on its slope.

    The width-3 bound is only meaningful for unit weights on ``{-1, 0, 1}``;
    the general one assumes a monotone profile.
    """
    offs, w = _kernel_weights(seq)
    N, y = state.N, state.y
    J = lyapunov_value(y, offs, w)
    width3 = (4 * (3 * lam - 1) * N - 2 * lam) * state[N]
    L = seq.support_radius
    total = seq.total
    if L == 0:
        general = math.nan
    else:
        tail = sum(state[j] for j in range(N - L, N + 1))
        general = 2 * ((lam * total - 1) * (N // L) - 2 * total) * tail
    return LyapunovRecord(J, width3, general)


@dataclass
class FluidVerdict:
    unimodality_ok: bool
    J_monotone: bool
    slope_bound_ok: bool
    worst_slope_margin: float

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def check_trajectory(
    traj: Trajectory,
    seq: InterferenceSequence,
    lam: float,
    unimodal_tol: float = 1e-6,
    slope_tol: float = 1e-4,
) -> FluidVerdict:
    """Unimodality at every sample, monotone J and the width-3 slope bound."""
    uni = all(unimodality(row, unimodal_tol) is not Unimodality.NONE for row in traj.states)
    mono = bool(np.all(np.diff(traj.J) >= 0))
    worst = math.inf
    for k in range(len(traj) - 1):
        slope = (traj.J[k + 1] - traj.J[k]) / (traj.times[k + 1] - traj.times[k])
        bound = lyapunov(traj.state(k), seq, lam).slope_bound_width3
        worst = min(worst, slope - bound)
    return FluidVerdict(bool(uni), mono, bool(worst >= -slope_tol), float(worst))


def step_halving_error(
    initial: FluidState,
    lam: float,
    seq: InterferenceSequence,
    step: float = DEFAULT_STEP,
    horizon: float = 1.0,
    sample_interval: float | None = None,
) -> float:
    """Sup-norm gap between runs at ``step`` and ``step / 2`` over shared samples."""
    coarse = integrate(initial, lam, seq, step, horizon, sample_interval)
    fine = integrate(initial, lam, seq, step / 2, horizon, sample_interval)
    return float(np.max(np.abs(coarse.states - fine.states)))


def unimodal_profile(N: int, peak: float = 1.0, decay: float = 0.1) -> FluidState:
    """A strictly unimodal tent ``peak * exp(-decay |i|)``."""
    i = np.arange(-N, N + 1)
    return FluidState(N, peak * np.exp(-decay * np.abs(i)))


@dataclass
class ScalingPoint:
    scale: int
    seed: int
    sup_error: float


def scaling_check(
    initial: FluidState,
    lam: float,
    seq: InterferenceSequence,
    horizon: float,
    scales=(100, 400),
    seeds=(0,),
    step: float = DEFAULT_STEP,
) -> list[ScalingPoint]:
    """Compare ``x(z t) / z`` from box simulations with the fluid solution at ``t``.

    The box of half-width ``N`` matches the fluid window, whose outside is zero.
    """
    fluid = integrate(initial, lam, seq, step, horizon, horizon).states[-1]
    N = initial.N
    out = []
    for z in scales:
        start = {(i,): int(round(z * initial[i])) for i in range(-N, N + 1)}
        cfg = DynamicsConfig(seq, lam, Box(N))
        for seed in seeds:
            res = run(cfg, InitialCondition.explicit(start), DrivingStream(seed, lam), 0.0, z * horizon)
            scaled = np.array([res.state[(i,)] for i in range(-N, N + 1)], dtype=np.float64) / z
            out.append(ScalingPoint(z, seed, float(np.max(np.abs(scaled - fluid)))))
    return out


__all__ = [
    "FluidState", "FluidVerdict", "LyapunovRecord", "ScalingPoint", "Trajectory", "Unimodality",
    "check_trajectory", "fluid_rhs", "integrate", "lyapunov", "scaling_check",
    "step_halving_error", "unimodal_profile", "unimodality",
]
