"""Exact infinite-lattice values through finite dependency sets.

Time ``[t0, t0 + T)`` is cut into blocks of length ``t_hat``.  A site is
*open* in a block when it has at least one arrival or potential departure
there.  Inside one block only open sites move, and an open site only needs
the counts of its sup-norm ball of radius ``L``.  Linking open sites that
lie in each other's balls gives clusters; with ``t_hat`` chosen so that a
site is open with probability at most ``p < 1/(2L+1)^d`` the linking is a
subcritical branching structure and clusters are finite.

Working backwards from the target site gives nested sets
``L_kappa <= ... <= L_1``; running the dynamics restricted to ``L_i``
during block ``i`` reproduces the infinite-lattice values on ``L_i``.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .driving import DrivingStream
from .dynamics import (
    DynamicsConfig,
    InitialCondition,
    QueueState,
    Restricted,
    _site,
    coupled_run,
)
from .errors import ClusterCapExceededError
from .interference import InterferenceSequence

DEFAULT_CAP = 1_000_000


@dataclass(frozen=True)
class ConstructionParams:
    t_hat: float
    p: float
    B: int
    L: int
    d: int
    lam: float

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        if self.p * self.B >= 1:
            raise ValueError("p * B must be below 1")
        # a site must be open with probability at most p
        if math.exp(-(self.lam + 1) * self.t_hat) < (1 - self.p) * (1 - 1e-12):
            raise ValueError("block length too long for p")

    def kappa(self, T: float) -> int:
        """Number of blocks covering a horizon ``T``."""
        return math.ceil(T / self.t_hat - 1e-12) if T > 0 else 0

    def windows(self, T: float, t0: float = 0.0) -> list[tuple[float, float]]:
        k = self.kappa(T)
        out = [(t0 + i * self.t_hat, t0 + (i + 1) * self.t_hat) for i in range(k)]
        if out:
            out[-1] = (out[-1][0], t0 + T)
        return out


def block_length(lam: float, L: int, d: int, safety: float = 0.9) -> ConstructionParams:
    if lam < 0 or L < 0 or d < 1:
        raise ValueError("need lam >= 0, L >= 0 and d >= 1")
    if not 0 < safety < 1:
        raise ValueError("safety must lie in (0, 1)")
    B = (2 * L + 1) ** d
    p = safety / B
    t_hat = -math.log1p(-p) / (lam + 1)
    return ConstructionParams(t_hat, p, B, L, d, lam)


def _ball(z: tuple, L: int):
    for off in itertools.product(range(-L, L + 1), repeat=len(z)):
        yield tuple(a + b for a, b in zip(z, off))


class _Openness:
    """Memoized openness queries against a driving stream."""

    def __init__(self, driving: DrivingStream):
        self.driving = driving
        self.memo: dict = {}

    def __call__(self, site: tuple, window: tuple[float, float]) -> bool:
        key = (site, window)
        hit = self.memo.get(key)
        if hit is None:
            hit = self.memo[key] = self.driving.has_event(site, *window)
        return hit


def _explore(is_open, window, starts, L: int, cap: int) -> set:
    """Balls of every open site linked to an open site within ``L`` of ``starts``."""
    seeds = {z for j in starts for z in _ball(j, L) if is_open(z, window)}
    seen = set(seeds)
    queue = deque(sorted(seeds))
    cluster: set = set()
    while queue:
        z = queue.popleft()
        for w in _ball(z, L):
            cluster.add(w)
            if w not in seen and is_open(w, window):
                seen.add(w)
                queue.append(w)
        if len(cluster) > cap:
            raise ClusterCapExceededError(
                f"cluster exceeded {cap} sites in window {window}",
                window=window, size=len(cluster), open_sites=len(seen),
            )
    return cluster


def block_window(block: int, t_hat: float, t0: float = 0.0) -> tuple[float, float]:
    """Half-open window of block ``block`` (1-based) starting at ``t0``."""
    if block < 1:
        raise ValueError("blocks are numbered from 1")
    return (t0 + (block - 1) * t_hat, t0 + block * t_hat)


def explore_cluster(
    driving: DrivingStream,
    block: int,
    j,
    t_hat: float,
    L: int,
    cap: int = DEFAULT_CAP,
    t0: float = 0.0,
) -> frozenset:
    """The L-thickened open cluster seen from ``j`` in one block.

    Empty when no open site lies within sup-distance ``L`` of ``j``.
    """
    window = block_window(block, t_hat, t0)
    return frozenset(_explore(_Openness(driving), window, [_site(j)], L, cap))


@dataclass
class DependencySchedule:
    k: tuple
    T: float
    t0: float
    params: ConstructionParams
    windows: list
    sets: list = field(default_factory=list)  # sets[i] is L_{i+1}

    def sizes(self) -> list[int]:
        return [len(s) for s in self.sets]

    def is_nested(self) -> bool:
        return all(later <= earlier for earlier, later in zip(self.sets, self.sets[1:]))

    def to_csv(self) -> str:
        lines = ["block,start,end,size"]
        for i, ((s, e), st) in enumerate(zip(self.windows, self.sets), start=1):
            lines.append(f"{i},{s!r},{e!r},{len(st)}")
        return "\n".join(lines) + "\n"


def dependency_schedule(
    driving: DrivingStream,
    k,
    T: float,
    params: ConstructionParams,
    t0: float = 0.0,
    cap: int = DEFAULT_CAP,
) -> DependencySchedule:
    if T < 0:
        raise ValueError("T must be non-negative")
    k = _site(k, params.d)
    windows = params.windows(T, t0)
    is_open = _Openness(driving)
    sets: list = []
    needed: set = {k}
    for window in reversed(windows):
        needed = needed | _explore(is_open, window, sorted(needed), params.L, cap)
        sets.append(frozenset(needed))
    sets.reverse()
    return DependencySchedule(k, T, t0, params, windows, sets)


def evaluate(
    driving: DrivingStream,
    seq: InterferenceSequence,
    k,
    T: float,
    initial: InitialCondition,
    params: ConstructionParams | None = None,
    t0: float = 0.0,
    K: int = 0,
    cap: int = DEFAULT_CAP,
) -> int:
    """``x_k(t0 + T)`` of the infinite-lattice dynamics started from ``initial`` at ``t0``."""
    params = params or block_length(driving.lam, seq.support_radius, seq.dimension)
    if params.L < seq.support_radius:
        raise ValueError("construction radius is smaller than the support radius")
    k = _site(k, seq.dimension)
    sched = dependency_schedule(driving, k, T, params, t0, cap)
    if not sched.sets:
        return initial.value_at(k)
    values = {s: initial.value_at(s) for s in sched.sets[0]}
    for window, members in zip(sched.windows, sched.sets):
        config = DynamicsConfig(seq, driving.lam, Restricted(members), K=K)
        sites = config.index_sites()
        start = QueueState(
            sites, np.array([values[s] for s in sites], dtype=np.int64),
            np.zeros(len(sites), dtype=bool), window[0],
        )
        res = coupled_run([(config, start)], driving, window[0], window[1], strict=False)
        state = res.states[0]
        values = {s: int(c) for s, c in zip(state.sites, state.counts)}
    return values[k]


__all__ = [
    "ConstructionParams", "DependencySchedule", "block_length", "dependency_schedule",
    "block_window", "evaluate", "explore_cluster",
]
