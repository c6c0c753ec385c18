"""Event engine for interference queues on finite index sets.

A potential departure at site ``i`` with mark ``u`` removes a customer iff
``u <= x_i / sum_j a_j x_{i-j}``.  Marks are 53-bit integers ``U`` with
``u = U * 2**-53``; for exact (rational) weights scaled to integers ``w_j``
with common denominator ``D`` the test is done without rounding as

    U * sum_j w_j x_{i-j}  <=  x_i * D * 2**53

using a 64x64 -> 128 bit product.  Otherwise the binary64 quotient is used.

Several systems can be evolved on one event list (one driving stream over
the union of their index sets); each system ignores events at sites outside
its own index set, at frozen sites, and arrivals at suppressed sites.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from numba import njit, uint64

from .driving import ARRIVAL, DEPARTURE, DrivingStream, Event, new_workspace, next_block
from .errors import (
    ClockRegressionError,
    FrozenSiteError,
    IqnetError,
    OrderingViolationError,
    TorusTooSmallError,
)
from .interference import InterferenceSequence
from .rng import P_INITIAL, TWO_M53, draw_call, mulhilo64, seed_key, site_code

INFINITE = math.inf

Site = tuple[int, ...]


def _site(s, d: int | None = None) -> Site:
    t = (int(s),) if isinstance(s, (int, np.integer)) else tuple(int(c) for c in s)
    if d is not None and len(t) != d:
        raise ValueError(f"site {s!r} does not have dimension {d}")
    return t


# ---------------------------------------------------------------- modes


@dataclass(frozen=True)
class Torus:
    """``[-n, n]^d`` with periodic neighbor arithmetic."""

    n: int

    def sites(self, d: int) -> list[Site]:
        return list(itertools.product(range(-self.n, self.n + 1), repeat=d))


@dataclass(frozen=True)
class Box:
    """``[-n, n]^d`` with every outside queue pinned to zero."""

    n: int

    def sites(self, d: int) -> list[Site]:
        return list(itertools.product(range(-self.n, self.n + 1), repeat=d))


@dataclass(frozen=True)
class Restricted:
    """An arbitrary finite set; outside queues are zero."""

    members: frozenset

    @classmethod
    def of(cls, sites: Iterable) -> "Restricted":
        return cls(frozenset(_site(s) for s in sites))

    def sites(self, d: int) -> list[Site]:
        return sorted(self.members)


Mode = Union[Torus, Box, Restricted]


@dataclass(frozen=True)
class DynamicsConfig:
    seq: InterferenceSequence
    lam: float
    mode: Mode
    K: int = 0
    frozen: Mapping = field(default_factory=dict)
    suppressed: frozenset = frozenset()
    suppression_window: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self):
        d = self.seq.dimension
        if self.lam < 0:
            raise ValueError("arrival rate must be non-negative")
        if self.K < 0 or int(self.K) != self.K:
            raise ValueError("K must be a non-negative integer")
        if isinstance(self.mode, Torus) and 2 * self.mode.n + 1 <= 2 * self.seq.support_radius:
            raise TorusTooSmallError(
                f"torus side {2 * self.mode.n + 1} must exceed twice the support radius"
            )
        frozen = {_site(s, d): v for s, v in dict(self.frozen).items()}
        members = set(self.mode.sites(d))
        for s, v in frozen.items():
            if s not in members:
                raise ValueError(f"frozen site {s} is outside the index set")
            if v is not INFINITE and (v < 0 or int(v) != v):
                raise ValueError(f"frozen count at {s} must be a non-negative integer or INFINITE")
        object.__setattr__(self, "frozen", frozen)
        object.__setattr__(self, "suppressed", frozenset(_site(s, d) for s in self.suppressed))
        lo, hi = self.suppression_window
        if not lo < hi:
            raise ValueError("suppression window must satisfy start < end")

    @property
    def dimension(self) -> int:
        return self.seq.dimension

    def index_sites(self) -> list[Site]:
        return sorted(self.mode.sites(self.dimension))

    def neighbors(self, site) -> list[tuple[Site, Union[float, "Fraction"]]]:
        """``(j, a_{i-j})`` for every index-set site ``j`` interfering with ``site``."""
        i = _site(site, self.dimension)
        out = []
        for off, w in sorted(self.seq.weights.items()):
            j = tuple(a - b for a, b in zip(i, off))
            if isinstance(self.mode, Torus):
                size = 2 * self.mode.n + 1
                j = tuple((c + self.mode.n) % size - self.mode.n for c in j)
                out.append((j, w))
            elif j in self._members:
                out.append((j, w))
        return out

    @property
    def _members(self) -> frozenset:
        cached = self.__dict__.get("_members_cache")
        if cached is None:
            cached = frozenset(self.mode.sites(self.dimension))
            object.__setattr__(self, "_members_cache", cached)
        return cached

    def contains(self, site) -> bool:
        return _site(site, self.dimension) in self._members

    def suppresses(self, site, t: float) -> bool:
        lo, hi = self.suppression_window
        return _site(site) in self.suppressed and lo <= t < hi


# ---------------------------------------------------------------- initial conditions


@dataclass(frozen=True)
class InitialCondition:
    """A rule giving a count at every site of Z^d.

    ``sparse`` puts ``magnitudes[k]`` on the sites at sup-norm distance
    ``schedule[k]`` from the origin.  ``iid`` draws each site from
    ``dist.ppf(u)`` with ``u`` keyed by ``(seed, site)``; ``dist`` is any
    object with a ``ppf`` method (e.g. a frozen ``scipy.stats`` law).
    """

    kind: str = "zero"
    value: int = 0
    values: Mapping = field(default_factory=dict)
    schedule: tuple = ()
    magnitudes: tuple = ()
    dist: object = None
    seed: int = 0

    @classmethod
    def zero(cls) -> "InitialCondition":
        return cls("zero")

    @classmethod
    def constant(cls, v: int) -> "InitialCondition":
        return cls("constant", value=int(v))

    @classmethod
    def explicit(cls, values: Mapping) -> "InitialCondition":
        return cls("explicit", values={_site(s): int(v) for s, v in values.items()})

    @classmethod
    def sparse(cls, schedule: Sequence[int], magnitudes: Sequence[int]) -> "InitialCondition":
        if len(schedule) != len(magnitudes):
            raise ValueError("schedule and magnitudes must have equal length")
        return cls("sparse", schedule=tuple(int(b) for b in schedule),
                   magnitudes=tuple(int(a) for a in magnitudes))

    @classmethod
    def iid(cls, dist, seed: int) -> "InitialCondition":
        return cls("iid", dist=dist, seed=int(seed))

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "explicit", "sparse", "iid"):
            raise ValueError(f"unknown initial condition kind {self.kind!r}")
        bad = [v for v in (self.value, *self.magnitudes, *dict(self.values).values()) if v < 0]
        if bad:
            raise ValueError("initial counts must be non-negative")

    def value_at(self, site) -> int:
        s = _site(site)
        if self.kind == "zero":
            return 0
        if self.kind == "constant":
            return self.value
        if self.kind == "explicit":
            return self.values.get(s, 0)
        if self.kind == "sparse":
            r = max(abs(c) for c in s)
            for b, a in zip(self.schedule, self.magnitudes):
                if r == b:
                    return a
            return 0
        w = draw_call(seed_key(self.seed), np.uint64(site_code(s)), 0, P_INITIAL, 0)[0]
        u = float(int(w) >> 11) * TWO_M53
        return int(self.dist.ppf(u))


# ---------------------------------------------------------------- state


@dataclass
class QueueState:
    """Counts over an index set; ``infinite`` flags frozen-at-infinity sites."""

    sites: list
    counts: np.ndarray
    infinite: np.ndarray
    clock: float

    def __post_init__(self):
        self._index = {s: k for k, s in enumerate(self.sites)}

    def index(self, site) -> int:
        return self._index[_site(site)]

    def __getitem__(self, site):
        k = self._index.get(_site(site))
        if k is None:
            return 0
        return INFINITE if self.infinite[k] else int(self.counts[k])

    def as_dict(self) -> dict:
        return {s: self[s] for s in self.sites}

    def copy(self) -> "QueueState":
        return QueueState(list(self.sites), self.counts.copy(), self.infinite.copy(), self.clock)

    def total(self) -> int:
        return int(self.counts[~self.infinite].sum())


def initial_state(config: DynamicsConfig, initial: InitialCondition, clock: float = 0.0) -> QueueState:
    sites = config.index_sites()
    counts = np.zeros(len(sites), dtype=np.int64)
    inf = np.zeros(len(sites), dtype=bool)
    for k, s in enumerate(sites):
        if s in config.frozen:
            v = config.frozen[s]
            if v is INFINITE:
                inf[k] = True
            else:
                counts[k] = v
        else:
            counts[k] = initial.value_at(s)
    return QueueState(sites, counts, inf, clock)


# ---------------------------------------------------------------- reference rule


def departure_probability(state: QueueState, config: DynamicsConfig, site) -> float:
    s = _site(site, config.dimension)
    if s in config.frozen:
        raise FrozenSiteError(f"site {s} is frozen")
    xi = state[s]
    if xi <= config.K:
        return 0.0
    total = 0
    for j, w in config.neighbors(s):
        xj = state[j]
        if xj is INFINITE:
            return 0.0
        total += w * xj
    return float(xi / total) if config.seq.exact else xi / float(total)


def _accepts_reference(state: QueueState, config: DynamicsConfig, site, mark_bits: int) -> bool:
    """Acceptance of a potential departure, in unbounded integer arithmetic."""
    xi = state[site]
    if xi <= config.K:
        return False
    nbrs = config.neighbors(site)
    if any(state[j] is INFINITE for j, _ in nbrs):
        return False
    if config.seq.exact:
        ints, den = config.seq.integer_weights()
        scaled = dict(zip(config.seq.offsets(), (int(v) for v in ints)))
        i = _site(site)
        tot = 0
        for j, _ in nbrs:
            off = _offset_between(config, i, j)
            tot += scaled[off] * state[j]
        return mark_bits * tot <= xi * den * (1 << 53)
    tot = 0.0
    for j, w in nbrs:
        tot += w * state[j]
    return mark_bits * TWO_M53 <= xi / tot


def _offset_between(config: DynamicsConfig, i: Site, j: Site) -> Site:
    diff = tuple(a - b for a, b in zip(i, j))
    if isinstance(config.mode, Torus):
        n = config.mode.n
        diff = tuple((c + n) % (2 * n + 1) - n for c in diff)
    return diff


def _mark_bits(event: Event) -> int:
    return int(round(event.mark * (1 << 53)))


def apply_event(state: QueueState, config: DynamicsConfig, event: Event) -> QueueState:
    """Apply one event to a copy of ``state`` (reference implementation)."""
    if event.time < state.clock:
        raise ClockRegressionError(f"event at {event.time} precedes clock {state.clock}")
    new = state.copy()
    new.clock = event.time
    site = _site(event.site)
    if not config.contains(site) or site in config.frozen:
        return new
    k = new.index(site)
    if event.kind == ARRIVAL:
        if not config.suppresses(site, event.time):
            new.counts[k] += 1
    elif _accepts_reference(state, config, site, _mark_bits(event)):
        new.counts[k] -= 1
    return new


# ---------------------------------------------------------------- compiled engine


@njit(cache=True, nogil=True, inline="always")
def _accepts(x, s, i, mark, nbr_cnt, nbr_idx, nbr_wi, nbr_wf, exact, den, K, xinf):
    xi = x[s, i]
    if xi <= K[s]:
        return False
    n = nbr_cnt[s, i]
    if exact[s]:
        tot = 0
        for k in range(n):
            j = nbr_idx[s, i, k]
            if xinf[s, j]:
                return False
            tot += nbr_wi[s, i, k] * x[s, j]
        hi, lo = mulhilo64(mark, uint64(tot))
        r = uint64(xi) * uint64(den[s])
        rhi = r >> uint64(11)
        rlo = r << uint64(53)
        return hi < rhi or (hi == rhi and lo <= rlo)
    totf = 0.0
    for k in range(n):
        j = nbr_idx[s, i, k]
        if xinf[s, j]:
            return False
        totf += nbr_wf[s, i, k] * x[s, j]
    return float(mark) * TWO_M53 <= xi / totf


@njit(cache=True, nogil=True, inline="always")
def _probability(x, s, i, nbr_cnt, nbr_idx, nbr_wf, K, xinf):
    xi = x[s, i]
    if xi <= K[s]:
        return 0.0
    totf = 0.0
    for k in range(nbr_cnt[s, i]):
        j = nbr_idx[s, i, k]
        if xinf[s, j]:
            return 0.0
        totf += nbr_wf[s, i, k] * x[s, j]
    return xi / totf


@njit(cache=True, nogil=True, inline="always")
def _value(x, xinf, s, i):
    return np.inf if xinf[s, i] else float(x[s, i])


@njit(cache=True, nogil=True)
def _record_probe(x, xinf, p, probe_sites, probe_x, probe_p, nbr_cnt, nbr_idx, nbr_wf, K, frozen):
    for s in range(x.shape[0]):
        for q in range(probe_sites.shape[0]):
            i = probe_sites[q]
            probe_x[s, p, q] = -1 if xinf[s, i] else x[s, i]
            if frozen[s, i]:
                probe_p[s, p, q] = np.nan
            else:
                probe_p[s, p, q] = _probability(x, s, i, nbr_cnt, nbr_idx, nbr_wf, K, xinf)


@njit(cache=True, nogil=True)
def _run_systems(
    k0, codes, lam, blen, t0, t1,
    x, xinf, active, frozen, supp, supp_lo, supp_hi,
    nbr_cnt, nbr_idx, nbr_wi, nbr_wf, exact, den, K,
    probe_t, probe_sites, probe_x, probe_p,
    pairs, strict, viol,
    trace_site, trace_t, trace_x,
    n_arr, n_dep,
):
    """Evolve S systems over the universe on the events of ``[t0, t1)``.

    Returns ``(events, violations, traced)``.  Violation rows hold
    ``(event index, time, site, pair, value a, value b)``; event index -1
    marks a violation already present in the initial states.
    """
    S = x.shape[0]
    M = x.shape[1]
    R = pairs.shape[0]
    P = probe_t.shape[0]
    nviol = 0
    for r in range(R):
        a = pairs[r, 0]
        b = pairs[r, 1]
        for i in range(M):
            va = _value(x, xinf, a, i)
            vb = _value(x, xinf, b, i)
            if va > vb:
                if nviol < viol.shape[0]:
                    viol[nviol, 0] = -1
                    viol[nviol, 1] = t0
                    viol[nviol, 2] = i
                    viol[nviol, 3] = r
                    viol[nviol, 4] = va
                    viol[nviol, 5] = vb
                nviol += 1
    if nviol > 0 and strict:
        return 0, nviol, 0
    m0 = int(np.floor(t0 / blen))
    m1 = int(np.floor(t1 / blen))
    ws = new_workspace(256)
    nprobe = 0
    while nprobe < P and probe_t[nprobe] < t0:
        nprobe += 1
    events = 0
    traced = 0
    for m in range(m0, m1 + 1):
        n, ws = next_block(k0, codes, lam, blen, m, ws)
        bt, bs, bk, bm = ws[0], ws[1], ws[2], ws[3]
        for e in range(n):
            t = bt[e]
            if t < t0:
                continue
            if t >= t1:
                break
            while nprobe < P and probe_t[nprobe] < t:
                _record_probe(x, xinf, nprobe, probe_sites, probe_x, probe_p,
                              nbr_cnt, nbr_idx, nbr_wf, K, frozen)
                nprobe += 1
            i = bs[e]
            if bk[e] == 0:
                for s in range(S):
                    if active[s, i] and not frozen[s, i]:
                        if supp[s, i] and supp_lo[s] <= t and t < supp_hi[s]:
                            continue
                        x[s, i] += 1
                        n_arr[s, i] += 1
            else:
                mark = bm[e]
                for s in range(S):
                    if active[s, i] and not frozen[s, i]:
                        if _accepts(x, s, i, mark, nbr_cnt, nbr_idx, nbr_wi, nbr_wf,
                                    exact, den, K, xinf):
                            x[s, i] -= 1
                            n_dep[s, i] += 1
            if i == trace_site and traced < trace_t.shape[0]:
                trace_t[traced] = t
                for s in range(S):
                    trace_x[s, traced] = x[s, i]
                traced += 1
            for r in range(R):
                a = pairs[r, 0]
                b = pairs[r, 1]
                va = _value(x, xinf, a, i)
                vb = _value(x, xinf, b, i)
                if va > vb:
                    if nviol < viol.shape[0]:
                        viol[nviol, 0] = events
                        viol[nviol, 1] = t
                        viol[nviol, 2] = i
                        viol[nviol, 3] = r
                        viol[nviol, 4] = va
                        viol[nviol, 5] = vb
                    nviol += 1
            events += 1
            if nviol > 0 and strict:
                return events, nviol, traced
    while nprobe < P and probe_t[nprobe] <= t1:
        _record_probe(x, xinf, nprobe, probe_sites, probe_x, probe_p,
                      nbr_cnt, nbr_idx, nbr_wf, K, frozen)
        nprobe += 1
    return events, nviol, traced


# ---------------------------------------------------------------- tables


@dataclass
class SystemTables:
    """Dense per-system arrays over a shared universe, as the kernels expect."""

    universe: list
    codes: np.ndarray
    active: np.ndarray
    frozen: np.ndarray
    xinf: np.ndarray
    supp: np.ndarray
    supp_lo: np.ndarray
    supp_hi: np.ndarray
    nbr_cnt: np.ndarray
    nbr_idx: np.ndarray
    nbr_wi: np.ndarray
    nbr_wf: np.ndarray
    exact: np.ndarray
    den: np.ndarray
    K: np.ndarray

    @property
    def index(self) -> dict:
        return {s: k for k, s in enumerate(self.universe)}


_MAX_DENOMINATOR = 1 << 40


def build_tables(configs: Sequence[DynamicsConfig], universe: Sequence | None = None) -> SystemTables:
    d = configs[0].dimension
    if any(c.dimension != d for c in configs):
        raise ValueError("all systems must share the dimension")
    if universe is None:
        members = set()
        for c in configs:
            members.update(c.index_sites())
        universe = sorted(members)
    else:
        universe = sorted(_site(s, d) for s in universe)
    index = {s: k for k, s in enumerate(universe)}
    S, M = len(configs), len(universe)
    width = max(len(c.seq.weights) for c in configs)
    active = np.zeros((S, M), dtype=bool)
    frozen = np.zeros((S, M), dtype=bool)
    xinf = np.zeros((S, M), dtype=bool)
    supp = np.zeros((S, M), dtype=bool)
    supp_lo = np.empty(S)
    supp_hi = np.empty(S)
    nbr_cnt = np.zeros((S, M), dtype=np.int64)
    nbr_idx = np.zeros((S, M, width), dtype=np.int64)
    nbr_wi = np.zeros((S, M, width), dtype=np.int64)
    nbr_wf = np.zeros((S, M, width))
    exact = np.zeros(S, dtype=bool)
    den = np.ones(S, dtype=np.int64)
    K = np.array([c.K for c in configs], dtype=np.int64)
    for s, c in enumerate(configs):
        scaled = {}
        if c.seq.exact:
            ints, D = c.seq.integer_weights()
            if D <= _MAX_DENOMINATOR:
                exact[s] = True
                den[s] = D
                scaled = dict(zip(c.seq.offsets(), (int(v) for v in ints)))
        supp_lo[s], supp_hi[s] = c.suppression_window
        for site in c.index_sites():
            if site not in index:
                raise ValueError(f"site {site} of system {s} is outside the universe")
            i = index[site]
            active[s, i] = True
            if site in c.frozen:
                frozen[s, i] = True
                xinf[s, i] = c.frozen[site] is INFINITE
            supp[s, i] = site in c.suppressed
            k = 0
            for j, w in c.neighbors(site):
                nbr_idx[s, i, k] = index[j]
                nbr_wf[s, i, k] = float(w)
                if exact[s]:
                    nbr_wi[s, i, k] = scaled[_offset_between(c, site, j)]
                k += 1
            nbr_cnt[s, i] = k
    codes = np.array([site_code(u) for u in universe], dtype=np.uint64)
    return SystemTables(universe, codes, active, frozen, xinf, supp, supp_lo, supp_hi,
                        nbr_cnt, nbr_idx, nbr_wi, nbr_wf, exact, den, K)


# ---------------------------------------------------------------- public runs


@dataclass(frozen=True)
class Probes:
    times: Sequence[float]
    sites: Sequence


@dataclass
class ProbeSamples:
    times: np.ndarray
    sites: list
    counts: np.ndarray  # (P, Q); -1 encodes INFINITE
    probabilities: np.ndarray  # (P, Q); NaN at frozen sites

    def to_csv(self, path) -> None:
        header = ["time"] + [f"x{list(s)}" for s in self.sites] + [f"p{list(s)}" for s in self.sites]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for p, t in enumerate(self.times):
                row = [repr(float(t))]
                row += ["inf" if v < 0 else str(int(v)) for v in self.counts[p]]
                row += [repr(float(v)) for v in self.probabilities[p]]
                fh.write(",".join(row) + "\n")


@dataclass
class RunResult:
    state: QueueState
    probes: ProbeSamples | None
    events: int
    arrivals: np.ndarray  # accepted per index site
    departures: np.ndarray


@dataclass
class OrderingReport:
    events_checked: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> str:
        return json.dumps({"events_checked": self.events_checked, "violations": self.violations},
                          indent=2, sort_keys=True)


@dataclass
class CoupledResult:
    states: list
    report: OrderingReport
    probes: list
    events: int
    trace_times: np.ndarray | None = None
    traces: np.ndarray | None = None  # (S, n) counts after each event at the trace site
    arrivals: list = field(default_factory=list)
    departures: list = field(default_factory=list)


def _check_driving(configs: Sequence[DynamicsConfig], driving: DrivingStream) -> None:
    for c in configs:
        if c.lam != driving.lam:
            raise ValueError(f"config lambda {c.lam} differs from driving lambda {driving.lam}")


def coupled_run(
    systems: Sequence[tuple[DynamicsConfig, InitialCondition | QueueState]],
    driving: DrivingStream,
    t0: float,
    t1: float,
    orderings: Sequence[tuple[int, int]] = (),
    strict: bool = True,
    probes: Probes | None = None,
    trace_site=None,
    trace_capacity: int = 100_000,
    universe: Sequence | None = None,
) -> CoupledResult:
    """Evolve several systems on one event list and audit declared orderings.

    ``orderings`` lists pairs ``(a, b)`` asserting system ``a`` <= system
    ``b`` coordinate-wise (outside sites count as 0, INFINITE as +inf).
    """
    if not t0 < t1:
        from .errors import EmptyWindowError

        raise EmptyWindowError(f"empty window [{t0}, {t1})")
    configs = [c for c, _ in systems]
    _check_driving(configs, driving)
    tab = build_tables(configs, universe)
    index = tab.index
    S, M = tab.active.shape
    x = np.zeros((S, M), dtype=np.int64)
    for s, (c, init) in enumerate(systems):
        st = init if isinstance(init, QueueState) else initial_state(c, init, t0)
        if isinstance(init, QueueState) and init.clock > t0:
            raise ClockRegressionError(f"state clock {init.clock} is after t0={t0}")
        for k, site in enumerate(st.sites):
            if site in c.frozen:
                continue
            if not tab.active[s, index[site]]:
                continue
            x[s, index[site]] = st.counts[k]
        for site in c.frozen:
            if c.frozen[site] is not INFINITE:
                x[s, index[site]] = c.frozen[site]
    pt = np.asarray(sorted(probes.times) if probes else [], dtype=np.float64)
    psites = [_site(q) for q in probes.sites] if probes else []
    pidx = np.array([index[q] for q in psites], dtype=np.int64)
    probe_x = np.zeros((S, len(pt), len(pidx)), dtype=np.int64)
    probe_p = np.zeros((S, len(pt), len(pidx)))
    pairs = np.array(list(orderings), dtype=np.int64).reshape(-1, 2)
    viol = np.zeros((64, 6))
    tsite = -1 if trace_site is None else index[_site(trace_site)]
    trace_t = np.zeros(trace_capacity if tsite >= 0 else 0)
    trace_x = np.zeros((S, trace_t.shape[0]), dtype=np.int64)
    n_arr = np.zeros((S, M), dtype=np.int64)
    n_dep = np.zeros((S, M), dtype=np.int64)
    events, nviol, traced = _run_systems(
        driving.key, tab.codes, driving.lam, driving.block_length, float(t0), float(t1),
        x, tab.xinf, tab.active, tab.frozen, tab.supp, tab.supp_lo, tab.supp_hi,
        tab.nbr_cnt, tab.nbr_idx, tab.nbr_wi, tab.nbr_wf, tab.exact, tab.den, tab.K,
        pt, pidx, probe_x, probe_p, pairs, strict, viol, tsite, trace_t, trace_x, n_arr, n_dep,
    )
    violations = []
    for row in viol[: min(nviol, viol.shape[0])]:
        r = int(row[3])
        violations.append({
            "event": int(row[0]),
            "time": float(row[1]),
            "site": list(tab.universe[int(row[2])]),
            "pair": [int(pairs[r, 0]), int(pairs[r, 1])],
            "values": [_json_count(row[4]), _json_count(row[5])],
        })
    report = OrderingReport(int(events), violations)
    if violations and strict:
        raise OrderingViolationError(
            f"ordering {violations[0]['pair']} broken at event {violations[0]['event']}",
            trace=violations[0],
        )
    states, probe_out, arrs, deps = [], [], [], []
    for s, c in enumerate(configs):
        sites = c.index_sites()
        rows = np.array([index[q] for q in sites], dtype=np.int64)
        inf = tab.xinf[s, rows].copy()
        cnt = x[s, rows].copy()
        cnt[inf] = 0
        states.append(QueueState(sites, cnt, inf, float(t1)))
        arrs.append(n_arr[s, rows].copy())
        deps.append(n_dep[s, rows].copy())
        if probes:
            probe_out.append(ProbeSamples(pt, psites, probe_x[s], probe_p[s]))
    return CoupledResult(
        states, report, probe_out, int(events),
        trace_t[:traced] if tsite >= 0 else None,
        trace_x[:, :traced] if tsite >= 0 else None,
        arrs, deps,
    )


def _json_count(v: float):
    return "inf" if math.isinf(v) else int(v)


def run(
    config: DynamicsConfig,
    initial: InitialCondition | QueueState,
    driving: DrivingStream,
    t0: float,
    t1: float,
    probes: Probes | None = None,
) -> RunResult:
    res = coupled_run([(config, initial)], driving, t0, t1, probes=probes)
    return RunResult(
        res.states[0], res.probes[0] if probes else None, res.events,
        res.arrivals[0], res.departures[0],
    )


def reference_run(
    config: DynamicsConfig,
    initial: InitialCondition | QueueState,
    driving: DrivingStream,
    t0: float,
    t1: float,
) -> QueueState:
    """Event-by-event run through :func:`apply_event`; slow, for cross-checks."""
    state = initial if isinstance(initial, QueueState) else initial_state(config, initial, t0)
    for ev in driving.events_in(config.index_sites(), t0, t1):
        state = apply_event(state, config, ev)
    state.clock = float(t1)
    return state


__all__ = [
    "ARRIVAL", "DEPARTURE", "INFINITE", "Box", "CoupledResult", "DynamicsConfig",
    "InitialCondition", "IqnetError", "OrderingReport", "ProbeSamples", "Probes",
    "QueueState", "Restricted", "RunResult", "Torus", "apply_event", "build_tables",
    "coupled_run", "departure_probability", "initial_state", "reference_run", "run",
]
