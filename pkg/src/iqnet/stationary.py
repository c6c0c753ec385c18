"""Stationary-regime estimation: Loynes sampling, batch-means estimators
and rate-conservation diagnostics on the torus."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from numba import njit
from scipy import stats

from .driving import DrivingStream, new_workspace, next_block
from .dynamics import (
    Box,
    DynamicsConfig,
    InitialCondition,
    Torus,
    _accepts,
    build_tables,
    coupled_run,
    initial_state,
)
from .errors import InsufficientBatchesError, NotConvergedError
from .interference import closed_form_mean, critical_rate

MIN_BATCHES = 20

# accumulator columns
SUMX, SUMX2, X0, X0SQ, R0, RSUM, DEP0, DEPALL = range(8)
J0UP, J0DOWN, JUP, JDOWN, MT1, MT2, ARR0, ARRALL = range(8, 16)
N_FIXED = 16


@njit(cache=True, nogil=True, inline="always")
def _refresh(x, I, R, i, nbr_cnt, nbr_idx, nbr_wf, K):
    tot = 0.0
    for k in range(nbr_cnt[0, i]):
        tot += nbr_wf[0, i, k] * x[0, nbr_idx[0, i, k]]
    I[i] = tot
    R[i] = x[0, i] / tot if x[0, i] > K[0] else 0.0


@njit(cache=True, nogil=True, inline="always")
def _mass_transport(x, I, R, o, a0, nbr_cnt, nbr_idx, nbr_wf):
    m1 = 0.0
    for k in range(nbr_cnt[0, o]):
        j = nbr_idx[0, o, k]
        if j != o:
            m1 += R[j] * nbr_wf[0, o, k]
    return x[0, o] * m1, R[o] * (I[o] - a0 * x[0, o])


@njit(cache=True, nogil=True)
def _torus_stats(
    k0, codes, lam, blen, burn, horizon, nbatch,
    x, nbr_cnt, nbr_idx, nbr_wi, nbr_wf, exact, den, K, xinf,
    o, a0, shp, shm, acc, lag_acc,
):
    """Run one torus system from time 0 to ``burn + horizon``.

    ``acc[b, c]`` collects integrals and jump sums of batch ``b``;
    ``lag_acc[b, k]`` the integral of sum_i x_i x_{i + k e_1}.  Returns
    ``(events, floor violations, minimum count after burn-in)``.
    """
    M = x.shape[1]
    nl = shp.shape[0]
    I = np.zeros(M)
    R = np.zeros(M)
    for i in range(M):
        _refresh(x, I, R, i, nbr_cnt, nbr_idx, nbr_wf, K)
    sumx = 0.0
    rsum = 0.0
    jtot = 0.0
    reached = np.zeros(M, dtype=np.bool_)
    for i in range(M):
        sumx += x[0, i]
        rsum += R[i]
        jtot += x[0, i] * I[i]
        reached[i] = x[0, i] >= K[0]
    P = np.zeros(nl)
    for k in range(nl):
        for i in range(M):
            P[k] += x[0, i] * x[0, shp[k, i]]
    m1, m2 = _mass_transport(x, I, R, o, a0, nbr_cnt, nbr_idx, nbr_wf)
    tend = burn + horizon
    h = horizon / nbatch
    cur = 0.0
    b = 0
    floor_viol = 0
    minx = np.iinfo(np.int64).max
    ws = new_workspace(256)
    events = 0
    m_last = int(np.floor(tend / blen))
    for m in range(0, m_last + 1):
        n, ws = next_block(k0, codes, lam, blen, m, ws)
        bt, bs, bk, bm = ws[0], ws[1], ws[2], ws[3]
        for e in range(n + 1):
            t = bt[e] if e < n else (m + 1) * blen
            if t > tend:
                t = tend
            # integrate the current state over [cur, t)
            while cur < t:
                if cur < burn:
                    cur = min(t, burn)
                    continue
                end_b = burn + (b + 1) * h if b < nbatch - 1 else tend
                seg = min(t, end_b)
                dt = seg - cur
                xo = x[0, o]
                acc[b, SUMX] += dt * sumx
                acc[b, SUMX2] += dt * P[0]
                acc[b, X0] += dt * xo
                acc[b, X0SQ] += dt * xo * xo
                acc[b, R0] += dt * R[o]
                acc[b, RSUM] += dt * rsum
                acc[b, MT1] += dt * m1
                acc[b, MT2] += dt * m2
                for k in range(nl):
                    lag_acc[b, k] += dt * P[k]
                cur = seg
                if cur >= end_b and b < nbatch - 1:
                    b += 1
            if e == n or bt[e] >= tend:
                break
            j = bs[e]
            delta = 0
            if bk[e] == 0:
                delta = 1
            elif _accepts(x, 0, j, bm[e], nbr_cnt, nbr_idx, nbr_wi, nbr_wf, exact, den, K, xinf):
                delta = -1
            events += 1
            if delta == 0:
                continue
            counting = t >= burn
            j0_before = x[0, o] * I[o]
            ij = I[j]
            xj = x[0, j]
            P[0] += 2 * delta * xj + 1
            for k in range(1, nl):
                P[k] += delta * (x[0, shp[k, j]] + x[0, shm[k, j]])
            x[0, j] = xj + delta
            sumx += delta
            for k in range(nbr_cnt[0, j]):
                i = nbr_idx[0, j, k]
                rold = R[i]
                _refresh(x, I, R, i, nbr_cnt, nbr_idx, nbr_wf, K)
                rsum += R[i] - rold
            dj = 2.0 * delta * ij + a0
            jtot += dj
            dj0 = x[0, o] * I[o] - j0_before
            m1, m2 = _mass_transport(x, I, R, o, a0, nbr_cnt, nbr_idx, nbr_wf)
            if delta > 0:
                if x[0, j] >= K[0]:
                    reached[j] = True
            else:
                if reached[j] and x[0, j] < K[0]:
                    floor_viol += 1
            if counting:
                if delta > 0:
                    acc[b, ARRALL] += 1
                    if j == o:
                        acc[b, ARR0] += 1
                else:
                    acc[b, DEPALL] += 1
                    if j == o:
                        acc[b, DEP0] += 1
                    if x[0, j] < minx:
                        minx = x[0, j]
                if dj > 0:
                    acc[b, JUP] += dj
                else:
                    acc[b, JDOWN] -= dj
                if dj0 > 0:
                    acc[b, J0UP] += dj0
                else:
                    acc[b, J0DOWN] -= dj0
        if cur >= tend:
            break
    if minx == np.iinfo(np.int64).max:
        minx = x[0].min()
    return events, floor_viol, minx


# ---------------------------------------------------------------- reports


@dataclass
class Estimate:
    value: float
    half_width: float

    def contains(self, target: float, widths: float = 1.0) -> bool:
        return abs(self.value - target) <= widths * self.half_width

    @property
    def interval(self) -> tuple[float, float]:
        return self.value - self.half_width, self.value + self.half_width


def batch_estimate(samples: np.ndarray, level: float = 0.95) -> Estimate:
    """Mean of per-batch values with a Student-t half-width."""
    samples = np.asarray(samples, dtype=float)
    nb = samples.size
    if nb < 2:
        raise InsufficientBatchesError("need at least two batches")
    sd = samples.std(ddof=1)
    q = stats.t.ppf(0.5 + level / 2, nb - 1)
    return Estimate(float(samples.mean()), float(q * sd / math.sqrt(nb)))


@dataclass
class CovariancePoint:
    lag: int
    estimate: float
    half_width: float
    empirical: float
    empirical_half_width: float


@dataclass
class BalanceReport:
    """Rate-conservation diagnostics."""

    departure_rate_origin: Estimate  # accepted departures at the origin per unit time
    mean_R0: Estimate  # time average of the departure probability at the origin
    arrival_increase_rate: Estimate  # upward jumps of x_0 * I_0 per unit time
    predicted_increase_rate: float | None
    drift_residual: Estimate  # (upward - downward jumps of x_0 * I_0) per unit time
    mass_transport_lhs: Estimate  # x_0 sum_{i != 0} a_i R(i)
    mass_transport_rhs: Estimate  # R(0) sum_{i != 0} a_i x_i
    mass_transport_residual: Estimate


@dataclass
class StatReport:
    lam: float
    sites: int
    seeds: list
    burn_in: float
    horizon: float
    batches: int
    closed_form_mean: float | None
    divergent: bool
    mean: Estimate  # site-averaged
    mean_origin: Estimate
    second_moment: Estimate
    second_moment_origin: Estimate
    covariance: list
    balance: BalanceReport
    floor_violations: int
    min_count: int
    events: int
    per_seed_means: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def covariance_csv(self) -> str:
        lines = ["lag,estimate,half_width,empirical,empirical_half_width"]
        for c in self.covariance:
            lines.append(f"{c.lag},{c.estimate!r},{c.half_width!r},{c.empirical!r},{c.empirical_half_width!r}")
        return "\n".join(lines) + "\n"


def _lag_tables(sites: list, n: int, lags: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    index = {s: k for k, s in enumerate(sites)}
    size = 2 * n + 1
    shp = np.empty((len(lags), len(sites)), dtype=np.int64)
    shm = np.empty_like(shp)
    for r, k in enumerate(lags):
        for i, s in enumerate(sites):
            up = ((s[0] + k + n) % size - n,) + s[1:]
            dn = ((s[0] - k + n) % size - n,) + s[1:]
            shp[r, i] = index[up]
            shm[r, i] = index[dn]
    return shp, shm


@dataclass
class _SeedRun:
    seed: int
    acc: np.ndarray
    lag_acc: np.ndarray
    events: int
    floor_violations: int
    min_count: int


def _run_seed(config: DynamicsConfig, initial: InitialCondition, seed: int, burn_in: float,
              horizon: float, batches: int, lags: Sequence[int], block_length: float) -> _SeedRun:
    tab = build_tables([config])
    sites = tab.universe
    driving = DrivingStream(seed, config.lam, block_length)
    st = initial_state(config, initial, 0.0)
    x = st.counts.reshape(1, -1).copy()
    o = tab.index[(0,) * config.dimension]
    lag_list = list(lags)
    if lag_list[:1] != [0]:
        lag_list = [0] + [k for k in lag_list if k != 0]
    shp, shm = _lag_tables(sites, config.mode.n, lag_list)
    acc = np.zeros((batches, N_FIXED))
    lag_acc = np.zeros((batches, len(lag_list)))
    events, fv, minx = _torus_stats(
        driving.key, tab.codes, config.lam, driving.block_length, float(burn_in), float(horizon),
        batches, x, tab.nbr_cnt, tab.nbr_idx, tab.nbr_wi, tab.nbr_wf, tab.exact, tab.den, tab.K,
        tab.xinf, o, config.seq.a0, shp, shm, acc, lag_acc,
    )
    if lag_list != list(lags):
        keep = [lag_list.index(k) for k in lags]
        lag_acc = lag_acc[:, keep]
    return _SeedRun(seed, acc, lag_acc, int(events), int(fv), int(minx))


def ergodic_estimates(
    config: DynamicsConfig,
    seeds: Sequence[int],
    burn_in: float,
    horizon: float,
    batches: int = 30,
    lags: Sequence[int] = range(11),
    initial: InitialCondition | None = None,
    workers: int = 1,
    block_length: float = 1.0,
) -> StatReport:
    """Batch-means estimates from torus runs, pooled over seeds.

    Each seed contributes ``batches`` non-overlapping batches of length
    ``horizon / batches`` after ``burn_in``; half-widths are 95% Student-t.
    """
    if not isinstance(config.mode, Torus):
        raise ValueError("ergodic estimates need torus mode")
    if config.frozen or config.suppressed:
        raise ValueError("ergodic estimates need a torus without frozen or suppressed sites")
    if batches < MIN_BATCHES:
        raise InsufficientBatchesError(f"batch count {batches} is below {MIN_BATCHES}")
    if not seeds:
        raise ValueError("need at least one seed")
    initial = initial or InitialCondition.zero()
    lags = list(lags)
    args = (burn_in, horizon, batches, lags, block_length)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            runs = list(pool.map(lambda s: _run_seed(config, initial, s, *args), seeds))
    else:
        runs = [_run_seed(config, initial, s, *args) for s in seeds]
    runs.sort(key=lambda r: r.seed)
    return _summarize(config, runs, burn_in, horizon, batches, lags)


def _summarize(config, runs, burn_in, horizon, batches, lags) -> StatReport:
    seq = config.seq
    lam = config.lam
    nsites = (2 * config.mode.n + 1) ** config.dimension
    h = horizon / batches
    acc = np.concatenate([r.acc for r in runs]) / h
    lag_acc = np.concatenate([r.lag_acc for r in runs]) / h
    divergent = lam >= critical_rate(seq)
    mu = None if divergent else closed_form_mean(seq, lam)

    mean_b = acc[:, SUMX] / nsites
    mean = batch_estimate(mean_b)
    covariance = []
    for k, lag in enumerate(lags):
        prod = lag_acc[:, k] / nsites
        emp = batch_estimate(prod - mean_b ** 2)
        if mu is None:
            closed = Estimate(float("nan"), float("nan"))
        else:
            closed = batch_estimate(prod - 2 * mu * mean_b + mu * mu)
        covariance.append(CovariancePoint(lag, closed.value, closed.half_width, emp.value, emp.half_width))

    a_total = seq.total
    balance = BalanceReport(
        departure_rate_origin=batch_estimate(acc[:, DEP0]),
        mean_R0=batch_estimate(acc[:, R0]),
        arrival_increase_rate=batch_estimate(acc[:, J0UP]),
        predicted_increase_rate=None if mu is None else lam * (seq.a0 + 2 * mu * a_total),
        drift_residual=batch_estimate(acc[:, J0UP] - acc[:, J0DOWN]),
        mass_transport_lhs=batch_estimate(acc[:, MT1]),
        mass_transport_rhs=batch_estimate(acc[:, MT2]),
        mass_transport_residual=batch_estimate(acc[:, MT1] - acc[:, MT2]),
    )
    return StatReport(
        lam=lam,
        sites=nsites,
        seeds=[r.seed for r in runs],
        burn_in=burn_in,
        horizon=horizon,
        batches=batches,
        closed_form_mean=mu,
        divergent=divergent,
        mean=mean,
        mean_origin=batch_estimate(acc[:, X0]),
        second_moment=batch_estimate(acc[:, SUMX2] / nsites),
        second_moment_origin=batch_estimate(acc[:, X0SQ]),
        covariance=covariance,
        balance=balance,
        floor_violations=sum(r.floor_violations for r in runs),
        min_count=min(r.min_count for r in runs),
        events=sum(r.events for r in runs),
        per_seed_means=[float(r.acc[:, SUMX].sum() / (nsites * horizon)) for r in runs],
    )


def rate_balance_check(
    config: DynamicsConfig,
    seeds: Sequence[int],
    burn_in: float,
    horizon: float,
    batches: int = 30,
) -> BalanceReport:
    return ergodic_estimates(config, seeds, burn_in, horizon, batches, lags=[0]).balance


# ---------------------------------------------------------------- Loynes


@dataclass
class LoynesSample:
    sites: list
    depths: list  # past depths T0 * 2**k actually run
    values: np.ndarray  # (len(depths), len(sites))
    converged: list  # per site
    converged_depth: list  # per site: first depth of the final stable run, or None
    seed: int

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    @property
    def all_converged(self) -> bool:
        return all(self.converged)

    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.values, axis=0) >= 0))


def loynes_sample(
    config: DynamicsConfig,
    sites: Sequence,
    T0: float,
    max_doublings: int,
    seed: int,
    patience: int = 2,
    require_convergence: bool = False,
    block_length: float = 1.0,
) -> LoynesSample:
    """Values at time 0 of runs started empty at ``-T0 * 2**k``, ``k = 0..max``.

    A site is converged once its value stayed unchanged over ``patience``
    consecutive doublings; the scan stops early when every monitored site
    is converged.
    """
    if not isinstance(config.mode, (Torus, Box)):
        raise ValueError("Loynes sampling needs torus or box mode")
    if patience < 1:
        raise ValueError("patience must be at least 1")
    sites = [tuple(s) if not np.isscalar(s) else (int(s),) for s in sites]
    driving = DrivingStream(seed, config.lam, block_length)
    depths, rows = [], []
    for k in range(max_doublings + 1):
        depth = T0 * 2 ** k
        res = coupled_run([(config, InitialCondition.zero())], driving, -depth, 0.0, strict=False)
        st = res.states[0]
        depths.append(depth)
        rows.append([st[s] for s in sites])
        if len(rows) > patience and all(
            len({rows[-1 - r][q] for r in range(patience + 1)}) == 1 for q in range(len(sites))
        ):
            break
    values = np.array(rows, dtype=np.int64)
    converged, cdepth = [], []
    for q in range(len(sites)):
        col = values[:, q]
        start = len(col) - 1
        while start > 0 and col[start - 1] == col[-1]:
            start -= 1
        ok = len(col) - 1 - start >= patience
        converged.append(bool(ok))
        cdepth.append(depths[start] if ok else None)
    sample = LoynesSample(sites, depths, values, converged, cdepth, int(seed))
    if require_convergence and not sample.all_converged:
        raise NotConvergedError(
            f"seed {seed}: values still changing at depth {depths[-1]}", sample=sample
        )
    return sample


__all__ = [
    "BalanceReport", "CovariancePoint", "Estimate", "LoynesSample", "StatReport",
    "batch_estimate", "ergodic_estimates", "loynes_sample", "rate_balance_check",
]
