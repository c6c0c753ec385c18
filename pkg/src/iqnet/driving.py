"""Seed-keyed driving data: Poisson arrivals and marked potential departures.

Time is cut into blocks ``[m*b, (m+1)*b)`` of length ``b``.  The events of
site ``q`` in block ``m`` are a pure function of ``(seed, q, m, lambda, b)``:

* the site-block owns one substream of 53-bit words ``w_0, w_1, ...``;
* ``w_0`` and ``w_1`` give the arrival count ~ Poisson(lambda*b) and the
  potential-departure count ~ Poisson(b) by inversion;
* the next ``na`` words are arrival epochs, the next ``nd`` departure
  epochs (each ``(m + w*2**-53) * b``, then sorted), and the last ``nd``
  words are the marks ``U_k``, the k-th going to the k-th departure in time
  order; the mark value is ``U_k * 2**-53``.

Merged event lists are ordered by time, then site rank (lexicographic
coordinates), then kind with arrivals first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np
from numba import njit, uint64

from .errors import EmptyWindowError
from .rng import (
    P_DRIVING,
    TWO_M53,
    draw_call,
    seed_key,
    site_code,
)

ARRIVAL = 0
DEPARTURE = 1


@njit(cache=True)
def poisson_inverse(u, mean, p0):
    """Smallest k with P(Poisson(mean) <= k) > u; ``p0`` is exp(-mean)."""
    if mean <= 0.0:
        return 0
    p = p0
    cdf = p
    k = 0
    while u >= cdf:
        k += 1
        p *= mean / k
        if p == 0.0:
            break
        cdf += p
    return k


@njit(cache=True, inline="always")
def _counts(k0, code, m, mean_a, p0_a, mean_d, p0_d):
    """First call of a site-block substream: both counts and words 2, 3."""
    w0, w1, w2, w3 = draw_call(k0, code, m, P_DRIVING, 0)
    sh = uint64(11)
    na = poisson_inverse(float(w0 >> sh) * TWO_M53, mean_a, p0_a)
    nd = poisson_inverse(float(w1 >> sh) * TWO_M53, mean_d, p0_d)
    return na, nd, w2 >> sh, w3 >> sh


@njit(cache=True, inline="always")
def _fill_words(k0, code, m, na, nd, w2, w3, buf):
    """Write words ``2 .. 2 + na + 2*nd`` of the substream into ``buf``.

    ``buf`` must hold at least ``na + 2*nd + 6`` entries.  Epoch words are
    sorted in place.
    """
    n = 2 + na + 2 * nd
    buf[2] = w2
    buf[3] = w3
    sh = uint64(11)
    for c in range(1, (n + 3) // 4):
        w0, w1, w2_, w3_ = draw_call(k0, code, m, P_DRIVING, c)
        k = 4 * c
        buf[k] = w0 >> sh
        buf[k + 1] = w1 >> sh
        buf[k + 2] = w2_ >> sh
        buf[k + 3] = w3_ >> sh
    _insertion_sort(buf, 2, 2 + na)
    _insertion_sort(buf, 2 + na, 2 + na + nd)


@njit(cache=True, inline="always")
def _insertion_sort(a, lo, hi):
    if hi - lo > 32:
        a[lo:hi].sort()
        return
    for i in range(lo + 1, hi):
        v = a[i]
        j = i - 1
        while j >= lo and a[j] > v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = v


@njit(cache=True, inline="always")
def _epoch(m, word, blen):
    return (m + float(word) * TWO_M53) * blen


@njit(cache=True)
def site_counts(k0, code, lam, blen, m):
    na, nd, _, _ = _counts(k0, code, m, lam * blen, math.exp(-lam * blen), blen, math.exp(-blen))
    return na, nd


@njit(cache=True)
def site_block(k0, code, lam, blen, m):
    """Arrival epochs, departure epochs and 53-bit marks for one site-block."""
    na, nd, w2, w3 = _counts(k0, code, m, lam * blen, math.exp(-lam * blen), blen, math.exp(-blen))
    buf = np.empty(na + 2 * nd + 6, dtype=np.uint64)
    _fill_words(k0, code, m, na, nd, w2, w3, buf)
    ta = np.empty(na)
    td = np.empty(nd)
    for k in range(na):
        ta[k] = _epoch(m, buf[2 + k], blen)
    for k in range(nd):
        td[k] = _epoch(m, buf[2 + na + k], blen)
    marks = buf[2 + na + nd:2 + na + 2 * nd].copy()
    return ta, td, marks


@njit(cache=True)
def new_workspace(cap):
    """Buffers for :func:`universe_block`; the first four hold its output."""
    return (
        np.empty(cap),  # time
        np.empty(cap, dtype=np.int64),  # site rank
        np.empty(cap, dtype=np.int64),  # kind
        np.empty(cap, dtype=np.uint64),  # mark
        np.empty(cap, dtype=np.uint64),  # raw epoch words
        np.empty(cap, dtype=np.int64),
        np.empty(cap, dtype=np.int64),
        np.empty(cap, dtype=np.uint64),
        np.empty(cap, dtype=np.uint64),  # sort keys
        np.empty(cap, dtype=np.uint64),  # per-site substream
    )


@njit(cache=True)
def universe_block(k0, codes, lam, blen, m, ws):
    """Merged events of all sites of a universe in block ``m``.

    Writes into the workspace ``ws`` (see :func:`new_workspace`) and
    returns the event count, or ``-capacity`` when the workspace is too
    small.  Events are sorted by time with ties broken by site rank then
    kind; ranks follow the order of ``codes``.
    """
    bt, bs, bk, bm, words, sites, kinds, marks, keys, scratch = ws
    cap = bt.shape[0]
    nsites = codes.shape[0]
    mean_a = lam * blen
    p0_a = math.exp(-mean_a)
    p0_d = math.exp(-blen)
    pos = 0
    need = 0
    for s in range(nsites):
        code = codes[s]
        na, nd, w2, w3 = _counts(k0, code, m, mean_a, p0_a, blen, p0_d)
        if need > 0 or pos + na + nd > cap or na + 2 * nd + 6 > cap:
            need = max(need, pos + na + nd, na + 2 * nd + 6)
            pos += na + nd
            continue
        _fill_words(k0, code, m, na, nd, w2, w3, scratch)
        for k in range(na):
            words[pos] = scratch[2 + k]
            sites[pos] = s
            kinds[pos] = 0
            marks[pos] = 0
            pos += 1
        for k in range(nd):
            words[pos] = scratch[2 + na + k]
            sites[pos] = s
            kinds[pos] = 1
            marks[pos] = scratch[2 + na + nd + k]
            pos += 1
    if need > 0:
        return -2 * max(need, pos)
    # all epochs share the block, so the 53-bit word orders them; when the
    # index fits in the spare 11 bits one integer sort does the stable merge
    if pos <= 2048:
        for e in range(pos):
            keys[e] = (words[e] << uint64(11)) | uint64(e)
        keys[:pos].sort()
        for e in range(pos):
            o = keys[e] & uint64(2047)
            bt[e] = _epoch(m, words[o], blen)
            bs[e] = sites[o]
            bk[e] = kinds[o]
            bm[e] = marks[o]
    else:
        order = np.argsort(words[:pos], kind="mergesort")
        for e in range(pos):
            o = order[e]
            bt[e] = _epoch(m, words[o], blen)
            bs[e] = sites[o]
            bk[e] = kinds[o]
            bm[e] = marks[o]
    return pos


@njit(cache=True)
def next_block(k0, codes, lam, blen, m, ws):
    """:func:`universe_block`, growing the workspace as needed."""
    n = universe_block(k0, codes, lam, blen, m, ws)
    while n < 0:
        ws = new_workspace(-n)
        n = universe_block(k0, codes, lam, blen, m, ws)
    return n, ws


@njit(cache=True)
def window_events(k0, codes, lam, blen, t0, t1):
    """All universe events with ``t0 <= t < t1``, merged."""
    m0 = int(math.floor(t0 / blen))
    m1 = int(math.floor(t1 / blen))
    cap = 64
    out_t = np.empty(cap)
    out_site = np.empty(cap, dtype=np.int64)
    out_kind = np.empty(cap, dtype=np.int64)
    out_mark = np.empty(cap, dtype=np.uint64)
    ws = new_workspace(256)
    n_out = 0
    for m in range(m0, m1 + 1):
        n, ws = next_block(k0, codes, lam, blen, m, ws)
        bt, bs, bk, bm = ws[0], ws[1], ws[2], ws[3]
        for e in range(n):
            if bt[e] < t0 or bt[e] >= t1:
                continue
            if n_out == cap:
                cap *= 2
                out_t = np.concatenate((out_t, np.empty(cap - n_out)))
                out_site = np.concatenate((out_site, np.empty(cap - n_out, dtype=np.int64)))
                out_kind = np.concatenate((out_kind, np.empty(cap - n_out, dtype=np.int64)))
                out_mark = np.concatenate((out_mark, np.empty(cap - n_out, dtype=np.uint64)))
            out_t[n_out] = bt[e]
            out_site[n_out] = bs[e]
            out_kind[n_out] = bk[e]
            out_mark[n_out] = bm[e]
            n_out += 1
    return out_t[:n_out], out_site[:n_out], out_kind[:n_out], out_mark[:n_out]


@njit(cache=True)
def site_has_event(k0, code, lam, blen, t0, t1):
    """True iff the site has an arrival or potential departure in [t0, t1)."""
    m0 = int(math.floor(t0 / blen))
    m1 = int(math.floor(t1 / blen))
    for m in range(m0, m1 + 1):
        na, nd = site_counts(k0, code, lam, blen, m)
        if na + nd == 0:
            continue
        lo = m * blen
        hi = (m + 1) * blen
        if lo >= t0 and hi <= t1:
            return True
        ta, td, _ = site_block(k0, code, lam, blen, m)
        for t in ta:
            if t0 <= t < t1:
                return True
        for t in td:
            if t0 <= t < t1:
                return True
    return False


class Event(NamedTuple):
    time: float
    site: tuple
    kind: int
    mark: float | None


@dataclass(frozen=True)
class BlockEvents:
    arrivals: np.ndarray
    departures: np.ndarray
    mark_bits: np.ndarray

    @property
    def marks(self) -> np.ndarray:
        return self.mark_bits.astype(np.float64) * TWO_M53


@dataclass(frozen=True)
class EventList:
    """Merged events; ``site`` indexes rows of ``sites`` (sorted lexicographically)."""

    sites: np.ndarray
    time: np.ndarray
    site: np.ndarray
    kind: np.ndarray
    mark_bits: np.ndarray

    def __len__(self) -> int:
        return len(self.time)

    @property
    def marks(self) -> np.ndarray:
        out = self.mark_bits.astype(np.float64) * TWO_M53
        out[self.kind == ARRIVAL] = np.nan
        return out

    def __iter__(self) -> Iterator[Event]:
        marks = self.marks
        for t, s, k, u in zip(self.time, self.site, self.kind, marks):
            yield Event(
                float(t),
                tuple(int(c) for c in self.sites[s]),
                int(k),
                None if k == ARRIVAL else float(u),
            )


@dataclass(frozen=True)
class CountStats:
    arrivals: int
    departures: int


def sorted_sites(sites) -> np.ndarray:
    """Sites as an (M, d) int64 array in lexicographic order, duplicates removed."""
    arr = np.array([(s,) if np.isscalar(s) else tuple(s) for s in sites], dtype=np.int64)
    if arr.size == 0:
        return arr.reshape(0, 1)
    return np.unique(arr, axis=0)


class DrivingStream:
    """The driving data of one probability space, keyed by ``seed``.

    Generation is pure, so the block memo used by :meth:`block` is safe to
    share between threads.
    """

    def __init__(self, seed: int, lam: float, block_length: float = 1.0):
        if lam < 0:
            raise ValueError("arrival rate must be non-negative")
        if block_length <= 0:
            raise ValueError("block length must be positive")
        self.seed = int(seed)
        self.lam = float(lam)
        self.block_length = float(block_length)
        self.key = seed_key(seed)
        self._cache: dict[tuple[int, int], BlockEvents] = {}

    def __repr__(self) -> str:
        return f"DrivingStream(seed={self.seed}, lam={self.lam}, block_length={self.block_length})"

    def block(self, site, m: int) -> BlockEvents:
        code = site_code(site)
        hit = self._cache.get((code, m))
        if hit is None:
            ta, td, marks = site_block(self.key, np.uint64(code), self.lam, self.block_length, m)
            hit = BlockEvents(ta, td, marks)
            self._cache[(code, m)] = hit
        return hit

    def events_in(self, sites, t0: float, t1: float) -> EventList:
        if not t0 < t1:
            raise EmptyWindowError(f"empty window [{t0}, {t1})")
        arr = sorted_sites(sites)
        codes = np.array([site_code(tuple(s)) for s in arr], dtype=np.uint64)
        t, s, k, mk = window_events(self.key, codes, self.lam, self.block_length, float(t0), float(t1))
        return EventList(arr, t, s, k, mk)

    def has_event(self, site, t0: float, t1: float) -> bool:
        return site_has_event(
            self.key, np.uint64(site_code(site)), self.lam, self.block_length, float(t0), float(t1)
        )


@njit(cache=True)
def _count_range(k0, code, lam, blen, horizon):
    last = int(math.floor(horizon / blen))
    na = 0
    nd = 0
    for m in range(last):
        a, d = site_counts(k0, code, lam, blen, m)
        na += a
        nd += d
    ta, td, _ = site_block(k0, code, lam, blen, last)
    na += np.count_nonzero(ta <= horizon)
    nd += np.count_nonzero(td <= horizon)
    return na, nd


def count_statistics(stream: DrivingStream, site, horizon: float) -> CountStats:
    """Arrival and potential-departure counts of one site over [0, horizon]."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    na, nd = _count_range(
        stream.key, np.uint64(site_code(site)), stream.lam, stream.block_length, float(horizon)
    )
    return CountStats(int(na), int(nd))
