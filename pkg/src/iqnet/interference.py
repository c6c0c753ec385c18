"""Interference sequences and the closed-form quantities derived from them."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Rational, Real
from typing import Mapping

import numpy as np

from .errors import (
    AboveThresholdError,
    AsymmetricError,
    DegenerateError,
    InterferenceError,
    NegativeWeightError,
    NonpositiveCenterError,
    SupercriticalError,
    TorusTooSmallError,
)

Offset = tuple[int, ...]


@dataclass(frozen=True)
class SecondMomentBound:
    c: float
    threshold: float
    bound: float


@dataclass(frozen=True, eq=False)
class InterferenceSequence:
    """Symmetric, finitely supported, non-negative weights on Z^d.

    ``weights`` holds only strictly positive entries.  Weights are
    ``Fraction`` when every input was rational (int or Fraction), otherwise
    ``float``; ``exact`` tells which.
    """

    dimension: int
    weights: Mapping[Offset, Fraction | float]
    exact: bool

    @property
    def a0(self) -> float:
        return float(self.weights[(0,) * self.dimension])

    @cached_property
    def support_radius(self) -> int:
        return max(max(abs(c) for c in off) for off in self.weights)

    @cached_property
    def total(self) -> float:
        """Sum of all weights."""
        return float(sum(self.weights.values()))

    @cached_property
    def off_center_total(self) -> float:
        zero = (0,) * self.dimension
        return float(sum(w for off, w in self.weights.items() if off != zero))

    def weight(self, offset) -> Fraction | float:
        off = _as_offset(offset, self.dimension)
        return self.weights.get(off, 0)

    def offsets(self) -> list[Offset]:
        return sorted(self.weights)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Offsets (k, d) int64 and float weights (k,), lexicographic order."""
        offs = self.offsets()
        return (
            np.array(offs, dtype=np.int64).reshape(len(offs), self.dimension),
            np.array([float(self.weights[o]) for o in offs]),
        )

    def integer_weights(self) -> tuple[np.ndarray, int]:
        """Weights scaled to integers by their common denominator D.

        Only defined for exact sequences.  Returns (scaled weights, D) in
        the order of :meth:`offsets`.
        """
        if not self.exact:
            raise InterferenceError("integer weights need an exact sequence")
        offs = self.offsets()
        den = math.lcm(*(Fraction(self.weights[o]).denominator for o in offs))
        scaled = [int(Fraction(self.weights[o]) * den) for o in offs]
        return np.array(scaled, dtype=np.int64), den

    def __repr__(self) -> str:
        return (
            f"InterferenceSequence(d={self.dimension}, L={self.support_radius}, "
            f"total={self.total:g}, exact={self.exact})"
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, InterferenceSequence):
            return NotImplemented
        return self.dimension == other.dimension and dict(self.weights) == dict(other.weights)

    def __hash__(self) -> int:
        return hash((self.dimension, tuple(sorted(self.weights.items()))))


def _as_offset(key, d: int) -> Offset:
    if isinstance(key, (int, np.integer)):
        off = (int(key),)
    else:
        off = tuple(int(c) for c in key)
    if len(off) != d:
        raise InterferenceError(f"offset {key!r} does not have dimension {d}")
    return off


def validate(raw: Mapping, d: int = 1) -> InterferenceSequence:
    """Check a raw ``{offset: weight}`` map and build a sequence.

    Offsets are ints (d = 1) or length-d tuples.  Zero weights are dropped.
    """
    if d < 1:
        raise InterferenceError("dimension must be positive")
    exact = all(isinstance(w, Rational) for w in raw.values())
    weights: dict[Offset, Fraction | float] = {}
    for key, w in raw.items():
        if not isinstance(w, Real) or not math.isfinite(w):
            raise InterferenceError(f"weight at {key!r} is not a finite real")
        if w < 0:
            raise NegativeWeightError(f"negative weight {w} at offset {key!r}")
        off = _as_offset(key, d)
        if off in weights:
            raise InterferenceError(f"duplicate offset {off}")
        weights[off] = Fraction(w) if exact else float(w)
    zero = (0,) * d
    if weights.get(zero, 0) <= 0:
        raise NonpositiveCenterError("weight at the zero offset must be positive")
    for off, w in weights.items():
        mirror = tuple(-c for c in off)
        if weights.get(mirror, 0) != w:
            raise AsymmetricError(f"a{off} = {w} but a{mirror} = {weights.get(mirror, 0)}")
    positive = {off: w for off, w in weights.items() if w > 0}
    return InterferenceSequence(d, positive, exact)


def ones(width: int, d: int = 1) -> InterferenceSequence:
    """Unit weights on the sup-norm ball of odd side ``width``."""
    if width < 1 or width % 2 == 0:
        raise InterferenceError("width must be a positive odd integer")
    r = width // 2
    raw = {off: 1 for off in itertools.product(range(-r, r + 1), repeat=d)}
    return validate(raw, d)


def geometric(ratio, radius: int, d: int = 1) -> InterferenceSequence:
    """Weights ``ratio ** |j|_inf`` for offsets of sup-norm at most ``radius``."""
    if not 0 < ratio < 1:
        raise InterferenceError("ratio must lie in (0, 1)")
    raw = {
        off: ratio ** max(abs(c) for c in off)
        for off in itertools.product(range(-radius, radius + 1), repeat=d)
    }
    return validate(raw, d)


def _hermite_diagonal(vectors: list[list[int]], d: int) -> list[int]:
    """Diagonal of a Hermite basis of the lattice spanned by ``vectors``.

    Integer row reduction with Euclidean steps, one column at a time.
    """
    rows = [list(v) for v in vectors if any(v)]
    diag = []
    for col in range(d):
        pivot_rows = [r for r in rows if r[col] != 0]
        rest = [r for r in rows if r[col] == 0]
        while len(pivot_rows) > 1:
            pivot_rows.sort(key=lambda r: abs(r[col]))
            p = pivot_rows[0]
            reduced = [p]
            for r in pivot_rows[1:]:
                q = r[col] // p[col]
                r = [a - q * b for a, b in zip(r, p)]
                (reduced if r[col] != 0 else rest).append(r)
            pivot_rows = reduced
        if not pivot_rows:
            diag.append(0)
            rows = rest
            continue
        diag.append(abs(pivot_rows[0][col]))
        rows = [r for r in rest if any(r)]
    return diag


def is_irreducible(seq: InterferenceSequence) -> bool:
    """True iff the positive-weight offsets generate all of Z^d."""
    vectors = [list(off) for off in seq.weights if any(off)]
    if seq.dimension == 1:
        return math.gcd(*(abs(v[0]) for v in vectors)) == 1 if vectors else False
    return _hermite_diagonal(vectors, seq.dimension) == [1] * seq.dimension


def critical_rate(seq: InterferenceSequence) -> float:
    return 1.0 / seq.total


def _check_subcritical(seq: InterferenceSequence, lam: float) -> None:
    if lam < 0:
        raise InterferenceError("arrival rate must be non-negative")
    if lam * seq.total >= 1.0:
        raise SupercriticalError(
            f"lambda={lam} is not below the critical rate {critical_rate(seq):.6g}"
        )


def closed_form_mean(seq: InterferenceSequence, lam: float) -> float:
    """Mean queue length of the minimal stationary regime."""
    _check_subcritical(seq, lam)
    return lam * seq.a0 / (1.0 - lam * seq.total)


def second_moment_bound(seq: InterferenceSequence, lam: float) -> SecondMomentBound:
    off = seq.off_center_total
    if off == 0:
        raise DegenerateError("no off-center weight: the bound does not apply")
    a0, total = seq.a0, seq.total
    # rationalized form avoids cancellation when off is small against a0
    c = a0 / (math.sqrt(a0 * a0 + a0 * off) + a0)
    threshold = (2.0 / 3.0) * (1.0 + c) / total
    if lam >= threshold:
        raise AboveThresholdError(f"lambda={lam} is not below the threshold {threshold:.6g}")
    mu = closed_form_mean(seq, lam)
    bound = 2.0 * mu * (lam + lam * total + 1.0) / (2.0 * (1.0 + c) - 3.0 * lam * total)
    return SecondMomentBound(c, threshold, bound)


def k_shifted_mean_bound(seq: InterferenceSequence, lam: float, K: int) -> float:
    if K < 0 or int(K) != K:
        raise InterferenceError("K must be a non-negative integer")
    _check_subcritical(seq, lam)
    return (lam + K) / (1.0 - lam * seq.total)


def truncate(seq: InterferenceSequence, radius: int) -> InterferenceSequence:
    if radius < 0:
        raise InterferenceError("radius must be non-negative")
    kept = {off: w for off, w in seq.weights.items() if max(abs(c) for c in off) <= radius}
    return InterferenceSequence(seq.dimension, kept, seq.exact)


def torus_displacement(i, j, n: int, support_radius: int = 0) -> Offset:
    """Centered residue of ``i - j`` modulo ``2n + 1``, per coordinate."""
    size = 2 * n + 1
    if size <= 2 * support_radius:
        raise TorusTooSmallError(f"torus of side {size} is too small for support radius {support_radius}")
    ii = (i,) if isinstance(i, (int, np.integer)) else tuple(i)
    jj = (j,) if isinstance(j, (int, np.integer)) else tuple(j)
    return tuple((a - b + n) % size - n for a, b in zip(ii, jj))
