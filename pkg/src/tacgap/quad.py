"""Gauss-Legendre rules, interval unions and truncated semi-infinite rules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainModelError, ParameterError

__all__ = [
    "IntervalUnion",
    "QuadRule",
    "gauss_legendre",
    "map_affine",
    "semi_infinite_rule",
    "composite_rule",
    "tail_cutoff",
]

_NEWTON_TOL = 1e-15
_NEWTON_MAXITER = 20


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, pairwise disjoint closed intervals ``[lo, hi]`` with ``lo < hi``."""

    pieces: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        pieces = tuple((float(lo), float(hi)) for lo, hi in self.pieces)
        for lo, hi in pieces:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ParameterError(f"interval [{lo}, {hi}] is not finite")
            if not lo < hi:
                raise DomainModelError(f"interval [{lo}, {hi}] is empty or reversed")
        for (_, hi), (lo, _) in zip(pieces, pieces[1:]):
            if not hi < lo:
                raise DomainModelError("interval pieces must be strictly increasing and disjoint")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def parse(cls, text: str) -> "IntervalUnion":
        """Parse ``"lo:hi[,lo:hi...]"``."""
        pieces = []
        for chunk in text.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            try:
                lo, hi = chunk.split(":")
                pieces.append((float(lo), float(hi)))
            except ValueError:
                raise ParameterError(f"bad interval {chunk!r}; expected lo:hi") from None
        return cls(tuple(pieces))

    @property
    def total_length(self) -> float:
        return sum(hi - lo for lo, hi in self.pieces)

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    def shifted(self, offset: float) -> "IntervalUnion":
        return IntervalUnion(tuple((lo + offset, hi + offset) for lo, hi in self.pieces))

    def __contains__(self, x: float) -> bool:
        return any(lo <= x <= hi for lo, hi in self.pieces)

    def __str__(self) -> str:
        return ",".join(f"{lo!r}:{hi!r}" for lo, hi in self.pieces)


@dataclass(frozen=True)
class QuadRule:
    """Nodes and positive weights discretizing ``domain``.

    ``slices`` records where each interval piece sits in the node array;
    ``semi_infinite`` marks a rule on ``[lo, T]`` standing in for ``[lo, inf)``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain: IntervalUnion
    slices: tuple[slice, ...] = field(default=())
    semi_infinite: bool = False

    def __post_init__(self):
        for arr in (self.nodes, self.weights):
            arr.setflags(write=False)
        if not self.slices:
            object.__setattr__(self, "slices", (slice(0, len(self.nodes)),))

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def upper(self) -> float:
        return self.domain.pieces[-1][1]

    def integrate(self, values) -> float:
        """Weighted sum: correctly rounded within each piece, pieces added left to right."""
        values = np.asarray(values, dtype=float)
        total = 0.0
        for sl in self.slices:
            total += math.fsum(self.weights[sl] * values[sl])
        return total


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p_prev, p = np.ones_like(x), x.copy()
    for j in range(2, n + 1):
        p_prev, p = p, ((2 * j - 1) * x * p - (j - 1) * p_prev) / j
    return p, n * (x * p - p_prev) / (x * x - 1.0)


@lru_cache(maxsize=64)
def _legendre_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    # extended precision where the platform has it, rounded once at the end
    k = np.arange(1, n + 1, dtype=np.longdouble)
    pi = np.longdouble(np.pi)
    # Tricomi initial guesses, ascending
    x = -np.cos(pi * (k - np.longdouble(0.25)) / (n + np.longdouble(0.5)))
    for _ in range(_NEWTON_MAXITER):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) <= _NEWTON_TOL:
            break
    p, dp = _legendre_and_derivative(n, x)
    x = x - p / dp
    _, dp = _legendre_and_derivative(n, x)
    w = 2 / ((1 - x) * (1 + x) * dp * dp)
    x, w = x.astype(float), w.astype(float)
    # enforce exact symmetry about 0
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


def gauss_legendre(n: int) -> QuadRule:
    """``n``-point Gauss-Legendre rule on [-1, 1] by Newton iteration."""
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= 512:
        raise ParameterError("gauss_legendre: n must be an integer in [1, 512]")
    x, w = _legendre_nodes(int(n))
    return QuadRule(x.copy(), w.copy(), IntervalUnion(((-1.0, 1.0),)))


def map_affine(rule: QuadRule, lo: float, hi: float) -> QuadRule:
    """Transplant a rule on [-1, 1] to ``[lo, hi]``."""
    if not lo < hi:
        raise ParameterError(f"map_affine: need lo < hi, got [{lo}, {hi}]")
    if rule.domain.pieces != ((-1.0, 1.0),):
        raise ParameterError("map_affine expects a rule on [-1, 1]")
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid + half * rule.nodes
    # mirror the upper half so symmetric pairs sum to lo + hi exactly
    m = len(nodes) // 2
    if m:
        nodes[:m] = ((lo + hi) - nodes[len(nodes) - m:])[::-1]
    return QuadRule(nodes, half * rule.weights, IntervalUnion(((lo, hi),)))


def tail_cutoff(lo: float, tol: float) -> float:
    """Truncation point ``T`` with ``exp(-2/3 max(T,1)^{3/2}) < tol``, clipped to [lo+6, lo+40]."""
    t = (1.5 * math.log(1.0 / tol)) ** (2.0 / 3.0)
    # strict inequality: nudge past the equality point
    t = max(t * (1.0 + 1e-12), 1.0)
    return min(max(t, lo + 6.0), lo + 40.0)


def semi_infinite_rule(lo: float, tol: float, n: int) -> QuadRule:
    """``n``-point Gauss-Legendre rule on ``[lo, T]`` standing in for ``[lo, inf)``.

    Every integrand this package feeds it decays at least like ``Ai(c u)``,
    so ``T`` is set from the cubic-exponential Airy tail bound.
    """
    if not (0.0 < tol <= 1e-4):
        raise ParameterError("semi_infinite_rule: tol must lie in (0, 1e-4]")
    if n < 8:
        raise ParameterError("semi_infinite_rule: n must be at least 8")
    if not math.isfinite(lo):
        raise ParameterError("semi_infinite_rule: lo must be finite")
    mapped = map_affine(gauss_legendre(n), lo, tail_cutoff(lo, tol))
    return QuadRule(mapped.nodes, mapped.weights, mapped.domain, semi_infinite=True)


def composite_rule(domain: IntervalUnion | Sequence[tuple[float, float]], n_per: int) -> QuadRule:
    """Per-piece mapped Gauss-Legendre rules, concatenated in piece order."""
    if not isinstance(domain, IntervalUnion):
        domain = IntervalUnion(tuple(domain))
    if n_per < 1:
        raise ParameterError("composite_rule: n_per must be positive")
    base = gauss_legendre(n_per)
    nodes, weights, slices = [], [], []
    start = 0
    for lo, hi in domain.pieces:
        piece = map_affine(base, lo, hi)
        nodes.append(piece.nodes)
        weights.append(piece.weights)
        slices.append(slice(start, start + n_per))
        start += n_per
    if not nodes:
        return QuadRule(np.empty(0), np.empty(0), domain, (slice(0, 0),))
    return QuadRule(np.concatenate(nodes), np.concatenate(weights), domain, tuple(slices))
