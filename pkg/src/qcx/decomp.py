"""Quasiconvexity of additively decomposable sums via convexity indices.

A decomposable sum ``s(x_1, ..., x_n) = f_1(x_1) + ... + f_n(x_n)`` of
non-constant coordinate functions is quasiconvex exactly when the sum of the
coordinate convexity indices is nonnegative. Equivalently: either every
coordinate is convex, or all but one are convex and the reciprocal index sum
``sum_i 1/c_i`` is nonpositive (reciprocals under the ``1/0 = +inf``
convention). For convex coordinates the index of the sum itself obeys the
harmonic formula ``1/c(s) = sum_i 1/c(f_i)``.

This module decides sums from index vectors, extends the decision to
truncated infinite streams, and provides a brute-force product-grid oracle
that validates the index criteria end to end.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .cindex import ConvexityIndex, compute_index
from .errors import InfiniteIndexError, NegativeIndexError
from .extcore import (BoxDomain, CertResult, DEFAULT_ETAS, FunctionSpec,
                      certify_quasiconvex)
from .extreal import ext_inv

#: Verdict margins closer to zero than this are flagged as boundary cases.
DEFAULT_BOUNDARY_MARGIN = 1e-3


class SumDecision(enum.Enum):
    QUASICONVEX = "quasiconvex"
    NOT_QUASICONVEX = "not-quasiconvex"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SumVerdict:
    """Decision, the rule that fired, and the distance from its threshold.

    ``boundary`` is set when the margin is within the configured band of the
    threshold; the decision then follows the inclusive reading (a margin of
    exactly zero counts as quasiconvex) but should be treated as fragile.
    """

    decision: SumDecision
    rule: str
    margin: float
    boundary: bool = False


def _require_finite(indices: Sequence[float]) -> list[float]:
    out = []
    for k, c in enumerate(indices):
        c = float(c)
        if math.isinf(c):
            raise InfiniteIndexError(
                f"coordinate {k} has infinite index; the criteria require "
                "non-constant coordinates")
        if math.isnan(c):
            raise ValueError(f"coordinate {k} index is NaN")
        out.append(c)
    return out


def index_sum_criterion(indices: Sequence[float],
                        boundary_margin: float = DEFAULT_BOUNDARY_MARGIN) -> SumVerdict:
    """Decide quasiconvexity from the sign of the index sum.

    The margin is ``sum(indices)``; within ``boundary_margin`` of zero the
    verdict follows the sign (zero inclusive as quasiconvex) with the
    boundary flag set, since bisection error makes an exact zero
    untrustworthy.

    The sign form is exact for two coordinates. With three or more
    coordinates and a non-convex exception it is only necessary: the convex
    block must first be aggregated by :func:`harmonic_index`, which is what
    :func:`characterize` does; prefer that one as the decisive criterion.
    """
    cs = _require_finite(indices)
    total = sum(cs)
    boundary = abs(total) < boundary_margin
    if total >= 0:
        return SumVerdict(SumDecision.QUASICONVEX, "index-sum", total, boundary)
    return SumVerdict(SumDecision.NOT_QUASICONVEX, "index-sum", total, boundary)


def characterize(indices: Sequence[float],
                 boundary_margin: float = DEFAULT_BOUNDARY_MARGIN) -> SumVerdict:
    """Decide via the structural characterization.

    All coordinates convex: quasiconvex (rule ``all-convex``). Exactly one
    negative index: quasiconvex iff ``sum_i 1/c_i <= 0`` under ``1/0 = +inf``
    (rule ``one-exception-reciprocal``); a zero-index convex coordinate next
    to an exception therefore forces not-quasiconvex. Two or more negative
    indices: not quasiconvex (rule ``multiple-exceptions``).
    """
    cs = _require_finite(indices)
    negatives = [c for c in cs if c < 0]
    if not negatives:
        return SumVerdict(SumDecision.QUASICONVEX, "all-convex",
                          min(cs) if cs else 0.0)
    if len(negatives) >= 2:
        return SumVerdict(SumDecision.NOT_QUASICONVEX, "multiple-exceptions",
                          sum(negatives))
    recip = sum(ext_inv(c) for c in cs)
    margin = -recip  # quasiconvex iff recip <= 0
    boundary = abs(recip) < boundary_margin if math.isfinite(recip) else False
    if recip <= 0:
        return SumVerdict(SumDecision.QUASICONVEX, "one-exception-reciprocal",
                          margin, boundary)
    return SumVerdict(SumDecision.NOT_QUASICONVEX, "one-exception-reciprocal",
                      margin, boundary)


def harmonic_index(indices: Sequence[float]) -> float:
    """Index of a sum of convex coordinates: ``1 / sum_i (1/c_i)``.

    Conventions: any zero index forces 0; all-``+inf`` (all constant) gives
    ``+inf``. Indices must be nonnegative.
    """
    total = 0.0
    for k, c in enumerate(indices):
        c = float(c)
        if math.isnan(c) or c < 0:
            raise NegativeIndexError(
                f"coordinate {k} has index {c}; the harmonic formula needs "
                "convex coordinates")
        total += ext_inv(c)
    return ext_inv(total)


def infinite_sum_criterion(index_stream: Iterable[float], n_max: int,
                           tail_bound: Optional[float] = None) -> SumVerdict:
    """Decide a truncated infinite sum from a stream of coordinate indices.

    Walks at most ``n_max`` indices, accumulating ``a_N = sum 1/c_i``. A
    second negative index decides not-quasiconvex immediately (at most one
    exception is possible). After the exception has been seen the partial
    sums are nondecreasing, so ``a_N > 0`` also decides not-quasiconvex.
    Quasiconvexity needs a caller-supplied nonnegative ``tail_bound`` on the
    remaining reciprocals: concluded when ``a_N + tail_bound <= 0``.
    Otherwise the verdict is inconclusive at ``n_max``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if tail_bound is not None and tail_bound < 0:
        raise ValueError("tail_bound must be nonnegative")
    seen_negative = 0
    a = 0.0
    n = 0
    it: Iterator[float] = iter(index_stream)
    for c in it:
        n += 1
        c = float(c)
        if math.isinf(c):
            raise InfiniteIndexError(
                f"stream index {n} is infinite; constants are excluded")
        if c < 0:
            seen_negative += 1
            if seen_negative >= 2:
                return SumVerdict(SumDecision.NOT_QUASICONVEX,
                                  "multiple-exceptions", a)
        a += ext_inv(c)
        if seen_negative == 1:
            if a > 0:
                return SumVerdict(SumDecision.NOT_QUASICONVEX,
                                  "partial-sum-positive", a)
            if tail_bound is not None and a + tail_bound <= 0:
                return SumVerdict(SumDecision.QUASICONVEX,
                                  "partial-sum-with-tail", -(a + tail_bound))
        if n >= n_max:
            break
    return SumVerdict(SumDecision.INCONCLUSIVE, "budget-exhausted", a)


# ---------------------------------------------------------------------------
# sums of concrete functions
# ---------------------------------------------------------------------------

@dataclass
class DecomposableSum:
    """Concrete coordinate functions on their boxes, summed blockwise."""

    coords: tuple[tuple[FunctionSpec, BoxDomain], ...]
    _indices: Optional[tuple[ConvexityIndex, ...]] = field(default=None,
                                                           repr=False)

    def __post_init__(self):
        self.coords = tuple((f, b) for f, b in self.coords)
        if not self.coords:
            raise ValueError("a decomposable sum needs at least one coordinate")

    @property
    def dim(self) -> int:
        return sum(b.dim for _, b in self.coords)

    def product_box(self, m_override: Optional[Sequence[int]] = None) -> BoxDomain:
        lo: list[float] = []
        hi: list[float] = []
        m: list[int] = []
        for _, b in self.coords:
            lo.extend(b.lo)
            hi.extend(b.hi)
            m.extend(b.m)
        if m_override is not None:
            if len(m_override) != len(m):
                raise ValueError("m_override length mismatch")
            m = list(m_override)
        return BoxDomain(tuple(lo), tuple(hi), tuple(m))

    def as_function(self) -> FunctionSpec:
        """The sum as a single function of the stacked coordinates."""
        spans = []
        start = 0
        for f, b in self.coords:
            spans.append((f, start, start + b.dim))
            start += b.dim

        def fn(pts: np.ndarray) -> np.ndarray:
            total = np.zeros(len(pts))
            for f, s, e in spans:
                total = total + f(pts[:, s:e])
            return total

        name = " + ".join(f.name or f"f{k}" for k, (f, _) in enumerate(self.coords))
        return FunctionSpec(dim=self.dim, fn=fn, name=name)

    def indices(self, recompute: bool = False, **kwargs) -> tuple[ConvexityIndex, ...]:
        """Coordinate indices, computed once and cached."""
        if self._indices is None or recompute:
            self._indices = tuple(compute_index(f, b, **kwargs)
                                  for f, b in self.coords)
        return self._indices

    def index_values(self, **kwargs) -> list[float]:
        return [ix.value for ix in self.indices(**kwargs)]


def brute_force_sum_quasiconvex(dsum: DecomposableSum, tol: float = 1e-9,
                                pair_budget: int = 10 ** 6,
                                m_override: Optional[Sequence[int]] = None,
                                etas=DEFAULT_ETAS, threads: int = 1) -> CertResult:
    """Certify quasiconvexity of the sum on the full product grid.

    Pairs are drawn across the whole product (not coordinatewise); the scan
    refuses to start if the all-pairs count would exceed ``pair_budget``.
    """
    box = dsum.product_box(m_override)
    return certify_quasiconvex(dsum.as_function(), box, tol=tol, etas=etas,
                               threads=threads, pair_budget=pair_budget)
