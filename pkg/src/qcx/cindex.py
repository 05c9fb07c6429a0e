"""The convexity index of an extended-real function.

For a proper function ``f`` and a real ``lam``, consider the transform
``r_lam(x) = exp(-lam * f(x))`` under the extended-real conventions. Two
regimes are possible and they do not mix:

* some ``r_lam`` with ``lam < 0`` fails to be convex; then the set of
  negative ``lam`` with ``r_lam`` convex is a down-set and the index is its
  supremum (case I, index in ``[-inf, 0)``);
* ``r_lam`` is convex for every ``lam < 0``; then the set of nonnegative
  ``lam`` with ``r_lam`` concave is a down-set within ``[0, inf)`` and the
  index is its supremum (case II, index in ``[0, +inf]``).

The index is nonnegative exactly when ``f`` is convex, it is ``+inf``
exactly when ``f`` is constant (for lower semicontinuous ``f``), and it
scales as ``index(w * f) = index(f) / w`` for ``w >= 0``.

The down-set structure makes the index computable by bisection on a single
monotone boolean predicate per case. Each predicate evaluation is a grid
certification from :mod:`qcx.extcore`, so the computed value inherits the
grid semantics: it is the break-even point of the *grid* transform family,
reported with a bracket of the requested width.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CapTooSmallWarning, MissingDerivativesError
from .extcore import (BoxDomain, CertResult, DEFAULT_ETAS, FunctionSpec,
                      PairTable, Verdict, default_gap_tol)
from .extreal import POS_INF, NEG_INF

#: Relative tolerance of the mix-normalized exponential-transform test.
REL_GAP_TOL = 1e-12

#: Hard ceiling on bisection steps; the bracket also stops at width <= tol.
MAX_BISECT_ITERS = 60

DEFAULT_LAMBDA_CAP = 1e4
DEFAULT_BRACKET_TOL = 1e-4


class IndexCase(enum.Enum):
    CASE_I = "I"    # some r_lam with lam < 0 is not convex; index < 0
    CASE_II = "II"  # r_lam convex for all lam < 0; index >= 0


class Convexity(enum.Enum):
    CONVEX = "convex"
    NOT_CONVEX = "not-convex"


class Constancy(enum.Enum):
    CONSTANT = "constant"
    NOT_CONSTANT = "not-constant"


@dataclass(frozen=True)
class Classification:
    convexity: Convexity
    constancy: Constancy

    @property
    def convex(self) -> bool:
        return self.convexity is Convexity.CONVEX

    @property
    def constant(self) -> bool:
        return self.constancy is Constancy.CONSTANT


@dataclass(frozen=True)
class ConvexityIndex:
    """A computed index with its bracket and provenance.

    ``bracket`` is absent for infinite values. ``cap_probe`` marks values
    reported as +-inf purely because the probe at the lambda cap did not
    flip; ``constant_shortcut`` marks +inf values detected from a flat grid
    before any probing.
    """

    value: float
    bracket: Optional[tuple[float, float]]
    case: IndexCase
    lambda_cap: float
    cap_probe: bool = False
    constant_shortcut: bool = False
    probes: tuple[tuple[float, bool], ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.case is IndexCase.CASE_I and not (self.value < 0):
            raise ValueError("case I index must be negative")
        if self.case is IndexCase.CASE_II and not (self.value >= 0):
            raise ValueError("case II index must be nonnegative")
        if self.bracket is not None:
            lo, hi = self.bracket
            if not (lo <= self.value <= hi):
                raise ValueError("bracket must contain the value")


def r_lambda(f: FunctionSpec, lam: float) -> FunctionSpec:
    """The transform ``x -> exp(-lam * f(x))`` as a new function spec.

    The result is not required to be proper (it may vanish identically where
    ``f`` is ``+inf``), so properness checking is disabled on it.
    """
    if not math.isfinite(lam):
        raise ValueError("lam must be finite")

    def fn(pts: np.ndarray) -> np.ndarray:
        vals = f(pts)
        if lam == 0.0:
            return np.ones_like(vals)
        with np.errstate(all="ignore"):
            return np.exp(-lam * vals)

    return FunctionSpec(dim=f.dim, fn=fn, proper=False,
                        name=f"exp(-{lam:g}*{f.name or 'f'})")


def _bisect(table: PairTable, lo: float, hi: float, sign: int, tol: float,
            probes: list[tuple[float, bool]]) -> tuple[float, float]:
    """Monotone bisection of ``exp_transform_ok`` on [lo, hi].

    The predicate holds at ``lo`` and fails at ``hi``; both stay on the
    correct side throughout.
    """
    for _ in range(MAX_BISECT_ITERS):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        ok = table.exp_transform_ok(mid, sign, REL_GAP_TOL)
        probes.append((mid, ok))
        if ok:
            lo = mid
        else:
            hi = mid
    return lo, hi


def compute_index(f: FunctionSpec, box: BoxDomain,
                  lambda_cap: float = DEFAULT_LAMBDA_CAP,
                  tol: float = DEFAULT_BRACKET_TOL,
                  gap_tol: Optional[float] = None,
                  etas=DEFAULT_ETAS, threads: int = 1) -> ConvexityIndex:
    """Bisect for the convexity index of ``f`` on the box grid.

    ``tol`` is the requested bracket width. ``gap_tol`` is the absolute
    tolerance of the entry certification of ``f`` itself (defaults per
    :func:`qcx.extcore.default_gap_tol`); the exponential-transform probes
    use the mix-normalized relative test, which is immune to overflow at
    extreme lambda.

    Near-constant inputs (grid range spread below 1e-10) classify as
    constant, index ``+inf``, without probing. A ``+-inf`` result obtained
    because the cap probe did not flip carries ``cap_probe=True`` and emits
    :class:`qcx.errors.CapTooSmallWarning`.
    """
    if lambda_cap <= 0 or tol <= 0:
        raise ValueError("lambda_cap and tol must be positive")
    table = PairTable(f, box, etas=etas, threads=threads)
    spread = float(np.max(table.grid_values) - np.min(table.grid_values))
    if spread < 1e-10:
        return ConvexityIndex(POS_INF, None, IndexCase.CASE_II, lambda_cap,
                              constant_shortcut=True)
    if gap_tol is None:
        gap_tol = default_gap_tol(f)
    probes: list[tuple[float, bool]] = []
    base_worst, base_witness, _ = table.scan("convex", gap_tol)
    if base_witness is not None:
        # case I: f is not convex, the index is negative
        ok = table.exp_transform_ok(-lambda_cap, +1, REL_GAP_TOL)
        probes.append((-lambda_cap, ok))
        if not ok:
            warnings.warn("index is -inf at the probe cap; increase lambda_cap "
                          "to look further", CapTooSmallWarning)
            return ConvexityIndex(NEG_INF, None, IndexCase.CASE_I, lambda_cap,
                                  cap_probe=True, probes=tuple(probes))
        lo, hi = _bisect(table, -lambda_cap, 0.0, +1, tol, probes)
        value = 0.5 * (lo + hi)
        if value >= 0.0:  # bracket collapsed onto 0 from below
            value = math.nextafter(0.0, -1.0)
        return ConvexityIndex(value, (lo, hi), IndexCase.CASE_I, lambda_cap,
                              probes=tuple(probes))
    # case II: f certified convex, the index is nonnegative
    ok = table.exp_transform_ok(lambda_cap, -1, REL_GAP_TOL)
    probes.append((lambda_cap, ok))
    if ok:
        warnings.warn("index is +inf at the probe cap; the function may be "
                      "constant or the cap too small", CapTooSmallWarning)
        return ConvexityIndex(POS_INF, None, IndexCase.CASE_II, lambda_cap,
                              cap_probe=True, probes=tuple(probes))
    lo, hi = _bisect(table, 0.0, lambda_cap, -1, tol, probes)
    return ConvexityIndex(0.5 * (lo + hi), (lo, hi), IndexCase.CASE_II,
                          lambda_cap, probes=tuple(probes))


def smooth_index_1d(f: FunctionSpec, box: BoxDomain) -> float:
    """Closed-form cross-check for twice differentiable 1-D functions.

    The transform ``exp(-lam f)`` has second derivative proportional to
    ``lam * (lam f'^2 - f'')``, so on a 1-D box the break-even lambda is the
    infimum over the grid of ``f''(x) / f'(x)^2``. Stationary points follow
    the conventions: ``f' = 0`` with ``f'' < 0`` forces ``-inf``; otherwise a
    stationary point imposes no constraint and contributes ``+inf``.
    """
    if f.dim != 1:
        raise MissingDerivativesError("smooth cross-check is 1-D only")
    if not f.smooth:
        raise MissingDerivativesError("grad and hess oracles are required")
    pts = box.points()
    fp = np.asarray(f.grad(pts), dtype=float).reshape(-1)
    fpp = np.asarray(f.hess(pts), dtype=float).reshape(-1)
    stationary = fp == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = fpp / fp ** 2
    ratio = np.where(stationary & (fpp < 0), NEG_INF, ratio)
    ratio = np.where(stationary & (fpp >= 0), POS_INF, ratio)
    return float(np.min(ratio))


def scale_index(c: float, w: float) -> float:
    """Index of ``w * f`` from the index of ``f``: ``c / w`` with conventions.

    ``w = 0`` collapses the function to a constant, whose index is ``+inf``.
    """
    if w < 0:
        raise ValueError("w must be nonnegative")
    if w == 0.0:
        return POS_INF
    if math.isinf(c):
        return c
    return c / w


def classify(c) -> Classification:
    """Convex iff the index is nonnegative; constant iff it is ``+inf``.

    The constancy reading assumes the input function was lower
    semicontinuous, which is a declared property of the test classes this
    library certifies.
    """
    value = c.value if isinstance(c, ConvexityIndex) else float(c)
    convex = Convexity.CONVEX if value >= 0 else Convexity.NOT_CONVEX
    constant = Constancy.CONSTANT if value == POS_INF else Constancy.NOT_CONSTANT
    return Classification(convex, constant)


def certify_index_bracket(f: FunctionSpec, box: BoxDomain, idx: ConvexityIndex,
                          etas=DEFAULT_ETAS) -> tuple[CertResult, CertResult]:
    """Re-certify both bracket ends of a finite index (consistency check).

    Case I: the transform at the lower end must certify convex and at the
    upper end must refute. Case II: same with concavity. Used by tests and
    the command-line report; raises on infinite values.
    """
    if idx.bracket is None:
        raise ValueError("bracket is absent for infinite indices")
    table = PairTable(f, box, etas=etas)
    sign = +1 if idx.case is IndexCase.CASE_I else -1
    lo_ok = table.exp_transform_ok(idx.bracket[0], sign, REL_GAP_TOL)
    hi_ok = table.exp_transform_ok(idx.bracket[1], sign, REL_GAP_TOL)

    def mk(ok: bool) -> CertResult:
        return CertResult(Verdict.CERTIFIED if ok else Verdict.REFUTED,
                          tol=REL_GAP_TOL)

    return mk(lo_ok), mk(hi_ok)
