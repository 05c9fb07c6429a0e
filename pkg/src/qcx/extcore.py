"""Grid-based convexity and quasiconvexity certification.

This module is the numerical backend used everywhere else: it discretizes a
box domain, scans pairs of grid points together with a set of interpolation
weights, and reports either a reproducible violation witness or a
"no violation found" certificate.

Certification semantics
-----------------------
A ``Certified`` verdict is a *necessary-condition* certificate: it means no
violation larger than the tolerance was found at the given grid resolution
and weight set. A ``Refuted`` verdict is sound: the witness re-evaluates to
a violation of at least the tolerance.

The pair set contains all pairs of grid points plus, for each grid point and
each axis, short pairs at geometrically shrinking steps. The short pairs make
narrow curvature defects visible well below the uniform grid spacing, which
is what the index bisection in :mod:`qcx.cindex` needs near its break-even
point.

Concurrency: all scans are pure given a pure evaluation oracle. With
``threads > 1`` the pair set is split into chunks evaluated on a thread pool,
so the oracle must be reentrant.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BudgetExceededError, ImproperFunctionError
from .extreal import ext_combo, ext_sub

#: Default interpolation weights; midpoint alone misses asymmetric violations.
DEFAULT_ETAS: tuple[float, ...] = tuple(k / 8 for k in range(1, 8))

#: Number of geometric refinement scales for local pairs (h, h/2, ..., h/2^8).
LOCAL_SCALES = 9

#: Range spread below which a grid of values is treated as constant.
CONSTANT_SPREAD = 1e-10


class Verdict(enum.Enum):
    CERTIFIED = "certified"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Witness:
    """A violating triple: two points and an interpolation weight."""

    x1: tuple[float, ...]
    x2: tuple[float, ...]
    eta: float
    violation: float


@dataclass(frozen=True)
class CertResult:
    verdict: Verdict
    witness: Optional[Witness] = None
    tol: float = 0.0
    degenerate: bool = False

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.CERTIFIED

    @property
    def refuted(self) -> bool:
        return self.verdict is Verdict.REFUTED


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box with a per-axis grid resolution.

    Grids always include both endpoints; every resolution must be >= 3.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    m: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.m)):
            raise ValueError("lo, hi, m must have equal lengths")
        for a, b, k in zip(self.lo, self.hi, self.m):
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ValueError(f"invalid interval [{a}, {b}]")
            if k < 3:
                raise ValueError(f"grid resolution {k} < 3")

    @staticmethod
    def of(lo, hi, m) -> "BoxDomain":
        """Build from scalars (1-D) or per-axis sequences."""
        if np.isscalar(lo):
            lo, hi, m = (lo,), (hi,), (m,)
        return BoxDomain(tuple(float(x) for x in lo),
                         tuple(float(x) for x in hi),
                         tuple(int(k) for k in m))

    @property
    def dim(self) -> int:
        return len(self.lo)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, k) for a, b, k in zip(self.lo, self.hi, self.m)]

    def points(self) -> np.ndarray:
        """All grid points as an (N, dim) array in C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    @property
    def grid_count(self) -> int:
        n = 1
        for k in self.m:
            n *= k
        return n


@dataclass
class FunctionSpec:
    """An extended-real function on a box, given by a vectorized oracle.

    ``fn`` maps an ``(N, dim)`` array to an ``(N,)`` float array; ``+inf``
    entries are allowed, ``-inf`` and NaN are not (proper functions). The
    optional ``grad`` and ``hess`` oracles have the same calling convention
    and are only consulted by the smooth 1-D cross-check.
    """

    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    proper: bool = True
    name: str = ""

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.dim)
        vals = np.asarray(self.fn(pts), dtype=float).reshape(-1)
        if np.isnan(vals).any():
            raise ValueError(f"oracle for {self.name or 'function'} returned NaN")
        if self.proper and np.isneginf(vals).any():
            raise ImproperFunctionError(
                f"{self.name or 'function'} declared proper but returned -inf")
        return vals

    @property
    def smooth(self) -> bool:
        return self.grad is not None and self.hess is not None


def default_gap_tol(g: FunctionSpec) -> float:
    """1e-9 for inputs with derivative oracles, 1e-6 otherwise."""
    return 1e-9 if g.smooth else 1e-6


def scale_function(g: FunctionSpec, w: float, name: str = "") -> FunctionSpec:
    """The function ``w * g`` with derivatives scaled alongside."""
    if w < 0:
        raise ValueError("scale weight must be nonnegative")
    return FunctionSpec(
        dim=g.dim,
        fn=lambda p: w * g.fn(p),
        grad=(lambda p: w * g.grad(p)) if g.grad is not None else None,
        hess=(lambda p: w * g.hess(p)) if g.hess is not None else None,
        proper=g.proper,
        name=name or (f"{w:g}*{g.name}" if g.name else ""),
    )


# ---------------------------------------------------------------------------
# gap evaluation
# ---------------------------------------------------------------------------

def convexity_gap(g: FunctionSpec, x1, x2, eta: float) -> tuple[float, bool]:
    """``g(eta x1 + (1-eta) x2) - eta g(x1) - (1-eta) g(x2)`` with a flag.

    Returns ``(gap, degenerate)``; the gap is ``+inf`` with the degenerate
    flag set when both sides of the difference are ``+inf``.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    v1 = float(g(x1.reshape(1, -1))[0])
    v2 = float(g(x2.reshape(1, -1))[0])
    vm = float(g((eta * x1 + (1 - eta) * x2).reshape(1, -1))[0])
    return ext_sub(vm, ext_combo(eta, v1, v2))


def quasiconvexity_gap(g: FunctionSpec, x1, x2, eta: float) -> tuple[float, bool]:
    """``g(mix) - max(g(x1), g(x2))`` with the same degeneracy convention."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    v1 = float(g(x1.reshape(1, -1))[0])
    v2 = float(g(x2.reshape(1, -1))[0])
    vm = float(g((eta * x1 + (1 - eta) * x2).reshape(1, -1))[0])
    return ext_sub(vm, max(v1, v2))


# ---------------------------------------------------------------------------
# pair construction
# ---------------------------------------------------------------------------

def _pair_arrays(box: BoxDomain, local_pairs: bool = True,
                 pair_budget: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """All grid pairs plus per-point geometric local pairs along each axis."""
    pts = box.points()
    n = len(pts)
    n_pairs = n * (n - 1) // 2
    if pair_budget is not None and n_pairs > pair_budget:
        raise BudgetExceededError(
            f"grid yields {n_pairs} pairs, budget is {pair_budget}")
    i, j = np.triu_indices(n, k=1)
    first = [pts[i]]
    second = [pts[j]]
    if local_pairs:
        for axis, ax in enumerate(box.axes()):
            h = (ax[-1] - ax[0]) / (len(ax) - 1)
            for k in range(LOCAL_SCALES):
                d = h / 2 ** k
                up = pts.copy()
                up[:, axis] = np.minimum(up[:, axis] + d, ax[-1])
                first.append(pts)
                second.append(up)
                down = pts.copy()
                down[:, axis] = np.maximum(down[:, axis] - d, ax[0])
                first.append(down)
                second.append(pts)
    return np.concatenate(first), np.concatenate(second)


class PairTable:
    """Cached function values on a pair scan (endpoints and mixes).

    The table is built once per (function, box, etas) and supports repeated
    scans: absolute convexity / concavity / quasiconvexity gap scans and the
    mix-normalized exponential-transform scan used by the index bisection.
    """

    def __init__(self, g: FunctionSpec, box: BoxDomain,
                 etas: Sequence[float] = DEFAULT_ETAS, threads: int = 1,
                 local_pairs: bool = True, pair_budget: Optional[int] = None):
        if g.dim != box.dim:
            raise ValueError(f"function dim {g.dim} != box dim {box.dim}")
        self.g = g
        self.box = box
        self.etas = tuple(etas)
        self.threads = max(1, int(threads))
        grid_vals = g(box.points())
        if np.isposinf(grid_vals).all():
            raise ImproperFunctionError(
                f"{g.name or 'function'} is +inf on the entire grid")
        self.grid_values = grid_vals
        a, b = _pair_arrays(box, local_pairs=local_pairs, pair_budget=pair_budget)
        self.a = a
        self.b = b
        with np.errstate(all="ignore"):
            self.fa = g(a)
            self.fb = g(b)
            self.fm = [g(eta * a + (1 - eta) * b) for eta in self.etas]

    def _chunks(self) -> list[slice]:
        n = len(self.a)
        k = min(self.threads, max(1, n))
        bounds = np.linspace(0, n, k + 1).astype(int)
        return [slice(bounds[t], bounds[t + 1]) for t in range(k)]

    def _map(self, fn):
        chunks = self._chunks()
        if len(chunks) == 1:
            return [fn(chunks[0])]
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            return list(pool.map(fn, chunks))

    # -- absolute gap scans --------------------------------------------------

    def scan(self, kind: str, tol: float):
        """Largest non-degenerate gap of the given kind over the table.

        kind is one of ``convex``, ``concave``, ``quasiconvex``. Returns
        ``(worst_gap, witness | None, degenerate_seen)`` where the witness is
        reported only when the worst gap exceeds ``tol``.
        """

        def work(sl: slice):
            worst = -math.inf
            arg = None
            degen = False
            with np.errstate(all="ignore"):
                for which, eta in enumerate(self.etas):
                    fa = self.fa[sl]
                    fb = self.fb[sl]
                    fm = self.fm[which][sl]
                    if kind == "quasiconvex":
                        gap = fm - np.maximum(fa, fb)
                    elif kind == "convex":
                        gap = fm - (eta * fa + (1 - eta) * fb)
                    elif kind == "concave":
                        gap = (eta * fa + (1 - eta) * fb) - fm
                    else:
                        raise ValueError(f"unknown scan kind {kind!r}")
                    bad = np.isnan(gap)
                    if bad.any():
                        degen = True
                        gap = np.where(bad, -math.inf, gap)
                    k = int(np.argmax(gap))
                    if gap[k] > worst:
                        worst = float(gap[k])
                        arg = (sl.start + k, eta)
            return worst, arg, degen

        results = self._map(work)
        worst, arg, degen = max(results, key=lambda r: r[0])
        degen = any(r[2] for r in results)
        witness = None
        if arg is not None and worst > tol:
            idx, eta = arg
            witness = Witness(x1=tuple(float(v) for v in self.a[idx]),
                              x2=tuple(float(v) for v in self.b[idx]),
                              eta=float(eta), violation=worst)
        return worst, witness, degen

    # -- mix-normalized exponential scan --------------------------------------

    def exp_transform_ok(self, lam: float, sign: int, tol_rel: float) -> bool:
        """Is ``exp(-lam * g)`` convex (sign=+1) or concave (sign=-1) on the table?

        Each pair is tested in a form normalized by the value at the mix
        point: with ``c = eta e^{-lam (fa - fm)} + (1-eta) e^{-lam (fb - fm)}``
        a convexity violation is ``1 - c > tol_rel`` and a concavity violation
        is ``c - 1 > tol_rel``. The normalization keeps the test exact when
        ``exp(-lam * g)`` itself would overflow or underflow, which happens at
        the large lambda probes of the bisection. Pairs where the normalized
        differences are undetermined (both values +inf) are skipped.
        """
        if lam == 0.0:
            return True  # exp(0) == 1 is both convex and concave
        result = True

        def work(sl: slice):
            with np.errstate(all="ignore"):
                for which, eta in enumerate(self.etas):
                    da = self.fa[sl] - self.fm[which][sl]
                    db = self.fb[sl] - self.fm[which][sl]
                    combo = eta * np.exp(-lam * da) + (1 - eta) * np.exp(-lam * db)
                    viol = sign * (1.0 - combo) > tol_rel
                    viol &= ~np.isnan(combo)
                    if viol.any():
                        return False
            return True

        for ok in self._map(work):
            result = result and ok
        return result


# ---------------------------------------------------------------------------
# public certifiers
# ---------------------------------------------------------------------------

def _certify(g: FunctionSpec, box: BoxDomain, kind: str, tol: Optional[float],
             etas: Sequence[float], threads: int,
             pair_budget: Optional[int]) -> CertResult:
    if tol is None:
        tol = default_gap_tol(g)
    if tol <= 0:
        raise ValueError("tol must be positive")
    table = PairTable(g, box, etas=etas, threads=threads, pair_budget=pair_budget)
    worst, witness, degen = table.scan(kind, tol)
    if witness is None:
        return CertResult(Verdict.CERTIFIED, None, tol, degen)
    # re-evaluate the witness independently of the scan before reporting it
    if kind == "quasiconvex":
        gap, wdegen = quasiconvexity_gap(g, witness.x1, witness.x2, witness.eta)
    elif kind == "convex":
        gap, wdegen = convexity_gap(g, witness.x1, witness.x2, witness.eta)
    else:  # concave gap is the negated convexity gap when determinate
        gap, wdegen = convexity_gap(g, witness.x1, witness.x2, witness.eta)
        if not wdegen:
            gap = -gap
    if wdegen or gap <= tol:
        return CertResult(Verdict.INCONCLUSIVE, witness, tol, degen)
    return CertResult(Verdict.REFUTED, witness, tol, degen)


def certify_convex(g: FunctionSpec, box: BoxDomain, tol: Optional[float] = None,
                   etas: Sequence[float] = DEFAULT_ETAS, threads: int = 1,
                   pair_budget: Optional[int] = None) -> CertResult:
    """Scan for Jensen-inequality violations of ``g`` on the box grid."""
    return _certify(g, box, "convex", tol, etas, threads, pair_budget)


def certify_concave(g: FunctionSpec, box: BoxDomain, tol: Optional[float] = None,
                    etas: Sequence[float] = DEFAULT_ETAS, threads: int = 1,
                    pair_budget: Optional[int] = None) -> CertResult:
    """Concavity counterpart of :func:`certify_convex`."""
    return _certify(g, box, "concave", tol, etas, threads, pair_budget)


def certify_quasiconvex(g: FunctionSpec, box: BoxDomain, tol: Optional[float] = None,
                        etas: Sequence[float] = DEFAULT_ETAS, threads: int = 1,
                        pair_budget: Optional[int] = None) -> CertResult:
    """Scan for ``g(mix) > max(g(x1), g(x2)) + tol`` over the pair table."""
    return _certify(g, box, "quasiconvex", tol, etas, threads, pair_budget)
