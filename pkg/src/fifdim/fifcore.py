"""Fractal interpolation systems and their attractor evaluation.

An alpha-fractal system perturbs a continuous germ f on [x_1, x_N] by a base
function b (matching f at the endpoints) and one scaling function alpha_j per
partition subinterval, each with sup strictly below one.  The associated
operator

    (T g)(x) = f(x) + alpha_j(L_j^{ -1}(x)) * (g - b)(L_j^{-1}(x)),   x in I_j,

is a sup-norm contraction with factor ||alpha||_inf; its fixed point is the
fractal perturbation of f, which interpolates f at the partition knots.  A
classical system instead stores data points and per-map vertical maps
F_j(x, y) = alpha_j(x) y + q_j(x); the same machinery applies with
(T g)(x) = alpha_j(xi) g(xi) + q_j(xi), xi = L_j^{-1}(x).
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import expr
from .expr import Node, evaluate, evaluate_many, sup_norm
from .reports import ConditionReport, decide

JOIN_TOL = 1e-9
NEAR_UNIT = 0.999
_ALIGN_TOL = 1e-7  # fraction of a grid cell


class ValidationError(ValueError):
    """System data violates a construction precondition."""


class GridError(ValueError):
    """A sampling grid is incompatible with the requested operation."""


class ConvergenceError(RuntimeError):
    """Iteration failed to reach the requested tolerance within its budget."""


def _as_node(e: Node | str) -> Node:
    return expr.parse(e) if isinstance(e, str) else e


# ---------------------------------------------------------------------------
# partitions and the affine address maps

@dataclass(frozen=True)
class Partition:
    knots: tuple[float, ...]

    def __post_init__(self):
        if len(self.knots) < 3:
            raise ValidationError("need at least three knots")
        for a, b in zip(self.knots, self.knots[1:]):
            if not b > a:
                raise ValidationError("knots must be strictly increasing")

    @property
    def count(self) -> int:
        return len(self.knots)

    @property
    def lo(self) -> float:
        return self.knots[0]

    @property
    def hi(self) -> float:
        return self.knots[-1]

    @property
    def span(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class AffineMaps:
    """The contractive addresses L_j(x) = a_j x + c_j mapping [x_1, x_N] onto
    the j-th subinterval."""

    slopes: tuple[float, ...]
    shifts: tuple[float, ...]
    lo: float
    hi: float

    @classmethod
    def from_partition(cls, part: Partition) -> "AffineMaps":
        span = part.span
        slopes = []
        shifts = []
        for j in range(part.count - 1):
            a = (part.knots[j + 1] - part.knots[j]) / span
            c = part.knots[j] - a * part.lo
            if not 0.0 < a < 1.0:
                raise ValidationError(f"map {j + 1} slope {a} outside (0, 1)")
            slopes.append(a)
            shifts.append(c)
        maps = cls(tuple(slopes), tuple(shifts), part.lo, part.hi)
        for j in range(part.count - 1):
            if abs(maps.apply(j, part.lo) - part.knots[j]) > 1e-12 * max(1.0, span):
                raise ValidationError(f"map {j + 1} misses its left knot")
            if abs(maps.apply(j, part.hi) - part.knots[j + 1]) > 1e-12 * max(1.0, span):
                raise ValidationError(f"map {j + 1} misses its right knot")
        return maps

    @property
    def count(self) -> int:
        return len(self.slopes)

    @property
    def a_min(self) -> float:
        return min(self.slopes)

    @property
    def a_max(self) -> float:
        return max(self.slopes)

    def apply(self, j: int, x):
        return self.slopes[j] * x + self.shifts[j]

    def invert(self, j: int, x):
        return (x - self.shifts[j]) / self.slopes[j]


def _locate(knots: tuple[float, ...], x: float) -> int:
    """Map index owning x: shared knots belong to the interval on their left,
    except the first knot."""
    if x <= knots[0]:
        return 0
    lo, hi = 0, len(knots) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if knots[mid] < x:
            lo = mid
        else:
            hi = mid
    return lo


def _locate_many(knots: tuple[float, ...], xs: np.ndarray) -> np.ndarray:
    jj = np.searchsorted(np.asarray(knots), xs, side="left") - 1
    return np.clip(jj, 0, len(knots) - 2)


# ---------------------------------------------------------------------------
# sampled functions

@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values on a uniform closed grid over [lo, hi] plus a sup-norm error
    bound for what the samples are meant to represent."""

    lo: float
    hi: float
    values: np.ndarray
    err: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.hi <= self.lo:
            raise GridError("empty interval")
        if self.values.ndim != 1 or len(self.values) < 2:
            raise GridError("need at least two samples")
        self.values.setflags(write=False)

    @property
    def cells(self) -> int:
        return len(self.values) - 1

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / self.cells

    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, len(self.values))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value", "err"])
            err = repr(float(self.err))
            for x, v in zip(self.grid(), self.values):
                w.writerow([repr(float(x)), repr(float(v)), err])

    @classmethod
    def from_csv(cls, path) -> "SampledFunction":
        xs = []
        vs = []
        err = 0.0
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if header[:3] != ["x", "value", "err"]:
                raise GridError(f"unexpected sample CSV header {header!r}")
            for row in r:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
                err = float(row[2])
        values = np.asarray(vs)
        return cls(xs[0], xs[-1], values, err)


# ---------------------------------------------------------------------------
# systems

@dataclass(frozen=True)
class AlphaFractalSystem:
    partition: Partition
    germ: Node
    base: Node
    scalings: tuple[Node, ...]
    maps: AffineMaps
    alpha_sups: tuple[float, ...]
    alpha_sup: float
    germ_sup: float
    gap_sup: float  # ||f - b||_inf estimate
    bound: float    # uniform bound M for the attractor
    near_unit: bool
    degenerate_base: bool

    @property
    def interval(self) -> tuple[float, float]:
        return self.partition.lo, self.partition.hi

    def germ_values(self, xs: np.ndarray) -> np.ndarray:
        return evaluate_many(self.germ, xs)

    def knot_values(self) -> np.ndarray:
        return np.array([evaluate(self.germ, t) for t in self.partition.knots])

    def _fiber_arrays(self, j: int, xi: np.ndarray, x: np.ndarray):
        scale = evaluate_many(self.scalings[j], xi)
        shift = evaluate_many(self.germ, x) - scale * evaluate_many(self.base, xi)
        return scale, shift

    def _fiber_scalar(self, j: int, xi: float, x: float) -> tuple[float, float]:
        scale = evaluate(self.scalings[j], xi)
        shift = evaluate(self.germ, x) - scale * evaluate(self.base, xi)
        return scale, shift

    def _tail_bound(self) -> float:
        r = self.alpha_sup
        return r / (1.0 - r) * self.gap_sup


@dataclass(frozen=True)
class ClassicalFifSystem:
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    scalings: tuple[Node, ...]
    offsets: tuple[Node, ...]
    maps: AffineMaps
    alpha_sups: tuple[float, ...]
    alpha_sup: float
    bound: float

    @property
    def partition(self) -> Partition:
        return Partition(self.xs)

    @property
    def interval(self) -> tuple[float, float]:
        return self.xs[0], self.xs[-1]

    def germ_values(self, xs: np.ndarray) -> np.ndarray:
        # iteration starts from the piecewise-linear interpolant of the data,
        # which is also the attractor when every scaling vanishes
        return np.interp(xs, self.xs, self.ys)

    def knot_values(self) -> np.ndarray:
        return np.asarray(self.ys)

    def _fiber_arrays(self, j: int, xi: np.ndarray, x: np.ndarray):
        scale = evaluate_many(self.scalings[j], xi)
        shift = evaluate_many(self.offsets[j], xi)
        return scale, shift

    def _fiber_scalar(self, j: int, xi: float, x: float) -> tuple[float, float]:
        return evaluate(self.scalings[j], xi), evaluate(self.offsets[j], xi)

    def _tail_bound(self) -> float:
        return _classical_tail(self)


FifSystem = AlphaFractalSystem | ClassicalFifSystem


def _scaling_sups(scalings, lo, hi, sup_grid) -> tuple[tuple[float, ...], float, bool]:
    sups = []
    for j, s in enumerate(scalings):
        v = sup_norm(s, lo, hi, sup_grid)
        if v >= 1.0:
            raise ValidationError(
                f"scaling {j + 1} has sup {v} >= 1; the operator would not contract")
        sups.append(v)
    top = max(sups)
    near = top >= NEAR_UNIT
    if near:
        warnings.warn(f"largest scaling sup {top} is within {1 - NEAR_UNIT} of 1; "
                      "convergence will be slow and bounds loose", stacklevel=3)
    return tuple(sups), top, near


def make_system(knots, germ: Node | str, base: Node | str, scalings,
                sup_grid: int = 4096) -> AlphaFractalSystem:
    """Validate and assemble an alpha-fractal system.

    knots may be a Partition or a knot sequence.  germ, base, and the
    scalings accept trees or expression text.  Sup norms are grid estimates
    on sup_grid+1 points.
    """
    part = knots if isinstance(knots, Partition) else Partition(tuple(float(t) for t in knots))
    germ = _as_node(germ)
    base = _as_node(base)
    scalings = tuple(_as_node(s) for s in scalings)
    if len(scalings) != part.count - 1:
        raise ValidationError(
            f"{part.count - 1} subintervals but {len(scalings)} scaling functions")
    maps = AffineMaps.from_partition(part)
    for t in (part.lo, part.hi):
        gap = abs(evaluate(base, t) - evaluate(germ, t))
        if gap > JOIN_TOL:
            raise ValidationError(
                f"base must match the germ at x={t!r}; difference {gap}")
    sups, top, near = _scaling_sups(scalings, part.lo, part.hi, sup_grid)
    germ_sup = sup_norm(germ, part.lo, part.hi, sup_grid)
    gap_sup = sup_norm(expr.Binary("-", germ, base), part.lo, part.hi, sup_grid)
    degenerate = gap_sup == 0.0
    if degenerate:
        warnings.warn("base equals the germ on the sampling grid; the attractor "
                      "degenerates to the germ itself", stacklevel=2)
    bound = germ_sup + (top / (1.0 - top)) * gap_sup if top < 1.0 else math.inf
    return AlphaFractalSystem(part, germ, base, scalings, maps, sups, top,
                              germ_sup, gap_sup, bound, near, degenerate)


def make_classical(points, scalings, offsets, sup_grid: int = 4096) -> ClassicalFifSystem:
    """Validate and assemble a classical interpolation system from data
    points, scaling functions, and per-map vertical offsets q_j."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ValidationError("need at least three data points")
    xs = tuple(p[0] for p in pts)
    ys = tuple(p[1] for p in pts)
    part = Partition(xs)
    scalings = tuple(_as_node(s) for s in scalings)
    offsets = tuple(_as_node(q) for q in offsets)
    n_maps = part.count - 1
    if len(scalings) != n_maps or len(offsets) != n_maps:
        raise ValidationError(
            f"{n_maps} subintervals but {len(scalings)} scalings and "
            f"{len(offsets)} offsets")
    maps = AffineMaps.from_partition(part)
    for j in range(n_maps):
        left = evaluate(offsets[j], xs[0]) + evaluate(scalings[j], xs[0]) * ys[0]
        right = evaluate(offsets[j], xs[-1]) + evaluate(scalings[j], xs[-1]) * ys[-1]
        if abs(left - ys[j]) > JOIN_TOL:
            raise ValidationError(
                f"map {j + 1} join-up fails at the left knot: F({xs[0]!r}, y_1) = "
                f"{left!r}, expected {ys[j]!r}")
        if abs(right - ys[j + 1]) > JOIN_TOL:
            raise ValidationError(
                f"map {j + 1} join-up fails at the right knot: F({xs[-1]!r}, y_N) = "
                f"{right!r}, expected {ys[j + 1]!r}")
    sups, top, _ = _scaling_sups(scalings, xs[0], xs[-1], sup_grid)
    q_sup = max(sup_norm(q, xs[0], xs[-1], sup_grid) for q in offsets)
    bound = max(max(abs(y) for y in ys), q_sup / (1.0 - top))
    return ClassicalFifSystem(xs, ys, scalings, offsets, maps, sups, top, bound)


def uniform_bound(sys: FifSystem) -> float:
    """Sup-norm bound for the attractor: ||f||_inf plus the fixed-point tail
    (||alpha||/(1-||alpha||)) ||f-b||_inf for alpha-fractal systems, the
    Banach bound for classical ones."""
    return sys.bound


@lru_cache(maxsize=8)
def _classical_tail(sys: ClassicalFifSystem) -> float:
    # distance from the starting interpolant to the attractor, estimated from
    # one operator application on a modest grid
    g = SampledFunction(sys.xs[0], sys.xs[-1], sys.germ_values(
        np.linspace(sys.xs[0], sys.xs[-1], 1025)))
    d0 = float(np.max(np.abs(rb_apply(sys, g).values - g.values)))
    return d0 / (1.0 - sys.alpha_sup)


# ---------------------------------------------------------------------------
# the operator on a uniform grid

@dataclass(frozen=True, eq=False)
class _GridPlan:
    xs: np.ndarray
    src: np.ndarray          # left sample index of the preimage
    frac: np.ndarray | None  # interpolation weight, None when grid-aligned
    scale: np.ndarray        # alpha_j(xi) per grid point
    shift: np.ndarray        # the affine remainder per grid point
    aligned: bool


@lru_cache(maxsize=16)
def _grid_plan(sys: FifSystem, cells: int) -> _GridPlan:
    lo, hi = sys.interval
    knots = sys.partition.knots if isinstance(sys, AlphaFractalSystem) else sys.xs
    xs = np.linspace(lo, hi, cells + 1)
    jj = _locate_many(knots, xs)
    slopes = np.asarray(sys.maps.slopes)[jj]
    shifts = np.asarray(sys.maps.shifts)[jj]
    xi = np.clip((xs - shifts) / slopes, lo, hi)
    pos = (xi - lo) * (cells / (hi - lo))
    nearest = np.rint(pos)
    aligned = bool(np.max(np.abs(pos - nearest)) <= _ALIGN_TOL)
    if aligned:
        src = np.clip(nearest.astype(np.int64), 0, cells)
        frac = None
        xi = lo + src * ((hi - lo) / cells)
    else:
        src = np.clip(np.floor(pos).astype(np.int64), 0, cells - 1)
        frac = pos - src
    scale = np.empty_like(xs)
    shift = np.empty_like(xs)
    for j in range(len(knots) - 1):
        m = jj == j
        scale[m], shift[m] = sys._fiber_arrays(j, xi[m], xs[m])
    return _GridPlan(xs, src, frac, scale, shift, aligned)


def _apply_plan(plan: _GridPlan, values: np.ndarray) -> tuple[np.ndarray, float]:
    if plan.aligned:
        pulled = values[plan.src]
        slack = 0.0
    else:
        left = values[plan.src]
        right = values[np.minimum(plan.src + 1, len(values) - 1)]
        pulled = left + plan.frac * (right - left)
        slack = float(np.max(np.abs(right - left)))
    return plan.shift + plan.scale * pulled, slack


def rb_apply(sys: FifSystem, g: SampledFunction) -> SampledFunction:
    """One application of the operator T to grid samples.

    The error bound contracts by ||alpha||_inf; on grids whose preimages are
    not grid-aligned a linear-interpolation slack, estimated from the largest
    jump between bracketing samples, is added.
    """
    lo, hi = sys.interval
    if abs(g.lo - lo) > 1e-12 or abs(g.hi - hi) > 1e-12:
        raise GridError("samples do not cover the system interval")
    n_maps = sys.maps.count
    if g.cells < 2 * n_maps:
        raise GridError(f"grid too coarse: need at least {2 * n_maps} cells")
    plan = _grid_plan(sys, g.cells)
    out, slack = _apply_plan(plan, g.values)
    err = sys.alpha_sup * (g.err + slack)
    return SampledFunction(lo, hi, out, err)


def sample_fif(sys: FifSystem, cells: int, tol: float = 1e-8) -> SampledFunction:
    """Attractor samples on a uniform grid of the given cell count.

    Iterates T from the germ samples until the sup change is at most
    tol*(1-||alpha||), which leaves the result within tol of the exact
    attractor values at grid-aligned points (interpolation slack is folded
    into err otherwise).  meta records the iteration count.
    """
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    lo, hi = sys.interval
    n_maps = sys.maps.count
    if cells < 2 * n_maps:
        raise GridError(f"grid too coarse: need at least {2 * n_maps} cells")
    plan = _grid_plan(sys, cells)
    r = sys.alpha_sup
    target = tol * (1.0 - r)
    v = sys.germ_values(plan.xs)
    budget = None
    worst_slack = 0.0
    iterations = 0
    while True:
        nv, slack = _apply_plan(plan, v)
        worst_slack = max(worst_slack, slack)
        delta = float(np.max(np.abs(nv - v)))
        v = nv
        iterations += 1
        if delta <= target:
            break
        if budget is None:
            if r == 0.0:
                budget = 1
            else:
                budget = math.ceil(math.log(target / delta) / math.log(r)) + 1
        if iterations > 10 * max(budget, 1):
            raise ConvergenceError(
                f"no convergence after {iterations} iterations "
                f"(last change {delta}, target {target})")
    err = delta * r / (1.0 - r) if r > 0 else 0.0
    if not plan.aligned:
        err += r * worst_slack / (1.0 - r) if r > 0 else 0.0
    return SampledFunction(lo, hi, v, err,
                           meta={"iterations": iterations, "aligned": plan.aligned})


def eval_fif(sys: FifSystem, x: float, depth: int = 24) -> tuple[float, float]:
    """Pointwise attractor value by unwinding the address chain depth levels,
    together with an error bound ||alpha||^depth times the fixed-point tail."""
    lo, hi = sys.interval
    if not lo <= x <= hi:
        raise ValidationError(f"x={x!r} outside [{lo!r}, {hi!r}]")
    if depth < 0:
        raise ValidationError("depth must be nonnegative")
    knots = sys.partition.knots if isinstance(sys, AlphaFractalSystem) else sys.xs
    chain = []
    t = float(x)
    for _ in range(depth):
        j = _locate(knots, t)
        xi = min(max(sys.maps.invert(j, t), lo), hi)
        chain.append((j, xi, t))
        t = xi
    value = float(sys.germ_values(np.array([t]))[0])
    for j, xi, parent in reversed(chain):
        scale, shift = sys._fiber_scalar(j, xi, parent)
        value = shift + scale * value
    bound = sys.alpha_sup ** depth * sys._tail_bound()
    return value, bound


# ---------------------------------------------------------------------------
# the contraction condition on the product metric

def check_metric_contraction(sys: FifSystem, c1: float = 1.0, c2: float = 1.0,
                             sup_grid: int = 4096) -> ConditionReport:
    """Check that every map W_j(x, y) = (L_j(x), F_j(x, y)) contracts the
    metric c1 |x - x'| + c2 |y - y'| on I x [-M, M].

    The decisive quantity per map is
        max(a_j + 2 c2 M k_j / c1, sup|alpha_j|)
    with k_j a grid estimate of the Lipschitz constant of alpha_j.  The
    constants record, per map, k_j and the left side, plus the largest
    c2/c1 ratio the data would tolerate.
    """
    if c1 <= 0 or c2 <= 0:
        raise ValidationError("metric weights must be positive")
    lo, hi = sys.interval
    m = uniform_bound(sys)
    constants: dict = {"M": m, "c1": c1, "c2": c2}
    lhs = 0.0
    feasible = math.inf
    for j, alpha in enumerate(sys.scalings):
        k_j = sup_norm(expr.differentiate(alpha), lo, hi, sup_grid, avoid_kinks=True)
        lhs_j = max(sys.maps.slopes[j] + 2.0 * c2 * m * k_j / c1, sys.alpha_sups[j])
        constants[f"k_alpha_{j + 1}"] = k_j
        constants[f"lhs_{j + 1}"] = lhs_j
        lhs = max(lhs, lhs_j)
        if k_j > 0:
            feasible = min(feasible, (1.0 - sys.maps.slopes[j]) / (2.0 * m * k_j))
    if math.isfinite(feasible):
        constants["max_feasible_c2_over_c1"] = feasible
    return ConditionReport("metric-contraction", lhs, 1.0, decide(lhs, 1.0),
                           constants)
