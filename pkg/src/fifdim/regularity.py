"""Oscillation, Hoelder, and variation estimates with the matching
invariance checks for fractal perturbations.

Level-m oscillation of g over [0, 1] splits the interval into p^m closed
subintervals Q and sums the ranges sup_Q g - inf_Q g.  Growth of these sums
in m is what separates the function classes checked here: bounded
Osc(m, g) / p^(m(1-beta)) defines the V^beta class, linear decay of ranges
with scale is the Hoelder side, and summability of jumps is bounded
variation.  Every quantity is a grid estimate from samples, hence a lower
bound of its exact counterpart; invariance checks inflate their left-hand
sides by the shared safety factor before deciding a strict inequality.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import expr
from .expr import Node, evaluate, evaluate_many
from .fifcore import (AlphaFractalSystem, ClassicalFifSystem, FifSystem,
                      GridError, SampledFunction, ValidationError)
from .reports import (INDETERMINATE, ConditionReport, decide)

_PADIC_TOL = 1e-9


def _require_unit_interval(g: SampledFunction) -> None:
    if abs(g.lo) > 1e-12 or abs(g.hi - 1.0) > 1e-12:
        raise GridError("oscillation needs samples on [0, 1]; rescale first")


def _level_ranges(values: np.ndarray, pieces: int) -> np.ndarray:
    """Range of the samples over each of `pieces` equal closed subintervals.
    Neighbouring subintervals share their boundary sample."""
    cells = len(values) - 1
    if cells % pieces:
        raise GridError(f"{cells} grid cells not divisible into {pieces} intervals")
    k = cells // pieces
    starts = np.arange(pieces) * k
    highs = np.maximum(np.maximum.reduceat(values, starts), values[starts + k])
    lows = np.minimum(np.minimum.reduceat(values, starts), values[starts + k])
    return highs - lows


@dataclass
class OscillationProfile:
    """Per-interval ranges of one sampled function at one or more levels."""

    base: int
    ranges: dict[int, np.ndarray] = field(default_factory=dict)

    def levels(self) -> list[int]:
        return sorted(self.ranges)

    def osc(self, m: int) -> float:
        return float(self.ranges[m].sum())

    def normalized(self, m: int, beta: float) -> float:
        return self.osc(m) / self.base ** (m * (1.0 - beta))

    def growth_exponent(self) -> float | None:
        """Observed gamma with Osc(m) ~ p^(m(1-gamma)), from a least-squares
        fit over the stored levels; None when oscillation vanishes."""
        ms = [m for m in self.levels() if self.osc(m) > 0.0]
        if len(ms) < 2:
            return None
        ys = [math.log(self.osc(m)) / math.log(self.base) for m in ms]
        slope = np.polyfit(ms, ys, 1)[0]
        return 1.0 - float(slope)

    def to_csv(self, path, beta: float = 1.0) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "osc", "normalized"])
            for m in self.levels():
                w.writerow([m, repr(self.osc(m)), repr(self.normalized(m, beta))])


def oscillation(g: SampledFunction, p: int, m: int) -> OscillationProfile:
    """Level-m oscillation profile of samples on [0, 1]."""
    _require_unit_interval(g)
    if p < 2:
        raise ValidationError("base p must be at least 2")
    if m < 1:
        raise ValidationError("level m must be at least 1")
    return OscillationProfile(p, {m: _level_ranges(g.values, p ** m)})


def oscillation_levels(g: SampledFunction, p: int, m_max: int) -> OscillationProfile:
    """Profile holding every level 1..m_max that the grid resolves."""
    _require_unit_interval(g)
    if p < 2:
        raise ValidationError("base p must be at least 2")
    ranges = {}
    for m in range(1, m_max + 1):
        if g.cells % p ** m == 0:
            ranges[m] = _level_ranges(g.values, p ** m)
    if not ranges:
        raise GridError(f"grid of {g.cells} cells resolves no level up to {m_max}")
    return OscillationProfile(p, ranges)


def rescale(g: SampledFunction) -> SampledFunction:
    """The same samples reparametrized onto [0, 1]."""
    return SampledFunction(0.0, 1.0, g.values, g.err, meta=dict(g.meta))


def vbeta_seminorm(g: SampledFunction, beta: float, p: int = 2,
                   m_max: int = 12) -> float:
    """sup over resolved levels m <= m_max of Osc(m, g) / p^(m(1-beta))."""
    if not 0.0 <= beta <= 1.0:
        raise ValidationError("beta must lie in [0, 1]")
    profile = oscillation_levels(rescale(g), p, m_max)
    return max(profile.normalized(m, beta) for m in profile.levels())


def vbeta_norm(g: SampledFunction, beta: float, p: int = 2,
               m_max: int = 12) -> float:
    return g.sup() + vbeta_seminorm(g, beta, p, m_max)


def _padic_depths(sys: FifSystem, p: int) -> list[int] | None:
    """Per-map k_j with a_j = p^-k_j, or None when the partition is not
    p-adic."""
    depths = []
    for a in sys.maps.slopes:
        k = round(-math.log(a) / math.log(p))
        if k < 1 or abs(a - p ** (-k)) > _PADIC_TOL:
            return None
        depths.append(k)
    return depths


def osc_decomposition_check(g: SampledFunction, sys: FifSystem, p: int,
                            m: int) -> bool | None:
    """Whether level-m oscillation splits exactly into the per-subinterval
    sums over the images L_j(I).

    Returns None (indeterminate) when some map slope is not a power of 1/p,
    since the images then fail to align with level-m intervals.
    """
    depths = _padic_depths(sys, p)
    if depths is None:
        return None
    if m < max(depths):
        raise ValidationError(f"level m={m} too coarse; need m >= {max(depths)}")
    profile = oscillation(rescale(g), p, m)
    ranges = profile.ranges[m]
    total = profile.osc(m)
    lo, hi = sys.interval
    span = hi - lo
    knots = sys.partition.knots
    pieces = p ** m
    parts = 0.0
    for j in range(len(knots) - 1):
        left = round((knots[j] - lo) / span * pieces)
        right = round((knots[j + 1] - lo) / span * pieces)
        parts += float(ranges[left:right].sum())
    return abs(total - parts) <= 1e-12 * max(1.0, abs(total))


def _sample_scaling(sys: FifSystem, j: int, cells: int) -> SampledFunction:
    lo, hi = sys.interval
    xs = np.linspace(lo, hi, cells + 1)
    return SampledFunction(lo, hi, evaluate_many(sys.scalings[j], xs))


def vbeta_invariance_check(sys: FifSystem, beta: float, p: int = 2,
                           m_max: int = 12) -> ConditionReport:
    """Hypothesis under which the fractal perturbation stays in V^beta:

        max( ||alpha|| + sum_j |alpha_j|_V^beta , sum_j ||alpha_j|| ) < 1.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValidationError("beta must lie in [0, 1]")
    tag = "vbeta-invariance"
    if _padic_depths(sys, p) is None:
        return ConditionReport(
            tag, math.nan, 1.0, INDETERMINATE,
            {"p": p, "beta": beta},
            note=f"partition is not {p}-adic, level intervals do not align")
    cells = p ** m_max * max(1, math.ceil(4096 / p ** m_max))
    constants: dict = {"p": p, "beta": beta, "alpha_sup": sys.alpha_sup}
    sem_total = 0.0
    for j in range(sys.maps.count):
        sem = vbeta_seminorm(_sample_scaling(sys, j, cells), beta, p, m_max)
        constants[f"vbeta_seminorm_{j + 1}"] = sem
        sem_total += sem
    branch_osc = sys.alpha_sup + sem_total
    branch_sup = float(sum(sys.alpha_sups))
    constants["branch_osc"] = branch_osc
    constants["branch_sup"] = branch_sup
    lhs = max(branch_osc, branch_sup)
    return ConditionReport(tag, lhs, 1.0, decide(lhs, 1.0), constants)


# ---------------------------------------------------------------------------
# Hoelder estimates

def hoelder_seminorm(g: SampledFunction, s: float) -> float:
    """sup of |g(x) - g(y)| / |x - y|^s over sample pairs at power-of-two
    index separations."""
    if not 0.0 < s <= 1.0:
        raise ValidationError("exponent s must lie in (0, 1]")
    h = g.step
    v = g.values
    best = 0.0
    d = 1
    while d <= g.cells:
        num = float(np.max(np.abs(v[d:] - v[:-d])))
        best = max(best, num / (d * h) ** s)
        d *= 2
    return best


def hoelder_norm(g: SampledFunction, s: float) -> float:
    return g.sup() + hoelder_seminorm(g, s)


def hoelder_invariance_check(sys: FifSystem, s: float,
                             grid: int = 4096) -> ConditionReport:
    """Hypothesis under which the perturbation keeps Hoelder exponent s:
    max_j (||alpha_j|| + [alpha_j]_s) < a^s with a the smallest map slope."""
    a = sys.maps.a_min
    constants: dict = {"s": s, "a": a}
    alpha_h = 0.0
    for j in range(sys.maps.count):
        sem = hoelder_seminorm(_sample_scaling(sys, j, grid), s)
        norm = sys.alpha_sups[j] + sem
        constants[f"hoelder_seminorm_{j + 1}"] = sem
        constants[f"hoelder_norm_{j + 1}"] = norm
        alpha_h = max(alpha_h, norm)
    constants["alpha_hoelder_norm"] = alpha_h
    lhs = alpha_h / a ** s
    return ConditionReport("hoelder-invariance", lhs, 1.0, decide(lhs, 1.0),
                           constants)


def lower_oscillation_constant(g: SampledFunction, s: float,
                               deltas) -> float:
    """Largest K supported by the samples such that every point has, within
    each window size delta, a partner y with |g(x) - g(y)| >= K |x - y|^s.

    For each delta the per-point best quotient is maximized over a set of
    separations (all of them up to 32 samples, powers of two beyond), then
    minimized over points and over the delta ladder.
    """
    if not 0.0 < s <= 1.0:
        raise ValidationError("exponent s must lie in (0, 1]")
    h = g.step
    v = g.values
    best_over_deltas = math.inf
    for delta in deltas:
        r = int(round(delta / h))
        if r < 1:
            raise GridError(f"window {delta} below the sample spacing {h}")
        r = min(r, g.cells)
        seps = set(range(1, min(r, 32) + 1))
        d = 32
        while d < r:
            d *= 2
            seps.add(min(d, r))
        best = np.zeros(len(v))
        for d in sorted(seps):
            q = np.abs(v[d:] - v[:-d]) / (d * h) ** s
            np.maximum(best[:-d], q, out=best[:-d])
            np.maximum(best[d:], q, out=best[d:])
        best_over_deltas = min(best_over_deltas, float(best.min()))
    return best_over_deltas


# ---------------------------------------------------------------------------
# variation estimates

def total_variation(g: SampledFunction) -> float:
    """Sum of absolute sample increments, a lower estimate of the variation."""
    return float(np.sum(np.abs(np.diff(g.values))))


def bv_invariance_check(sys: FifSystem, grid: int = 4096) -> ConditionReport:
    """Hypothesis under which the perturbation has bounded variation:
    max_j (|alpha_j(x_1)| + V(alpha_j)) < 1 / (2 (N - 1)) for N knots."""
    lo, hi = sys.interval
    n_knots = sys.maps.count + 1
    rhs = 1.0 / (2.0 * (n_knots - 1))
    constants: dict = {"knots": n_knots, "rhs": rhs}
    lhs = 0.0
    for j in range(sys.maps.count):
        norm = abs(evaluate(sys.scalings[j], lo)) + total_variation(
            _sample_scaling(sys, j, grid))
        constants[f"bv_norm_{j + 1}"] = norm
        lhs = max(lhs, norm)
    return ConditionReport("bv-invariance", lhs, rhs, decide(lhs, rhs), constants)


def _abs_derivative_values(node: Node, ts: np.ndarray, nudge: float) -> np.ndarray:
    """|node| on quadrature nodes; a node that hits a kink of the derivative
    tree is replaced by the average of the two half-step offsets."""
    try:
        return np.abs(evaluate_many(node, ts))
    except expr.DomainError:
        pass
    out = np.empty(len(ts))
    for i, t in enumerate(ts):
        t = float(t)
        try:
            out[i] = abs(evaluate(node, t))
        except expr.DomainError:
            out[i] = 0.5 * (abs(evaluate(node, t - nudge))
                            + abs(evaluate(node, t + nudge)))
    return out


def _simpson_abs(node: Node, lo: float, hi: float, panels: int = 4096) -> float:
    """Composite Simpson estimate of the integral of |node| over [lo, hi]."""
    half = (hi - lo) / (2 * panels)
    ts = np.linspace(lo, hi, 2 * panels + 1)
    vals = _abs_derivative_values(node, ts, half / 2.0)
    weights = np.ones(len(ts))
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(np.dot(weights, vals) * half / 3.0)


def ac_invariance_check(sys: FifSystem, panels: int = 4096) -> ConditionReport:
    """Hypothesis under which the perturbation stays absolutely continuous:
    max_j (|alpha_j(x_1)| + int |alpha_j'|) < a / (2 (N - 1))."""
    lo, hi = sys.interval
    n_knots = sys.maps.count + 1
    a = sys.maps.a_min
    rhs = a / (2.0 * (n_knots - 1))
    constants: dict = {"knots": n_knots, "a": a, "rhs": rhs}
    lhs = 0.0
    for j in range(sys.maps.count):
        deriv = expr.differentiate(sys.scalings[j])
        norm = abs(evaluate(sys.scalings[j], lo)) + _simpson_abs(deriv, lo, hi, panels)
        constants[f"ac_norm_{j + 1}"] = norm
        lhs = max(lhs, norm)
    return ConditionReport("ac-invariance", lhs, rhs, decide(lhs, rhs), constants)
