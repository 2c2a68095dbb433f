"""Numbered end-to-end acceptance checks.

One test per criterion, so ``pytest tests/test_acceptance.py -v`` reads as a
scoreboard with a pass/fail line per criterion.  Tolerances and runtime
budgets are pinned inside the test bodies and are not knobs.  Construction
fixtures are chosen so that every branch preimage lands back on the sample
grid: residuals then sit at iteration accuracy instead of interpolation
accuracy.
"""
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from fifdim import (ReportSettings, SampledFunction, ac_invariance_check,
                    affine_box_dimension, box_dimension, bv_invariance_check,
                    check_metric_contraction, dimension_report, evaluate,
                    evaluate_many, exact_boxdim_verdict, hausdorff_bounds,
                    hoelder_invariance_check, make_classical, make_system,
                    moran_solve, osc_decomposition_check, oscillation, parse,
                    rb_apply, sample_fif, uniform_bound, vbeta_invariance_check,
                    vbeta_norm)

PI = repr(math.pi)
TOL = 1.0e-8
K3 = (0.0, 0.5, 1.0)
K5 = (0.0, 0.25, 0.5, 0.75, 1.0)

# name, knots, germ, base, scalings.  Every base matches its germ at both
# interval endpoints, and every knot spacing divides the sample grid evenly.
FIXTURES = (
    ("sine-halves", K3, f"sin({PI}*x)", "0", ("0.3", "0.3")),
    ("parabola-thirds", (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0), "x*(1-x)", "0",
     ("0.4", "0.35", "0.3")),
    ("cusp-centered", K3, "abs(x-0.5)^0.5", repr(math.sqrt(0.5)),
     ("0.2", "0.25")),
    ("tent-small", K3, "1-2*abs(x-0.5)", "0", ("0.05", "0.05")),
    ("quartic-five", K5, "x^2*(1-x)^2", "0", ("0.2", "0.3", "0.25", "0.15")),
    ("variable-alpha", K3, f"sin({PI}*x)", "0", ("0.2+0.2*x", "0.4-0.2*x")),
    ("wide-interval", (0.0, 1.0, 2.0), f"sin({math.pi / 2.0!r}*x)", "0",
     ("0.3", "0.2")),
    ("exp-affine-base", K3, "exp(x)", f"1+{math.e - 1.0!r}*x",
     ("0.35", "0.35")),
    ("uneven-knots", (0.0, 0.25, 0.75, 1.0), "x*(1-x)", "0",
     ("0.5", "0.3", "0.2")),
    ("cosine-four", (0.0, 0.25, 0.5, 1.0), f"cos({2.0 * math.pi!r}*x)-1", "0",
     ("0.3", "0.3*x+0.1", "0.2")),
)

# grid exponent per map count, keeping G = count * 2**k at or just above 2**14
GRID_K = {2: 13, 3: 13, 4: 12}


@pytest.fixture(scope="module")
def corpus():
    built = []
    for name, knots, germ, base, alphas in FIXTURES:
        start = time.perf_counter()
        system = make_system(knots, germ, base, alphas, sup_grid=2 ** 14)
        cells = system.maps.count * 2 ** GRID_K[system.maps.count]
        samples = sample_fif(system, cells, TOL)
        built.append({"name": name, "system": system, "samples": samples,
                      "germ": germ, "base": base,
                      "elapsed": time.perf_counter() - start})
    return built


def test_criterion_01_fixed_point_construction(corpus):
    assert len(corpus) == 10
    for entry in corpus:
        name, system, samples = entry["name"], entry["system"], entry["samples"]
        assert entry["elapsed"] < 5.0, name
        assert samples.meta["aligned"], name
        pulled = rb_apply(system, samples)
        residual = float(np.max(np.abs(pulled.values - samples.values)))
        assert residual <= 3.0 * TOL, (name, residual)
        lo, hi = system.interval
        cells = samples.cells
        grid = samples.grid()
        germ_tree = parse(entry["germ"])
        for knot in system.partition.knots:
            idx = round((knot - lo) / (hi - lo) * cells)
            gap = abs(samples.values[idx] - evaluate(germ_tree, grid[idx]))
            assert gap <= TOL, (name, knot, gap)
    print("criterion 01 (fixed-point construction): pass")


def test_criterion_02_deviation_and_bound(corpus):
    for entry in corpus:
        name, system, samples = entry["name"], entry["system"], entry["samples"]
        grid = samples.grid()
        germ_vals = evaluate_many(parse(entry["germ"]), grid)
        base_vals = evaluate_many(parse(entry["base"]), grid)
        ratio = system.alpha_sup / (1.0 - system.alpha_sup)
        deviation = float(np.max(np.abs(samples.values - germ_vals)))
        allowance = ratio * float(np.max(np.abs(germ_vals - base_vals)))
        assert deviation <= allowance + TOL, (name, deviation, allowance)
        attained = float(np.max(np.abs(samples.values)))
        assert attained <= uniform_bound(system) + TOL, (name, attained)
    print("criterion 02 (deviation and uniform bound): pass")


def test_criterion_03_similarity_exponents():
    start = time.perf_counter()
    assert abs(moran_solve((0.5, 0.5)).exponent - 1.0) <= 1e-10
    assert abs(moran_solve((1.0 / 3.0,) * 4).exponent
               - math.log(4.0) / math.log(3.0)) <= 1e-9
    rng = np.random.default_rng(20260816)
    for _ in range(1000):
        k = int(rng.integers(2, 7))
        lowers = rng.uniform(0.05, 0.9, k)
        uppers = lowers + rng.uniform(0.0, 1.0, k) * (0.95 - lowers)
        low_exp, high_exp = hausdorff_bounds(tuple(lowers), tuple(uppers))
        assert low_exp <= high_exp + 1e-12
        assert abs(float(np.sum(uppers ** high_exp)) - 1.0) <= 1e-10
    assert time.perf_counter() - start < 1.0
    print("criterion 03 (similarity exponents): pass")


def test_criterion_04_oscillation_algebra():
    rng = np.random.default_rng(404)
    cells = 2 ** 10
    for _ in range(500):
        u = SampledFunction(0.0, 1.0, rng.standard_normal(cells + 1))
        w = SampledFunction(0.0, 1.0, rng.standard_normal(cells + 1))
        m = int(rng.integers(1, 11))
        lam = float(rng.choice((-4.0, -0.5, 2.0, 8.0)))  # dyadic, so exact
        osc_u = oscillation(u, 2, m).osc(m)
        osc_w = oscillation(w, 2, m).osc(m)
        scaled = SampledFunction(0.0, 1.0, lam * u.values)
        summed = SampledFunction(0.0, 1.0, u.values + w.values)
        multiplied = SampledFunction(0.0, 1.0, u.values * w.values)
        assert oscillation(scaled, 2, m).osc(m) == abs(lam) * osc_u
        assert oscillation(summed, 2, m).osc(m) <= osc_u + osc_w + 1e-12
        assert (oscillation(multiplied, 2, m).osc(m)
                <= u.sup() * osc_w + w.sup() * osc_u + 1e-12)
        norm_u = vbeta_norm(u, 0.5, m_max=10)
        norm_w = vbeta_norm(w, 0.5, m_max=10)
        assert vbeta_norm(scaled, 0.5, m_max=10) == abs(lam) * norm_u
        assert vbeta_norm(summed, 0.5, m_max=10) <= norm_u + norm_w + 1e-12
    halves = make_system(K3, f"sin({PI}*x)", "0", ("0.3", "0.3"))
    mixed = make_system((0.0, 0.25, 0.5, 1.0), "x*(1-x)", "0",
                        ("0.2", "0.2", "0.2"))
    probe = SampledFunction(0.0, 1.0, rng.standard_normal(cells + 1))
    for system in (halves, mixed):
        for m in (2, 3, 6):
            assert osc_decomposition_check(probe, system, 2, m) is True
    print("criterion 04 (oscillation algebra): pass")


def test_criterion_05_box_counter_sanity():
    xs = np.linspace(0.0, 1.0, 2 ** 15 + 1)
    for name, text in (("affine-up", "0.25+0.5*x"),
                       ("affine-down", "1-0.75*x"),
                       ("root-cusp", "abs(x-0.5)^0.5")):
        start = time.perf_counter()
        graph = SampledFunction(0.0, 1.0, evaluate_many(parse(text), xs))
        estimate = box_dimension(graph, 4, 11)
        assert abs(estimate.slope - 1.0) <= 0.05, (name, estimate.slope)
        assert time.perf_counter() - start < 10.0, name
    print("criterion 05 (box counter sanity): pass")


def test_criterion_06_exact_box_dimension():
    tent = make_system(K3, "1-2*abs(x-0.5)", "0", ("0.05", "0.05"))
    verdict = exact_boxdim_verdict(tent, s=1.0)
    assert all(h.passed for h in verdict.hypothesis)
    assert verdict.prediction == 1.0
    assert abs(verdict.estimate - 1.0) <= 0.1
    assert verdict.agreement

    steep = make_system(K3, "1-2*abs(x-0.5)", "0", ("0.9", "0.9"))
    undecided = exact_boxdim_verdict(steep, s=1.0)
    assert not undecided.hypothesis[0].passed
    assert undecided.prediction is None

    start = time.perf_counter()
    rough = "+".join(f"{2.0 ** (-k / 2.0)!r}*cos({float(2 ** k * math.pi)!r}*x)"
                     for k in range(17))
    top = 0.0
    for k in range(17):
        top += 2.0 ** (-k / 2.0)  # same accumulation order as the parse tree
    system = make_system(K3, rough, f"{top!r}-2.0*x", ("0.01", "0.01"))
    verdict = exact_boxdim_verdict(system, s=0.5, m_min=5, m_max=11,
                                   grid_exponent=16)
    assert all(h.passed for h in verdict.hypothesis)
    assert verdict.prediction == 1.5
    assert abs(verdict.estimate - 1.5) <= 0.1, verdict.estimate
    assert verdict.agreement
    assert time.perf_counter() - start < 60.0
    print("criterion 06 (exact box dimension): pass")


def test_criterion_07_variation_dimension_one():
    cases = (
        ("bv", K3, f"sin({PI}*x)", ("0.2", "0.2")),
        ("bv", K3, "x*(1-x)", ("0.1+0.05*x", "0.1")),
        ("bv", K5, f"sin({PI}*x)", ("0.1", "0.1", "0.1", "0.1")),
        ("ac", K3, f"sin({PI}*x)", ("0.1", "0.1")),
        ("ac", K3, "x*(1-x)", ("0.05*x", "0.05")),
    )
    settings = ReportSettings(grid_exponent=12, box_m_max=10, osc_m_max=10,
                              pair_count=512)
    for tag, knots, germ, alphas in cases:
        report = dimension_report(make_system(knots, germ, "0", alphas),
                                  settings)
        wanted = "bv-dimension-one" if tag == "bv" else "ac-dimension-one"
        verdict = {v.tag: v for v in report.verdicts}[wanted]
        assert all(h.passed for h in verdict.hypothesis), (tag, alphas)
        assert verdict.prediction == 1.0
        assert verdict.agreement, (tag, alphas, report.estimate.slope)
        assert abs(report.estimate.slope - 1.0) <= 0.1, (tag, alphas)
    print("criterion 07 (variation implies dimension one): pass")


def test_criterion_08_hoelder_sandwich():
    scale = repr(0.6 * math.sqrt(0.5))
    system = make_system(K3, "abs(x-0.5)^0.5", repr(math.sqrt(0.5)),
                         (scale, scale))
    hypothesis = hoelder_invariance_check(system, 0.5)
    assert hypothesis.passed
    assert hypothesis.lhs == pytest.approx(0.6, abs=1e-9)
    samples = sample_fif(system, 2 * 2 ** 14, TOL)
    estimate = box_dimension(samples, 4, 11)
    assert 0.95 <= estimate.slope <= 1.55, estimate.slope
    print("criterion 08 (Hoelder sandwich): pass")


def test_criterion_09_checker_arithmetic():
    def halves(alphas, germ=f"sin({PI}*x)"):
        return make_system(K3, germ, "0", alphas)

    # contraction on the product metric; sin germ against zero base gives
    # sup 1, gap 1, top scaling 0.5, hence the uniform bound lands on 2
    ramped = halves(("0.4*x", "0.5*x"))
    assert uniform_bound(ramped) == 2.0
    tight = check_metric_contraction(ramped)
    assert tight.constants["lhs_1"] == pytest.approx(2.1, abs=1e-12)
    assert tight.verdict == "fail"
    weighted = check_metric_contraction(ramped, c1=100.0)
    assert weighted.constants["lhs_1"] == pytest.approx(0.516, abs=1e-12)
    assert weighted.constants["lhs_2"] == pytest.approx(0.52, abs=1e-12)
    assert weighted.lhs == pytest.approx(0.52, abs=1e-12)
    assert weighted.verdict == "pass"
    flat = check_metric_contraction(halves(("0.3", "0.3")))
    assert flat.lhs == pytest.approx(0.5, abs=1e-12)
    assert flat.verdict == "pass"

    low = vbeta_invariance_check(halves(("0.4", "0.4")), 0.5)
    high = vbeta_invariance_check(halves(("0.6", "0.6")), 0.5)
    assert low.lhs == pytest.approx(0.8, abs=1e-12) and low.verdict == "pass"
    assert high.lhs == pytest.approx(1.2, abs=1e-12) and high.verdict == "fail"

    whole = hoelder_invariance_check(halves(("0.3", "0.3")), 1.0)
    rooted = hoelder_invariance_check(halves(("0.3", "0.3")), 0.25)
    linear = hoelder_invariance_check(halves(("0.5*x", "0.5*x")), 1.0)
    assert whole.lhs == pytest.approx(0.6, abs=1e-12) and whole.verdict == "pass"
    assert rooted.lhs == pytest.approx(0.3 / 0.5 ** 0.25, abs=1e-12)
    assert rooted.verdict == "pass"
    assert linear.lhs == pytest.approx(2.0, abs=1e-12)
    assert linear.verdict == "fail"

    small = bv_invariance_check(halves(("0.2", "0.2")))
    large = bv_invariance_check(halves(("0.3", "0.3")))
    five = bv_invariance_check(make_system(K5, f"sin({PI}*x)", "0",
                                           ("0.1",) * 4))
    assert small.lhs == pytest.approx(0.2, abs=1e-12) and small.rhs == 0.25
    assert small.verdict == "pass" and large.verdict == "fail"
    assert five.lhs == pytest.approx(0.1, abs=1e-12) and five.rhs == 0.125
    assert five.verdict == "pass"

    gentle = ac_invariance_check(halves(("0.1", "0.1")))
    heavy = ac_invariance_check(halves(("0.2", "0.2")))
    sloped = ac_invariance_check(halves(("0.05*x", "0.05*x")))
    assert gentle.lhs == pytest.approx(0.1, abs=1e-12) and gentle.rhs == 0.125
    assert gentle.verdict == "pass" and heavy.verdict == "fail"
    assert sloped.lhs == pytest.approx(0.05, abs=1e-12)
    assert sloped.verdict == "pass"
    print("criterion 09 (checker arithmetic): pass")


def test_criterion_10_affine_cross_check(tmp_path):
    system = make_classical(((0.0, 0.0), (0.5, 1.0), (1.0, 0.0)),
                            ("0.8", "0.8"), ("x", "1-x"))
    closed_form = affine_box_dimension(system)
    assert abs(closed_form - (1.0 + math.log(1.6) / math.log(2.0))) <= 1e-12
    samples = sample_fif(system, 2 ** 16, 1.0e-6)
    estimate = box_dimension(samples, 6, 12)
    assert abs(estimate.slope - 1.678) <= 0.1, estimate.slope

    # the same counts must come out of the standalone per-column scan
    csv_path = tmp_path / "samples.csv"
    samples.to_csv(csv_path)
    script = Path(__file__).with_name("oracle_boxcount.py")
    command = [sys.executable, str(script), str(csv_path)]
    command += [repr(delta) for delta in estimate.deltas]
    proc = subprocess.run(command, capture_output=True, text=True, check=True)
    recounts = [int(line.split(",")[1])
                for line in proc.stdout.splitlines() if line]
    assert recounts == list(estimate.counts)
    print("criterion 10 (affine cross-check): pass")
