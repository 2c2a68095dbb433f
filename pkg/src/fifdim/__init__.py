"""Fractal interpolation systems with verified regularity and dimension
predictions.

A system pairs a closed-form profile with contractive scalings over a knot
partition (or interpolates plain data points the classical way).  The package
constructs the attractor to certified accuracy, measures oscillation, Hoelder,
and variation regularity of the result, checks the hypotheses of the
dimension statements that apply, and compares their predictions against a
box-counting estimate.
"""
from .dimension import (BiLipschitzEstimate, DimensionEstimate,
                        DimensionReport, EstimateError, MoranSolution,
                        ReportSettings, affine_box_dimension, box_count,
                        box_dimension, dimension_report, estimate_bilipschitz,
                        exact_boxdim_verdict, hausdorff_bounds, moran_solve)
from .expr import (DomainError, Node, ParseError, differentiate, evaluate,
                   evaluate_many, parse, sup_norm, to_string)
from .fifcore import (AlphaFractalSystem, ClassicalFifSystem,
                      ConvergenceError, FifSystem, GridError, SampledFunction,
                      ValidationError, check_metric_contraction, eval_fif,
                      make_classical, make_system, rb_apply, sample_fif,
                      uniform_bound)
from .regularity import (OscillationProfile, ac_invariance_check,
                         bv_invariance_check, hoelder_invariance_check,
                         hoelder_norm, hoelder_seminorm,
                         lower_oscillation_constant, osc_decomposition_check,
                         oscillation, oscillation_levels, rescale,
                         total_variation, vbeta_invariance_check, vbeta_norm,
                         vbeta_seminorm)
from .reports import SAFETY, ConditionReport, TheoremVerdict

__version__ = "0.1.0"

__all__ = [
    "AlphaFractalSystem", "BiLipschitzEstimate", "ClassicalFifSystem",
    "ConditionReport", "ConvergenceError", "DimensionEstimate",
    "DimensionReport", "DomainError", "EstimateError", "FifSystem",
    "GridError", "MoranSolution", "Node", "OscillationProfile", "ParseError",
    "ReportSettings", "SAFETY", "SampledFunction", "TheoremVerdict",
    "ValidationError", "ac_invariance_check", "affine_box_dimension",
    "box_count", "box_dimension", "bv_invariance_check",
    "check_metric_contraction", "differentiate", "dimension_report",
    "estimate_bilipschitz", "eval_fif", "evaluate", "evaluate_many",
    "exact_boxdim_verdict", "hausdorff_bounds", "hoelder_invariance_check",
    "hoelder_norm", "hoelder_seminorm", "lower_oscillation_constant",
    "make_classical", "make_system", "moran_solve", "osc_decomposition_check",
    "oscillation", "oscillation_levels", "parse", "rb_apply", "rescale",
    "sample_fif", "sup_norm", "to_string", "total_variation",
    "uniform_bound", "vbeta_invariance_check", "vbeta_norm",
    "vbeta_seminorm",
]
