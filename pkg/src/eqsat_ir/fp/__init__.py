"""Floating-point accuracy improvement on FPCore expressions."""

from .accuracy import (
    DEFAULT_SAMPLES, GroundTruth, SampleSet, SamplingError, bits_error, ground_truth,
    local_error, local_error_cost, point_is_safe, sample_inputs,
)
from .evaluate import DEFAULT_PRECISION, eval_expr_f64, eval_expr_mpfr, eval_mpfr, precision
from .fpcore import (
    FPCore, FPCoreError, format_fpcore, function_of, function_to_fpcore, parse_fpcore,
    print_fpcore, to_function,
)
from .ieee import eval_f64, from_ordinal, ordinal, ulp_distance, ulp_distances
from .improve import (
    AccuracyReport, ImproveConfig, ImproveError, ImproveResult, compare_accuracy, improve,
    improve_detailed,
)

__all__ = [
    "AccuracyReport", "DEFAULT_PRECISION", "DEFAULT_SAMPLES", "FPCore", "FPCoreError",
    "GroundTruth", "ImproveConfig", "ImproveError", "ImproveResult", "SampleSet",
    "SamplingError", "bits_error", "compare_accuracy", "eval_expr_f64", "eval_expr_mpfr",
    "eval_f64", "eval_mpfr", "format_fpcore", "from_ordinal", "function_of",
    "function_to_fpcore", "ground_truth", "improve", "improve_detailed", "local_error",
    "local_error_cost", "ordinal", "parse_fpcore", "point_is_safe", "precision",
    "print_fpcore", "sample_inputs", "to_function", "ulp_distance", "ulp_distances",
]
