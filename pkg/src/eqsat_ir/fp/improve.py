"""One round of accuracy improvement: FPCore in, rewritten FPCore and a report out."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import gmpy2
import numpy as np

from ..analysis.interval import Interval, IntervalAnalysis
from ..dialects.insert import insert_eclasses
from ..engine.egraph import EGraphView, register_eclass_analysis
from ..engine.rewrite import MatchMode, SaturationConfig, SaturationResult, saturate
from ..extraction.replace import annotate_selection, replace_selected, topo_sort
from ..extraction.select import select_greedy
from ..ir.verifier import verify
from ..patterns.rules import Pattern
from .accuracy import (
    DEFAULT_SAMPLES, bits_error, ground_truth, local_error, local_error_cost, sample_inputs,
)
from .evaluate import DEFAULT_PRECISION, eval_expr_f64, eval_expr_mpfr, round_f64
from .fpcore import FPCore, format_fpcore, function_of, function_to_fpcore, parse_fpcore, to_function


class ImproveError(Exception):
    def __init__(self, stage: str, cause: Exception) -> None:
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class ImproveConfig:
    samples: int = DEFAULT_SAMPLES
    precision_bits: int = DEFAULT_PRECISION
    max_enodes: int = 4000
    max_iterations: Optional[int] = None
    wall_timeout: Optional[float] = None
    match_mode: MatchMode = MatchMode.COMBINED
    seed: int = 0


@dataclass
class AccuracyReport:
    input_bits_err: float
    output_bits_err: float
    samples: int
    enodes: int
    iters: int
    reason: str

    def line(self) -> str:
        return (f"input_bits_err={self.input_bits_err:.4f} output_bits_err={self.output_bits_err:.4f} "
                f"samples={self.samples} enodes={self.enodes} iters={self.iters} reason={self.reason}")


@dataclass
class ImproveResult:
    text: str
    report: AccuracyReport
    input: FPCore
    output: FPCore
    saturation: SaturationResult


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ImproveError:
        raise
    except Exception as exc:
        raise ImproveError(name, exc) from exc


def compare_accuracy(before: FPCore, after: FPCore, n: int, seed: int,
                     bits: int = DEFAULT_PRECISION) -> tuple[float, float, int]:
    """Bits of error of both expressions against ``after``'s high-precision value on fresh points."""
    func = function_of(to_function(before))
    samples = sample_inputs(before, func, n, seed)
    env = samples.columns()
    exact = round_f64(eval_expr_mpfr(after.body, {a: _mpfr_col(c) for a, c in env.items()}, bits))
    err_in = bits_error(eval_expr_f64(before.body, env), exact)
    err_out = bits_error(eval_expr_f64(after.body, env), exact)
    return err_in, err_out, len(samples)


def _mpfr_col(col: np.ndarray) -> list:
    return [gmpy2.mpfr(float(x)) for x in col]


def improve(fpcore_text: str, rules: Sequence[Pattern], config: Optional[ImproveConfig] = None):
    """Parse, saturate, extract by local error and print; returns (text, report)."""
    result = improve_detailed(fpcore_text, rules, config)
    return result.text, result.report


def improve_detailed(fpcore_text: str, rules: Sequence[Pattern],
                     config: Optional[ImproveConfig] = None) -> ImproveResult:
    config = config or ImproveConfig()
    core = _stage("parse", parse_fpcore, fpcore_text)
    module = _stage("lower", to_function, core)
    func = function_of(module)
    samples = _stage("sample", sample_inputs, core, func, config.samples, config.seed)
    if len(samples) == 0:
        raise ImproveError("sample", ValueError("no samples to evaluate"))
    _stage("insert-eclasses", insert_eclasses, func)
    egraph = next(op for op in func.walk() if op.name == "eqsat.egraph")
    view = _stage("saturate", EGraphView, egraph)
    ranges = core.ranges()
    seeds = {a: Interval(*ranges[name])
             for a, name in zip(func.regions[0].block.args, core.args)}
    _stage("saturate", register_eclass_analysis, view, IntervalAnalysis(), seeds)
    sat_config = SaturationConfig(config.max_iterations, config.max_enodes,
                                  config.wall_timeout, config.match_mode)
    sat = _stage("saturate", saturate, view, list(rules), sat_config)
    enodes = view.enode_count
    truth = _stage("ground-truth", ground_truth, view, samples, config.precision_bits)
    costs = _stage("local-error", local_error, view, truth)
    selection = _stage("select", select_greedy, view, local_error_cost(costs))
    if any(r not in selection.choices for r in view.roots()):
        raise ImproveError("select", ValueError("no finite-cost program for the result"))
    _stage("replace", annotate_selection, view, selection)
    _stage("replace", replace_selected, module)
    _stage("replace", topo_sort, func.regions[0])
    problems = verify(module)
    if problems:
        raise ImproveError("replace", ValueError("; ".join(problems)))
    out = _stage("print", function_to_fpcore, func, core)
    text = format_fpcore(out)
    err_in, err_out, n = _stage("report", compare_accuracy, core, out, config.samples,
                                config.seed + 1, config.precision_bits)
    report = AccuracyReport(err_in, err_out, n, enodes, sat.iterations, sat.reason.value)
    return ImproveResult(text, report, core, out, sat)
