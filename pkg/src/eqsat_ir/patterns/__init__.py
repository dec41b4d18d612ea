"""Declarative rewrite patterns and their compilation to matcher programs."""

from .lowering import LoweringError, compile_rewriter, linearize, lower_combined, lower_individual, lower_single
from .program import MatcherProgram, Rewriter, check_program, format_program
from .rules import (
    PREDICATES, Constraint, Pattern, PatternError, PConst, POp, PVar, make_pattern,
    parse_patterns,
)

__all__ = [
    "Constraint", "LoweringError", "MatcherProgram", "PConst", "POp", "PREDICATES", "PVar",
    "Pattern", "PatternError", "Rewriter", "check_program", "compile_rewriter",
    "format_program", "linearize", "lower_combined", "lower_individual", "lower_single",
    "make_pattern", "parse_patterns",
]
