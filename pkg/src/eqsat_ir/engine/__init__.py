"""Equality saturation over e-graphs embedded in the IR."""

from .compare import class_correspondence, isomorphic, match_key, match_set
from .egraph import EGraphError, EGraphView, register_eclass_analysis
from .ematch import EGraphContext, MatchError, MatchRecord, PlainView, ematch, ematch_counted
from .rewrite import (
    ApplyStats, IterationStats, MatchMode, SaturationConfig, SaturationResult, StopReason,
    apply_matches, collect_matches, compile_programs, saturate,
)

__all__ = [
    "ApplyStats", "class_correspondence", "isomorphic", "match_key", "match_set", "EGraphContext", "EGraphError", "EGraphView", "IterationStats", "MatchError",
    "MatchMode", "MatchRecord", "PlainView", "SaturationConfig", "SaturationResult",
    "StopReason", "apply_matches", "collect_matches", "compile_programs", "ematch",
    "ematch_counted", "register_eclass_analysis", "saturate",
]
