"""Dataflow analyses whose eclass handling doubles as e-class analysis."""

from .dataflow import DataflowError, LatticeContract, run_dataflow
from .interval import (
    BOTTOM, FLOAT_TOP, NAN_ONLY, PREDICATE_FUNCTIONS, Interval, IntervalAnalysis,
    PredicateFacts, hull, interval_transfer, leq, meet, point, predicate_facts, top_for,
)

__all__ = [
    "BOTTOM", "DataflowError", "FLOAT_TOP", "Interval", "IntervalAnalysis", "LatticeContract",
    "NAN_ONLY", "PREDICATE_FUNCTIONS", "PredicateFacts", "hull", "interval_transfer", "leq",
    "meet", "point", "predicate_facts", "run_dataflow", "top_for",
]
