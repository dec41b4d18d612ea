"""Input sampling, high-precision ground truth and per-node local error."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import gmpy2
import numpy as np

from ..analysis.interval import Interval, interval_transfer, non_error, point
from ..engine.egraph import EGraphView
from ..extraction.cost import CostModel
from ..extraction.select import Selection, select_greedy
from ..ir.core import BlockArgument, Operation, OpResult, Value
from .evaluate import DEFAULT_PRECISION, eval_mpfr, precision, round_f64
from .fpcore import FPCore
from .ieee import F64_OPS, ORDINAL_SPAN, eval_f64, from_ordinal, ordinal, ulp_distances

DEFAULT_SAMPLES = 256


class SamplingError(Exception):
    pass


@dataclass
class SampleSet:
    args: list[str]
    points: np.ndarray  # shape (n, len(args))
    attempts: int = 0

    def __len__(self) -> int:
        return self.points.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.points[:, self.args.index(name)]

    def columns(self) -> dict[str, np.ndarray]:
        return {a: self.points[:, i] for i, a in enumerate(self.args)}


def _draw(rng: np.random.Generator, lo: float, hi: float, size: int) -> np.ndarray:
    # Uniform over the doubles in [lo, hi], i.e. over their ordinals.
    olo, ohi = ordinal(lo), ordinal(hi)
    ords = rng.integers(olo, ohi, size=size, endpoint=True)
    return np.array([from_ordinal(int(o)) for o in ords], dtype=np.float64)


def _body_ops(func: Operation) -> list[Operation]:
    block = func.regions[0].block
    return [op for op in block.ops if op.name != "func.return"]


def point_is_safe(func: Operation, values: dict[Value, float]) -> bool:
    """True when interval evaluation at this point proves every op free of errors."""
    env: dict[Value, Interval] = {a: point(x) for a, x in values.items()}
    for op in _body_ops(func):
        operands = [env[v] for v in op.operands]
        out = interval_transfer(op.name, op.attributes, operands, op.results[0].type)
        if not non_error(out):
            return False
        env[op.results[0]] = out
    return True


def sample_inputs(core: FPCore, func: Operation, n: int = DEFAULT_SAMPLES, seed: int = 0,
                  max_rejection: float = 0.999) -> SampleSet:
    """Draw ``n`` points inside the argument ranges that provably avoid domain errors.

    ``func`` is the IR form of ``core`` (its block arguments follow ``core.args``).
    """
    rng = np.random.default_rng(seed)
    ranges = core.ranges()
    block_args = list(func.regions[0].block.args)
    if n <= 0:
        return SampleSet(list(core.args), np.zeros((0, len(core.args))))
    budget = max(int(n / (1 - max_rejection)), 1000)
    accepted: list[list[float]] = []
    attempts = 0
    batch = max(n, 64)
    while len(accepted) < n:
        if attempts >= budget:
            raise SamplingError(
                f"only {len(accepted)} of {attempts} candidate points avoid domain errors")
        cols = [_draw(rng, *ranges[a], batch) for a in core.args]
        for i in range(batch):
            attempts += 1
            row = [float(c[i]) for c in cols]
            if point_is_safe(func, dict(zip(block_args, row))):
                accepted.append(row)
                if len(accepted) == n:
                    break
    return SampleSet(list(core.args), np.array(accepted, dtype=np.float64), attempts)


# -- ground truth ------------------------------------------------------------

UNIT_COSTS = CostModel(default=1.0, leaf=0.0)


@dataclass
class GroundTruth:
    """High-precision value of each selected class at each sample.

    ``exact[cid][i]`` is an mpfr or None (error marker); ``rounded[cid]`` holds
    the same values rounded to doubles, NaN where ``exact`` is None.
    """
    precision_bits: int
    representatives: Selection
    exact: dict[int, list] = field(default_factory=dict)
    rounded: dict[int, np.ndarray] = field(default_factory=dict)

    def row(self, view: EGraphView, value: Value) -> Optional[np.ndarray]:
        return self.rounded.get(view.class_of_value(value))


def _leaf_values(view: EGraphView, samples: SampleSet) -> dict[Value, list]:
    args = view.egraph.parent_op.regions[0].block.args if view.egraph.parent_op else []
    out = {}
    for a, name in zip(args, samples.args):
        out[a] = [gmpy2.mpfr(float(x)) for x in samples.column(name)]
    return out


def ground_truth(view: EGraphView, samples: SampleSet,
                 precision_bits: int = DEFAULT_PRECISION) -> GroundTruth:
    """Evaluate one representative per class, picked by unit-cost greedy selection."""
    rep = select_greedy(view, UNIT_COSTS)
    truth = GroundTruth(precision_bits, rep)
    leaves = _leaf_values(view, samples)
    n = len(samples)
    with precision(precision_bits):
        for cid in _bottom_up(view, rep):
            member = view.members(cid)[rep.choices[cid]]
            if isinstance(member, BlockArgument):
                row = leaves.get(member, [None] * n)
            else:
                op = member.op  # type: ignore[attr-defined]
                if op.name == "arith.constant":
                    row = [gmpy2.mpfr(float(op.attributes["value"].value))] * n
                else:
                    kids = [truth.exact[view.class_of_value(v)] for v in op.operands]
                    row = [eval_mpfr(op.name, [k[i] for k in kids]) for i in range(n)]
            truth.exact[cid] = row
            truth.rounded[cid] = round_f64(row)
    return truth


def _bottom_up(view: EGraphView, rep: Selection) -> list[int]:
    # Post-order over representative choices; greedy choices never form a cycle.
    order: list[int] = []
    done: set[int] = set()
    for start in view.classes():
        if start not in rep.choices or start in done:
            continue
        stack = [(start, False)]
        while stack:
            cid, expanded = stack.pop()
            if cid in done:
                continue
            if expanded:
                done.add(cid)
                order.append(cid)
                continue
            stack.append((cid, True))
            member = view.members(cid)[rep.choices[cid]]
            if isinstance(member, OpResult):
                for v in member.op.operands:
                    k = view.class_of_value(v)
                    if k not in done:
                        stack.append((k, False))
    return order


# -- local error ---------------------------------------------------------------

def local_error(view: EGraphView, truth: GroundTruth) -> dict[int, float]:
    """Map each e-node id to log2(1 + mean ULP error of computing it in binary64).

    The op is applied to its operands' ground truth rounded to doubles and
    compared with its own class's rounded ground truth. Samples with an error
    marker on either side are skipped; a node with no valid sample costs inf.
    A NaN result counts as the largest possible distance.
    """
    costs: dict[int, float] = {}
    for node in view.nodes():
        if node.name == "arith.constant":
            costs[node.id] = 0.0
            continue
        own = truth.rounded.get(view.class_of_node(node))
        kids = [truth.rounded.get(view.class_of_value(v)) for v in node.operands]
        if node.name not in F64_OPS or own is None or any(k is None for k in kids):
            costs[node.id] = math.inf
            continue
        valid = ~np.isnan(own)
        for k in kids:
            valid &= ~np.isnan(k)
        if not valid.any():
            costs[node.id] = math.inf
            continue
        approx = eval_f64(node.name, [k[valid] for k in kids])
        dist = np.minimum(ulp_distances(approx, own[valid]), float(ORDINAL_SPAN))
        costs[node.id] = math.log2(1.0 + float(np.mean(dist)))
    return costs


def local_error_cost(costs: dict[int, float]):
    """Member cost for greedy selection: (local error, node count), so ties prefer smaller terms."""
    def member_cost(v: Value):
        if isinstance(v, BlockArgument):
            return (0.0, 0)
        return (costs.get(v.op.id, math.inf), 1)  # type: ignore[attr-defined]
    return member_cost


def bits_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """Mean over samples of log2(1 + ULP distance); samples with no exact value are skipped."""
    valid = ~np.isnan(exact)
    if not valid.any():
        return math.nan
    dist = np.minimum(ulp_distances(approx[valid], exact[valid]), float(ORDINAL_SPAN))
    return float(np.mean(np.log2(1.0 + dist)))
