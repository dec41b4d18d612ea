"""Sparse forward dataflow over SSA values.

The solver starts every value at top and iterates transfer functions down to
a fixpoint. ``eqsat.eclass`` results take the combine of their operands, so a
dataflow analysis is an e-class analysis without extra machinery. Every
intermediate state is a sound over-approximation, so hitting the step budget
on a long descending chain (possible through e-graph cycles) is safe.
"""

from __future__ import annotations

from collections import deque
from typing import Optional, Protocol, Sequence

from ..ir.core import Operation, Value


class DataflowError(Exception):
    pass


class LatticeContract(Protocol):
    name: str

    def top(self, type_: str): ...

    def combine(self, a, b): ...

    def leq(self, a, b) -> bool: ...

    def transfer(self, name: str, attrs: dict, operands: Sequence, result_type: str): ...


def _element(analysis: LatticeContract, op: Operation, operand_elems: list):
    if op.name == "eqsat.eclass":
        out = analysis.top(op.results[0].type)
        for e in operand_elems:
            out = analysis.combine(out, e)
        return out
    return analysis.transfer(op.name, op.attributes, operand_elems, op.results[0].type)


def run_dataflow(root: Operation, analysis: LatticeContract,
                 seeds: Optional[dict[Value, object]] = None,
                 max_steps: Optional[int] = None, check_monotone: bool = False) -> dict[Value, object]:
    """Map every value under ``root`` to its fixpoint element.

    Block arguments, and values defined outside ``root``, take ``seeds[value]``
    when given and top otherwise.
    """
    seeds = seeds or {}
    elems: dict[Value, object] = {}
    ops: list[Operation] = []
    for op in root.walk():
        for region in op.regions:
            for block in region.blocks:
                for a in block.args:
                    elems[a] = seeds.get(a, analysis.top(a.type))
        if op is root:
            continue
        for r in op.results:
            elems[r] = analysis.top(r.type)
        if len(op.results) == 1:
            ops.append(op)
    budget = max_steps if max_steps is not None else 64 * (len(ops) + 1)
    work = deque(ops)
    queued = {op.id for op in ops}
    steps = 0
    while work and steps < budget:
        steps += 1
        op = work.popleft()
        queued.discard(op.id)
        res = op.results[0]
        operand_elems = [elems[v] if v in elems else seeds.get(v, analysis.top(v.type))
                         for v in op.operands]
        new = _element(analysis, op, operand_elems)
        old = elems[res]
        if not analysis.leq(new, old):
            if check_monotone:
                raise DataflowError(f"{op.name}#{op.id}: element moved up from {old} to {new}")
            new = analysis.combine(new, old)
        if new != old:
            elems[res] = new
            for user in res.users():
                if len(user.results) == 1 and user.id not in queued:
                    queued.add(user.id)
                    work.append(user)
    return elems
