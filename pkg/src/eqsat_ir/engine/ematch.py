"""Interpreter for matcher programs.

The same program runs in two settings. Over ordinary IR, ``GetDefiningOp``
yields the single defining op of a value. Over an e-graph, values are e-class
results: ``GetResult`` answers with the class wrapping an op's result and
``GetDefiningOp`` enumerates every e-node of the class, which is where
e-matching needs backtracking.

Backtracking uses an explicit stack of frames, one per ``Choose`` or
``GetDefiningOp`` that still has alternatives. A failing check or a
``Finalize`` resumes the most recent frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from ..ir.attributes import FloatAttr, IntegerAttr
from ..ir.core import Operation, OpResult, Value
from ..patterns.program import (
    ApplyConstraint, AreEqual, CheckAttribute, CheckOperandCount, CheckOperationName, Choose,
    Finalize, GetDefiningOp, GetOperand, GetResult, MatcherProgram, RecordMatch,
)
from .egraph import EQSAT_OPS, EGraphView


class MatchError(Exception):
    """Raised for malformed programs, such as reads of unwritten registers."""


@dataclass(frozen=True)
class MatchRecord:
    pattern: str
    bindings: tuple[tuple[str, int], ...]  # variable -> canonical class id (or value id)
    root: int
    pattern_index: int = field(default=0, compare=False)
    values: tuple[Value, ...] = field(default=(), compare=False, repr=False)
    root_value: Optional[Value] = field(default=None, compare=False, repr=False)
    program: Optional[MatcherProgram] = field(default=None, compare=False, repr=False)

    @property
    def key(self) -> tuple:
        return (self.pattern, self.bindings, self.root)


class PlainView:
    """Matching context over ordinary SSA IR (no e-classes)."""

    def __init__(self, root: Operation) -> None:
        self.root = root

    def candidates(self) -> list[Operation]:
        return [op for op in self.root.walk() if op is not self.root]

    def defining_ops(self, value: Value) -> list[Operation]:
        return [value.op] if isinstance(value, OpResult) else []

    def result_value(self, op: Operation, index: int) -> Value:
        return op.results[index]

    def canonical(self, value: Value) -> int:
        return value.id

    def holds(self, predicate: str, values: Sequence[Value]) -> bool:
        return False


class EGraphContext:
    """Matching context over an e-graph view."""

    def __init__(self, view: EGraphView) -> None:
        self.view = view

    def candidates(self) -> list[Operation]:
        return self.view.nodes()

    def defining_ops(self, value: Value) -> list[Operation]:
        view = self.view
        if isinstance(value, OpResult) and value.op.id in view.parent:
            return [v.op for v in view.class_op(view.find(value.op.id)).operands
                    if isinstance(v, OpResult)]
        return [value.op] if isinstance(value, OpResult) else []

    def result_value(self, op: Operation, index: int) -> Value:
        if op.name in EQSAT_OPS:
            return op.results[index]
        return self.view.class_value(self.view.class_of_node(op))

    def canonical(self, value: Value) -> int:
        if isinstance(value, OpResult) and value.op.id in self.view.parent:
            return self.view.find(value.op.id)
        return -1 - value.id

    def holds(self, predicate: str, values: Sequence[Value]) -> bool:
        return self.view.holds(predicate, values)


Context = Union[PlainView, EGraphContext]


def _attr_matches(actual, expected) -> bool:
    if isinstance(expected, (int, float)) and not isinstance(expected, bool):
        if isinstance(actual, (IntegerAttr, FloatAttr)):
            return actual.value == expected
        return False
    return actual == expected


def _context(target) -> Context:
    if isinstance(target, EGraphView):
        return EGraphContext(target)
    if isinstance(target, (PlainView, EGraphContext)):
        return target
    if isinstance(target, Operation):
        return PlainView(target)
    raise TypeError(f"cannot match over {target!r}")


def run_matcher(program: MatcherProgram, ctx: Context, root: Operation, out: list) -> int:
    """Run the matcher section with ``root`` in register 0; returns instructions executed."""
    code = program.matcher
    regs: list = [None] * max(program.num_registers, 1)
    regs[0] = root
    stack: list[list] = []  # [kind, instr, alternatives, cursor, saved registers]
    pc = 0
    steps = 0

    def read(r: int):
        v = regs[r]
        if v is None:
            raise MatchError(f"instruction {pc} reads unwritten register r{r}")
        return v

    while True:
        steps += 1
        instr = code[pc]
        if isinstance(instr, CheckOperationName):
            pc = instr.succ if read(instr.op).name == instr.name else instr.fail
        elif isinstance(instr, CheckOperandCount):
            pc = instr.succ if len(read(instr.op).operands) == instr.count else instr.fail
        elif isinstance(instr, GetOperand):
            op = read(instr.op)
            if instr.index >= len(op.operands):
                raise MatchError(f"instruction {pc}: operand {instr.index} out of range")
            regs[instr.dst] = op.operands[instr.index]
            pc = instr.succ
        elif isinstance(instr, GetDefiningOp):
            alts = ctx.defining_ops(read(instr.value))
            if not alts:
                pc = instr.fail
            else:
                if len(alts) > 1:
                    stack.append(["gdo", instr, alts, 1, list(regs)])
                regs[instr.dst] = alts[0]
                pc = instr.succ
        elif isinstance(instr, CheckAttribute):
            actual = read(instr.op).attributes.get(instr.key)
            pc = instr.succ if actual is not None and _attr_matches(actual, instr.value) else instr.fail
        elif isinstance(instr, AreEqual):
            same = ctx.canonical(read(instr.lhs)) == ctx.canonical(read(instr.rhs))
            pc = instr.succ if same else instr.fail
        elif isinstance(instr, ApplyConstraint):
            ok = ctx.holds(instr.predicate, [read(r) for r in instr.args])
            pc = instr.succ if ok else instr.fail
        elif isinstance(instr, GetResult):
            regs[instr.dst] = ctx.result_value(read(instr.op), instr.index)
            pc = instr.succ
        elif isinstance(instr, Choose):
            stack.append(["choose", instr, instr.branches, 1, list(regs)])
            pc = instr.branches[0]
        elif isinstance(instr, RecordMatch):
            values = tuple(read(r) for _, r in instr.bindings)
            root_value = read(instr.root)
            pattern = program.patterns[instr.pattern]
            out.append(MatchRecord(
                pattern.name,
                tuple((name, ctx.canonical(v)) for (name, _), v in zip(instr.bindings, values)),
                ctx.canonical(root_value),
                instr.pattern, values, root_value, program,
            ))
            pc = instr.succ
        elif isinstance(instr, Finalize):
            # Resume at the most recent backtracking point with alternatives left.
            while stack:
                frame = stack[-1]
                kind, at, alts, cursor, saved = frame
                if cursor >= len(alts):
                    stack.pop()
                    continue
                frame[3] = cursor + 1
                regs = list(saved)
                if kind == "choose":
                    pc = alts[cursor]
                else:
                    regs[at.dst] = alts[cursor]
                    pc = at.succ
                break
            else:
                return steps
        else:
            raise MatchError(f"instruction {pc}: {type(instr).__name__} is not a matcher instruction")


def ematch(program: MatcherProgram, target, candidates: Optional[Iterable[Operation]] = None) -> list[MatchRecord]:
    """All matches of ``program`` rooted at each candidate op, in candidate order.

    ``target`` is an :class:`EGraphView` for e-matching or an operation whose
    nested ops are matched classically. Matching never mutates the IR.
    """
    ctx = _context(target)
    out: list[MatchRecord] = []
    for op in (ctx.candidates() if candidates is None else candidates):
        run_matcher(program, ctx, op, out)
    return out


def ematch_counted(program: MatcherProgram, target) -> tuple[list[MatchRecord], int]:
    """Like :func:`ematch` but also returns the number of instructions executed."""
    ctx = _context(target)
    out: list[MatchRecord] = []
    steps = 0
    for op in ctx.candidates():
        steps += run_matcher(program, ctx, op, out)
    return out, steps
