"""Imperative matcher programs over a virtual register file.

A program has a matcher section, entered once per candidate root operation
with register 0 holding that operation, and one rewriter section per pattern.
Checks carry explicit ``succ``/``fail`` jump targets; ``fail`` always points
at a ``Finalize``, which resumes at the most recent backtracking point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..ir.attributes import Attribute
from .rules import Pattern


@dataclass(frozen=True)
class GetOperand:
    dst: int
    op: int
    index: int
    succ: int


@dataclass(frozen=True)
class GetResult:
    dst: int
    op: int
    index: int
    succ: int


@dataclass(frozen=True)
class GetDefiningOp:
    """Backtracking point: enumerates every operation that can define ``value``."""

    dst: int
    value: int
    succ: int
    fail: int


@dataclass(frozen=True)
class CheckOperationName:
    op: int
    name: str
    succ: int
    fail: int


@dataclass(frozen=True)
class CheckOperandCount:
    op: int
    count: int
    succ: int
    fail: int


@dataclass(frozen=True)
class CheckAttribute:
    """Compare ``op.attributes[key]``; a plain number compares numerically."""

    op: int
    key: str
    value: Union[Attribute, int, float]
    succ: int
    fail: int


@dataclass(frozen=True)
class AreEqual:
    lhs: int
    rhs: int
    succ: int
    fail: int


@dataclass(frozen=True)
class ApplyConstraint:
    predicate: str
    args: tuple[int, ...]
    succ: int
    fail: int
    rewrite: bool = False


@dataclass(frozen=True)
class Choose:
    branches: tuple[int, ...]


@dataclass(frozen=True)
class RecordMatch:
    pattern: int
    bindings: tuple[tuple[str, int], ...]
    root: int
    succ: int


@dataclass(frozen=True)
class Finalize:
    pass


@dataclass(frozen=True)
class CreateOp:
    dst: int
    name: str
    operands: tuple[int, ...]
    succ: int


@dataclass(frozen=True)
class CreateConstant:
    """Materialize a literal; its type is taken from the value in ``type_of``."""

    dst: int
    literal: Union[int, float]
    type_of: int
    succ: int


@dataclass(frozen=True)
class Replace:
    root: int
    value: int


Instruction = Union[
    GetOperand, GetResult, GetDefiningOp, CheckOperationName, CheckOperandCount,
    CheckAttribute, AreEqual, ApplyConstraint, Choose, RecordMatch, Finalize,
    CreateOp, CreateConstant, Replace,
]

SEMANTIC_CHECKS = (CheckOperationName, CheckOperandCount, CheckAttribute, AreEqual, ApplyConstraint)


@dataclass(frozen=True)
class Rewriter:
    """Rewrite section of one pattern.

    Registers ``0..len(variables)-1`` hold the bound variables in order and the
    next register holds the matched root value.
    """

    variables: tuple[str, ...]
    instructions: tuple[Instruction, ...]

    @property
    def root_register(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class MatcherProgram:
    patterns: tuple[Pattern, ...]
    matcher: tuple[Instruction, ...]
    rewriters: tuple[Rewriter, ...]
    num_registers: int

    def count(self, kind: type) -> int:
        return sum(1 for i in self.matcher if isinstance(i, kind))

    def __str__(self) -> str:
        return format_program(self)


_REGISTER_FIELDS = ("op", "value", "lhs", "rhs", "root", "type_of")
_TARGET_FIELDS = ("succ", "fail")


def _fmt(instr: Instruction) -> str:
    parts = []
    for k, v in vars(instr).items():
        if k == "dst":
            continue
        if k in _TARGET_FIELDS or k == "branches":
            text = "@" + str(v) if isinstance(v, int) else "[" + ", ".join(f"@{b}" for b in v) + "]"
        elif k in _REGISTER_FIELDS and not isinstance(instr, CheckAttribute) or (
                k == "op" and isinstance(instr, CheckAttribute)):
            text = f"r{v}"
        elif k in ("args", "operands"):
            text = "(" + ", ".join(f"r{r}" for r in v) + ")"
        elif k == "bindings":
            text = "{" + ", ".join(f"{n}: r{r}" for n, r in v) + "}"
        else:
            text = repr(v)
        parts.append(f"{k}={text}")
    prefix = f"r{instr.dst} = " if hasattr(instr, "dst") else ""
    return f"{prefix}{type(instr).__name__}({', '.join(parts)})"


def format_program(program: MatcherProgram) -> str:
    lines = ["matcher:"]
    for i, instr in enumerate(program.matcher):
        lines.append(f"  {i:3d}: {_fmt(instr)}")
    for p, rw in zip(program.patterns, program.rewriters):
        lines.append(f"rewriter {p.name} ({', '.join(rw.variables)}):")
        for i, instr in enumerate(rw.instructions):
            lines.append(f"  {i:3d}: {_fmt(instr)}")
    return "\n".join(lines)


def check_program(program: MatcherProgram) -> list[str]:
    """Static well-formedness problems: bad jump targets and reads of unwritten registers."""
    problems = []
    code = program.matcher
    n = len(code)

    def targets(instr) -> list[int]:
        if isinstance(instr, Choose):
            return list(instr.branches)
        out = []
        for k in ("succ", "fail"):
            if hasattr(instr, k):
                out.append(getattr(instr, k))
        return out

    for i, instr in enumerate(code):
        for t in targets(instr):
            if not 0 <= t < n:
                problems.append(f"{i}: jump target {t} out of range")
        if isinstance(instr, Choose) and len(instr.branches) < 2:
            problems.append(f"{i}: choose with fewer than two branches")
    # Registers written on every path reaching an instruction (forward dataflow).
    written: list[Optional[frozenset]] = [None] * n
    work = [(0, frozenset({0}))]
    while work:
        pc, regs = work.pop()
        if not 0 <= pc < n:
            continue
        prev = written[pc]
        merged = regs if prev is None else prev & regs
        if prev is not None and merged == prev:
            continue
        written[pc] = merged
        instr = code[pc]
        reads = []
        for k in ("op", "value", "lhs", "rhs", "root"):
            if hasattr(instr, k) and not (k == "value" and isinstance(instr, CheckAttribute)):
                reads.append(getattr(instr, k))
        if isinstance(instr, ApplyConstraint):
            reads += list(instr.args)
        if isinstance(instr, RecordMatch):
            reads += [r for _, r in instr.bindings]
        for r in reads:
            if r not in merged:
                problems.append(f"{pc}: reads register r{r} before it is written")
        out = merged | {instr.dst} if hasattr(instr, "dst") else merged
        for t in targets(instr):
            # The fail edge of a backtracking point does not see its own write.
            work.append((t, merged if isinstance(instr, GetDefiningOp) and t == instr.fail else out))
    return sorted(set(problems))
