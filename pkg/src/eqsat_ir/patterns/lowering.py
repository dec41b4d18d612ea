"""Lower patterns to matcher programs.

Each pattern is first linearized into a sequence of *steps*, hashable keys of
the form ``(kind, position, ...)`` where a position names an operation by its
operand path from the root (``()`` is the root, ``(1, 0)`` is operand 0 of
the op defining the root's operand 1). Steps from several patterns are merged
in a trie so that shared prefixes are emitted once; a ``Choose`` is emitted
wherever the trie branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .program import (
    ApplyConstraint, AreEqual, CheckAttribute, CheckOperandCount, CheckOperationName, Choose,
    CreateConstant, CreateOp, Finalize, GetDefiningOp, GetOperand, GetResult, Instruction,
    MatcherProgram, RecordMatch, Replace, Rewriter,
)
from .rules import Constraint, Pattern, PConst, POp, PVar, Term

_PENDING = -1  # jump target patched to the shared Finalize

Path = tuple[int, ...]


class LoweringError(Exception):
    pass


def _value_pos(path: Path) -> tuple[Path, int]:
    return (path[:-1], path[-1])


def linearize(pattern: Pattern, eager: bool = True) -> list[tuple]:
    """Matching steps for ``pattern``.

    With ``eager`` every semantic check on an operation is emitted right after
    the operation is reached; otherwise all structural navigation comes first
    and semantic checks follow, the order a naive lowering produces.
    """
    if not isinstance(pattern.lhs, POp):
        raise LoweringError(f"{pattern.name}: the root of a pattern must be an operation")
    first: dict[str, tuple[Path, int]] = {}
    structural: list[tuple] = []
    semantic: list[tuple] = []
    emitted: set[Constraint] = set()

    def ready_constraints(out: list) -> None:
        for c in pattern.match_constraints:
            if c not in emitted and all(a.name in first for a in c.args):  # type: ignore[union-attr]
                emitted.add(c)
                out.append(("cons", c.predicate, tuple(first[a.name] for a in c.args)))  # type: ignore[union-attr]

    def visit(node: Term, path: Path) -> None:
        checks = structural if eager else semantic
        if isinstance(node, PConst):
            checks.append(("name", path, "arith.constant"))
            checks.append(("attr", path, "value", node.value))
            return
        assert isinstance(node, POp)
        checks.append(("name", path, node.name))
        structural.append(("count", path, len(node.operands)))
        for key, attr in node.attrs:
            checks.append(("attr", path, key, attr))
        for i, sub in enumerate(node.operands):
            if isinstance(sub, PVar):
                pos = (path, i)
                if sub.name in first:
                    checks.append(("eq", first[sub.name], pos))
                else:
                    first[sub.name] = pos
        ready_constraints(checks)
        for i, sub in enumerate(node.operands):
            if not isinstance(sub, PVar):
                structural.append(("gdo", path + (i,)))
                visit(sub, path + (i,))

    visit(pattern.lhs, ())
    ready_constraints(semantic)
    return structural + semantic


@dataclass
class _TrieNode:
    children: dict = field(default_factory=dict)


class _Emitter:
    def __init__(self, patterns: list[Pattern]) -> None:
        self.patterns = patterns
        self.code: list[Instruction] = []
        self.registers: dict[tuple, int] = {("op", ()): 0}

    def reg(self, key: tuple) -> int:
        if key not in self.registers:
            self.registers[key] = len(self.registers)
        return self.registers[key]

    def _next(self) -> int:
        return len(self.code) + 1

    def load_value(self, pos: tuple[Path, int], loaded: set) -> int:
        key = ("val", pos)
        r = self.reg(key)
        if key not in loaded:
            path, index = pos
            self.code.append(GetOperand(r, self.reg(("op", path)), index, self._next()))
            loaded.add(key)
        return r

    def emit(self, node: _TrieNode, loaded: set) -> None:
        items = list(node.children.items())
        if len(items) == 1:
            self.emit_step(items[0][0], items[0][1], loaded)
            return
        at = len(self.code)
        self.code.append(Choose(()))
        starts = []
        for step, child in items:
            starts.append(len(self.code))
            self.emit_step(step, child, set(loaded))
        self.code[at] = Choose(tuple(starts))

    def emit_step(self, step: tuple, child: _TrieNode, loaded: set) -> None:
        kind = step[0]
        if kind == "record":
            _, index, bindings = step
            regs = tuple((name, self.load_value(pos, loaded)) for name, pos in bindings)
            root = self.reg(("res",))
            if ("res",) not in loaded:
                self.code.append(GetResult(root, 0, 0, self._next()))
                loaded.add(("res",))
            self.code.append(RecordMatch(index, regs, root, _PENDING))
            return
        if kind == "gdo":
            path = step[1]
            val = self.load_value(_value_pos(path), loaded)
            self.code.append(GetDefiningOp(self.reg(("op", path)), val, self._next(), _PENDING))
        elif kind == "name":
            self.code.append(CheckOperationName(self.reg(("op", step[1])), step[2], self._next(), _PENDING))
        elif kind == "count":
            self.code.append(CheckOperandCount(self.reg(("op", step[1])), step[2], self._next(), _PENDING))
        elif kind == "attr":
            self.code.append(CheckAttribute(self.reg(("op", step[1])), step[2], step[3], self._next(), _PENDING))
        elif kind == "eq":
            a = self.load_value(step[1], loaded)
            b = self.load_value(step[2], loaded)
            self.code.append(AreEqual(a, b, self._next(), _PENDING))
        elif kind == "cons":
            args = tuple(self.load_value(pos, loaded) for pos in step[2])
            self.code.append(ApplyConstraint(step[1], args, self._next(), _PENDING))
        else:
            raise LoweringError(f"unknown step {step!r}")
        self.emit(child, loaded)

    def finish(self) -> tuple[Instruction, ...]:
        final = len(self.code)
        self.code.append(Finalize())
        out = []
        for instr in self.code:
            if getattr(instr, "fail", None) == _PENDING:
                instr = replace(instr, fail=final)
            if getattr(instr, "succ", None) == _PENDING:
                instr = replace(instr, succ=final)
            out.append(instr)
        return tuple(out)


def _record_step(index: int, pattern: Pattern, steps: list[tuple]) -> tuple:
    first: dict[str, tuple[Path, int]] = {}

    def scan(node: Term, path: Path) -> None:
        if isinstance(node, POp):
            for i, sub in enumerate(node.operands):
                if isinstance(sub, PVar):
                    first.setdefault(sub.name, (path, i))
            for i, sub in enumerate(node.operands):
                if not isinstance(sub, PVar):
                    scan(sub, path + (i,))

    scan(pattern.lhs, ())
    return ("record", index, tuple((v, first[v]) for v in pattern.variables()))


def compile_rewriter(pattern: Pattern) -> Rewriter:
    """Rewrite section: build constraint arguments, check them, build the RHS, replace."""
    variables = tuple(pattern.variables())
    regs = {v: i for i, v in enumerate(variables)}
    root = len(variables)
    code: list[Instruction] = []
    counter = [root + 1]

    def fresh() -> int:
        counter[0] += 1
        return counter[0] - 1

    built: dict[Term, int] = {}

    def build(term: Term, hint: int) -> int:
        if isinstance(term, PVar):
            return regs[term.name]
        if isinstance(term, POp) and term in built:
            return built[term]
        if isinstance(term, PConst):
            dst = fresh()
            code.append(CreateConstant(dst, term.value, hint, len(code) + 1))
            return dst
        operand_regs: list[Optional[int]] = [None] * len(term.operands)
        for i, sub in enumerate(term.operands):
            if not isinstance(sub, PConst):
                operand_regs[i] = build(sub, hint)
        sibling = next((r for r in operand_regs if r is not None), hint)
        for i, sub in enumerate(term.operands):
            if isinstance(sub, PConst):
                operand_regs[i] = build(sub, sibling)
        dst = fresh()
        code.append(CreateOp(dst, term.name, tuple(operand_regs), len(code) + 1))  # type: ignore[arg-type]
        built[term] = dst
        return dst

    for c in pattern.rewrite_constraints:
        args = tuple(build(a, root) for a in c.args)
        code.append(ApplyConstraint(c.predicate, args, len(code) + 1, -1, rewrite=True))
    value = build(pattern.rhs, root)
    code.append(Replace(root, value))
    return Rewriter(variables, tuple(code))


def _lower(patterns: list[Pattern], eager: bool) -> MatcherProgram:
    if not patterns:
        raise LoweringError("at least one pattern is required")
    trie = _TrieNode()
    for index, p in enumerate(patterns):
        steps = linearize(p, eager)
        steps.append(_record_step(index, p, steps))
        node = trie
        for step in steps:
            node = node.children.setdefault(step, _TrieNode())
    emitter = _Emitter(patterns)
    emitter.emit(trie, {("op", ())})
    matcher = emitter.finish()
    rewriters = tuple(compile_rewriter(p) for p in patterns)
    return MatcherProgram(tuple(patterns), matcher, rewriters, len(emitter.registers))


def lower_single(pattern: Pattern, eager: bool = True) -> MatcherProgram:
    """Program matching exactly ``pattern`` rooted at a candidate operation."""
    return _lower([pattern], eager)


def lower_combined(patterns: Iterable[Pattern]) -> MatcherProgram:
    """One fused program for all ``patterns`` with shared prefixes and eager checks."""
    return _lower(list(patterns), eager=True)


def lower_individual(patterns: Iterable[Pattern]) -> list[MatcherProgram]:
    return [lower_single(p) for p in patterns]
