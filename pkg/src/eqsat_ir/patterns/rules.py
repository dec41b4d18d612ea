"""Declarative rewrite rules in an s-expression surface syntax.

::

    (rule add-zero (arith.addi ?a (const 0)) ?a)
    (rule pow-mul (math.powf ?a (arith.mulf ?b ?c)) (math.powf (math.powf ?a ?b) ?c)
          :when ((positive ?a) (positive (math.powf ?a ?b))))
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from ..ir.attributes import Attribute
from ..ir.registry import Registry, default_registry

PREDICATES = ("positive", "non_negative", "non_zero", "non_error")


class PatternError(Exception):
    pass


@dataclass(frozen=True)
class PVar:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


@dataclass(frozen=True)
class PConst:
    value: Union[int, float]

    def __str__(self) -> str:
        return f"(const {self.value})"


@dataclass(frozen=True)
class POp:
    name: str
    operands: tuple["Term", ...]
    attrs: tuple[tuple[str, Attribute], ...] = ()

    def __str__(self) -> str:
        inner = " ".join(str(o) for o in self.operands)
        return f"({self.name} {inner})" if inner else f"({self.name})"


Term = Union[PVar, PConst, POp]


@dataclass(frozen=True)
class Constraint:
    predicate: str
    args: tuple[Term, ...]

    @property
    def match_time(self) -> bool:
        """Checkable during matching: every argument is a bound variable."""
        return all(isinstance(a, PVar) for a in self.args)

    def __str__(self) -> str:
        return f"({self.predicate} {' '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Pattern:
    name: str
    lhs: POp
    rhs: Term
    constraints: tuple[Constraint, ...] = ()
    benefit: int = 1

    @property
    def match_constraints(self) -> tuple[Constraint, ...]:
        return tuple(c for c in self.constraints if c.match_time)

    @property
    def rewrite_constraints(self) -> tuple[Constraint, ...]:
        return tuple(c for c in self.constraints if not c.match_time)

    def variables(self) -> list[str]:
        """LHS variables in first-occurrence (pre-order) order."""
        out: list[str] = []
        for t in iter_terms(self.lhs):
            if isinstance(t, PVar) and t.name not in out:
                out.append(t.name)
        return out

    def __str__(self) -> str:
        text = f"(rule {self.name} {self.lhs} {self.rhs}"
        if self.constraints:
            text += " :when (" + " ".join(str(c) for c in self.constraints) + ")"
        if self.benefit != 1:
            text += f" :benefit {self.benefit}"
        return text + ")"


def iter_terms(term: Term) -> Iterator[Term]:
    yield term
    if isinstance(term, POp):
        for o in term.operands:
            yield from iter_terms(o)


# -- s-expression reader ----------------------------------------------------

_SEXP_TOKEN = re.compile(r"\s+|;[^\n]*|(?P<tok>\(|\)|[^\s()]+)")


@dataclass
class _Sym:
    text: str
    line: int


def _read(text: str) -> list:
    stack: list[list] = [[]]
    line = 1
    pos = 0
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        assert m is not None
        tok = m.group("tok")
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise PatternError(f"line {line}: unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        elif tok is not None:
            stack[-1].append(_Sym(tok, line))
        line += m.group().count("\n")
        pos = m.end()
    if len(stack) != 1:
        raise PatternError("unbalanced '(' at end of input")
    return stack[0]


def _number(text: str) -> Optional[Union[int, float]]:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return None


def _term(sexp, where: str) -> Term:
    if isinstance(sexp, _Sym):
        if sexp.text.startswith("?") and len(sexp.text) > 1:
            return PVar(sexp.text[1:])
        raise PatternError(f"{where}: expected term, found '{sexp.text}' (line {sexp.line})")
    if not sexp or not isinstance(sexp[0], _Sym):
        raise PatternError(f"{where}: malformed term")
    head = sexp[0].text
    if head == "const":
        if len(sexp) != 2 or not isinstance(sexp[1], _Sym) or _number(sexp[1].text) is None:
            raise PatternError(f"{where}: (const <number>) expected (line {sexp[0].line})")
        return PConst(_number(sexp[1].text))  # type: ignore[arg-type]
    return POp(head, tuple(_term(s, where) for s in sexp[1:]))


def _check_ops(term: Term, registry: Registry, where: str) -> None:
    for t in iter_terms(term):
        if isinstance(t, POp):
            definition = registry.get(t.name)
            if definition is None:
                raise PatternError(f"{where}: unknown operation {t.name}")
            if not definition.arity_ok(len(t.operands)):
                raise PatternError(
                    f"{where}: arity mismatch for {t.name} ({len(t.operands)} operands)"
                )


def make_pattern(name: str, lhs: Term, rhs: Term, constraints=(), benefit: int = 1,
                 registry: Optional[Registry] = None) -> Pattern:
    """Validate and build a pattern."""
    registry = registry or default_registry()
    if not isinstance(lhs, POp):
        raise PatternError(f"{name}: the root of a pattern must be an operation")
    if benefit < 0:
        raise PatternError(f"{name}: benefit must be non-negative")
    _check_ops(lhs, registry, name)
    _check_ops(rhs, registry, name)
    bound = {t.name for t in iter_terms(lhs) if isinstance(t, PVar)}
    cons = []
    for c in constraints:
        pred = c.predicate.replace("-", "_")
        if pred not in PREDICATES:
            raise PatternError(f"{name}: unknown predicate {c.predicate}")
        for a in c.args:
            _check_ops(a, registry, name)
        cons.append(Constraint(pred, tuple(c.args)))
    for t in [rhs] + [a for c in cons for a in c.args]:
        for sub in iter_terms(t):
            if isinstance(sub, PVar) and sub.name not in bound:
                raise PatternError(f"{name}: unbound variable ?{sub.name}")
    return Pattern(name, lhs, rhs, tuple(cons), benefit)


def parse_patterns(text: str, registry: Optional[Registry] = None) -> list[Pattern]:
    """Parse a rule file into validated patterns."""
    patterns = []
    names = set()
    for form in _read(text):
        if not isinstance(form, list) or not form or not isinstance(form[0], _Sym) \
                or form[0].text != "rule":
            raise PatternError("expected (rule ...) form")
        line = form[0].line
        if len(form) < 4 or not isinstance(form[1], _Sym):
            raise PatternError(f"line {line}: (rule name lhs rhs ...) expected")
        name = form[1].text
        if name in names:
            raise PatternError(f"line {line}: duplicate rule name {name}")
        names.add(name)
        lhs = _term(form[2], name)
        rhs = _term(form[3], name)
        constraints: list[Constraint] = []
        benefit = 1
        rest = form[4:]
        while rest:
            key = rest[0]
            if not isinstance(key, _Sym) or len(rest) < 2:
                raise PatternError(f"{name}: malformed rule options")
            if key.text == ":when":
                conds = rest[1]
                if not isinstance(conds, list):
                    raise PatternError(f"{name}: :when expects a list of conditions")
                for c in conds:
                    if not isinstance(c, list) or not c or not isinstance(c[0], _Sym):
                        raise PatternError(f"{name}: malformed condition")
                    constraints.append(
                        Constraint(c[0].text, tuple(_term(a, name) for a in c[1:]))
                    )
            elif key.text == ":benefit":
                if not isinstance(rest[1], _Sym) or not rest[1].text.isdigit():
                    raise PatternError(f"{name}: :benefit expects a non-negative integer")
                benefit = int(rest[1].text)
            else:
                raise PatternError(f"{name}: unknown option {key.text}")
            rest = rest[2:]
        patterns.append(make_pattern(name, lhs, rhs, constraints, benefit, registry))
    return patterns
