"""FPCore subset: parsing, printing and conversion to and from IR functions.

Supported grammar::

    (FPCore [name] (arg ...) [:prop value]... body)
    body := number | symbol | (op body ...)

Operators are ``+ - * / sqrt pow log exp sin cos fabs neg``; unary ``-`` is
negation. ``:pre`` conjunctions of comparisons between an argument and
constants give each argument a closed sampling range.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from ..ir.attributes import FloatAttr, StringAttr
from ..ir.builder import Builder
from ..ir.core import Block, BlockArgument, Operation, OpResult, Region, RegionKind, Value

Expr = Union[float, str, tuple]

DEFAULT_RANGE = (-1e9, 1e9)
MAX_FINITE = 1.7976931348623157e308

OPERATORS = {
    "+": "arith.addf",
    "-": "arith.subf",
    "*": "arith.mulf",
    "/": "arith.divf",
    "neg": "arith.negf",
    "sqrt": "math.sqrt",
    "pow": "math.powf",
    "log": "math.log",
    "exp": "math.exp",
    "sin": "math.sin",
    "cos": "math.cos",
    "fabs": "math.absf",
}
OP_TO_FPCORE = {v: k for k, v in OPERATORS.items()}
ARITY = {"neg": 1, "sqrt": 1, "log": 1, "exp": 1, "sin": 1, "cos": 1, "fabs": 1,
         "+": 2, "-": 2, "*": 2, "/": 2, "pow": 2}
NAMED_CONSTANTS = {"PI": math.pi, "E": math.e, "INFINITY": math.inf, "NAN": math.nan}


class FPCoreError(Exception):
    pass


@dataclass
class FPCore:
    args: list[str]
    body: Expr
    name: Optional[str] = None
    pre: Optional[Expr] = None
    props: dict[str, Expr] = field(default_factory=dict)

    def ranges(self) -> dict[str, tuple[float, float]]:
        """Closed range per argument implied by ``:pre`` (default when unconstrained)."""
        bounds = {a: [-math.inf, math.inf] for a in self.args}
        if self.pre is not None:
            _apply_pre(self.pre, bounds)
        out = {}
        for a, (lo, hi) in bounds.items():
            if lo > hi:
                raise FPCoreError(f"precondition leaves no values for {a}")
            # An open side takes the default bound, or the widest finite one
            # when the stated bound lies past the default.
            if lo == -math.inf:
                lo = DEFAULT_RANGE[0] if hi >= DEFAULT_RANGE[0] else -MAX_FINITE
            if hi == math.inf:
                hi = DEFAULT_RANGE[1] if lo <= DEFAULT_RANGE[1] else MAX_FINITE
            out[a] = (lo, hi)
        return out


# -- reading -------------------------------------------------------------

_TOKEN = re.compile(r'\s+|;[^\n]*|(?P<tok>\(|\)|\[|\]|"(?:[^"\\]|\\.)*"|[^\s()\[\]"]+)')


@dataclass(frozen=True)
class _Str:
    value: str


def _read_all(text: str) -> list:
    stack: list[list] = [[]]
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FPCoreError(f"unexpected character {text[pos]!r}")
        tok = m.group("tok")
        pos = m.end()
        if tok is None:
            continue
        if tok in "([":
            stack.append([])
        elif tok in ")]":
            if len(stack) == 1:
                raise FPCoreError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        elif tok.startswith('"'):
            stack[-1].append(_Str(tok[1:-1]))
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise FPCoreError("unbalanced '('")
    return stack[0]


def parse_number(tok: str) -> Optional[float]:
    if tok in NAMED_CONSTANTS:
        return NAMED_CONSTANTS[tok]
    try:
        if "/" in tok:
            return float(Fraction(tok))
        return float(tok) if tok[0] in "+-.0123456789" else None
    except (ValueError, ZeroDivisionError):
        return None


def _expr(sexp, args: set[str]) -> Expr:
    if isinstance(sexp, _Str):
        raise FPCoreError(f"string {sexp.value!r} is not an expression")
    if isinstance(sexp, str):
        num = parse_number(sexp)
        if num is not None:
            return num
        if sexp not in args:
            raise FPCoreError(f"unbound variable {sexp}")
        return sexp
    if not sexp or not isinstance(sexp[0], str):
        raise FPCoreError(f"malformed expression {sexp!r}")
    head, rest = sexp[0], sexp[1:]
    if head == "-" and len(rest) == 1:
        head = "neg"
    if head not in OPERATORS:
        raise FPCoreError(f"unsupported operator {head}")
    if len(rest) != ARITY[head]:
        raise FPCoreError(f"{head} takes {ARITY[head]} operands, got {len(rest)}")
    return (head,) + tuple(_expr(x, args) for x in rest)


def _plain(sexp):
    if isinstance(sexp, _Str):
        return sexp
    if isinstance(sexp, list):
        return tuple(_plain(x) for x in sexp)
    num = parse_number(sexp)
    return num if num is not None else sexp


def parse_fpcore(text: str) -> FPCore:
    forms = _read_all(text)
    if len(forms) != 1:
        raise FPCoreError(f"expected one FPCore form, found {len(forms)}")
    form = forms[0]
    if not isinstance(form, list) or not form or form[0] != "FPCore":
        raise FPCoreError("expected (FPCore ...)")
    rest = form[1:]
    name = None
    if rest and isinstance(rest[0], str):
        name, rest = rest[0], rest[1:]
    if not rest or not isinstance(rest[0], list):
        raise FPCoreError("missing argument list")
    args = rest[0]
    if not all(isinstance(a, str) and parse_number(a) is None for a in args):
        raise FPCoreError("arguments must be symbols")
    if len(set(args)) != len(args):
        raise FPCoreError("duplicate argument name")
    rest = rest[1:]
    props: dict[str, Expr] = {}
    while len(rest) >= 2 and isinstance(rest[0], str) and rest[0].startswith(":"):
        props[rest[0][1:]] = _plain(rest[1])
        rest = rest[2:]
    if len(rest) != 1:
        raise FPCoreError("expected exactly one body expression")
    body = _expr(rest[0], set(args))
    pre = props.pop("pre", None)
    if isinstance(props.get("name"), _Str):
        name = props.pop("name").value  # type: ignore[union-attr]
    core = FPCore(list(args), body, name, pre, props)
    core.ranges()  # rejects unsupported preconditions early
    return core


_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "=="}


def _apply_pre(pre, bounds: dict[str, list[float]]) -> None:
    if pre is True or pre == "TRUE":
        return
    if not isinstance(pre, tuple) or not pre:
        raise FPCoreError(f"unsupported precondition {pre!r}")
    head, rest = pre[0], list(pre[1:])
    if head == "and":
        for p in rest:
            _apply_pre(p, bounds)
        return
    if head not in _FLIP or len(rest) < 2:
        raise FPCoreError(f"unsupported precondition {pre!r}")
    # Chained comparisons a < b < c are pairwise.
    for left, right in zip(rest, rest[1:]):
        op = head
        if isinstance(right, str) and isinstance(left, float):
            left, right, op = right, left, _FLIP[op]
        if not (isinstance(left, str) and left in bounds and isinstance(right, float)):
            raise FPCoreError(f"unsupported precondition {pre!r}")
        lo, hi = bounds[left]
        if op in (">", ">="):
            c = math.nextafter(right, math.inf) if op == ">" else right
            bounds[left] = [max(lo, c), hi]
        elif op in ("<", "<="):
            c = math.nextafter(right, -math.inf) if op == "<" else right
            bounds[left] = [lo, min(hi, c)]
        else:
            bounds[left] = [max(lo, right), min(hi, right)]


# -- printing ------------------------------------------------------------

def format_number(x: float) -> str:
    if math.isnan(x):
        return "NAN"
    if math.isinf(x):
        return "INFINITY" if x > 0 else "(- INFINITY)"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def format_expr(e) -> str:
    if isinstance(e, _Str):
        return '"' + e.value + '"'
    if isinstance(e, float):
        return format_number(e)
    if isinstance(e, str):
        return e
    if isinstance(e, tuple):
        head = e[0] if e else None
        if head == "neg":
            return f"(- {format_expr(e[1])})"
        return "(" + " ".join(format_expr(x) for x in e) + ")"
    if isinstance(e, bool):
        return "TRUE" if e else "FALSE"
    return str(e)


def format_fpcore(core: FPCore) -> str:
    parts = ["FPCore"]
    if core.name is not None:
        parts.append(core.name)
    parts.append("(" + " ".join(core.args) + ")")
    if core.pre is not None:
        parts.append(":pre " + format_expr(core.pre))
    for key, value in core.props.items():
        parts.append(f":{key} {format_expr(value)}")
    parts.append(format_expr(core.body))
    return "(" + " ".join(parts) + ")"


# -- IR conversion ---------------------------------------------------------

def to_function(core: FPCore, registry=None) -> Operation:
    """A ``builtin.module`` holding one f64 ``func.func`` that computes ``core``."""
    module_block = Block()
    module = Operation("builtin.module", regions=[Region(RegionKind.GRAPH, [module_block])])
    body = Block(["f64"] * len(core.args))
    for a, name in zip(body.args, core.args):
        a.name_hint = name
    func = Operation("func.func", attributes={"sym_name": StringAttr(core.name or "main")},
                     regions=[Region(RegionKind.CFG, [body])])
    module_block.append(func)
    b = Builder(body, registry)
    env = dict(zip(core.args, body.args))
    consts: dict[FloatAttr, Value] = {}

    def emit(e) -> Value:
        if isinstance(e, str):
            return env[e]
        if isinstance(e, float):
            attr = FloatAttr(e)
            if attr not in consts:
                consts[attr] = b.build("arith.constant", [], {"value": attr}).results[0]
            return consts[attr]
        operands = [emit(x) for x in e[1:]]
        return b.build(OPERATORS[e[0]], operands).results[0]

    result = emit(core.body)
    b.build("func.return", [result])
    return module


def function_of(module: Operation) -> Operation:
    for op in module.walk():
        if op.name == "func.func":
            return op
    raise FPCoreError("no func.func in module")


def expr_of_value(value: Value, names: dict[Value, str]) -> Expr:
    """Rebuild the expression tree rooted at ``value`` (shared values are duplicated)."""
    memo: dict[Value, Expr] = {}

    def go(v: Value) -> Expr:
        if v in memo:
            return memo[v]
        if isinstance(v, BlockArgument):
            out: Expr = names[v]
        else:
            assert isinstance(v, OpResult)
            op = v.op
            if op.name == "arith.constant":
                out = float(op.attributes["value"].value)  # type: ignore[attr-defined]
            elif op.name in ("eqsat.eclass", "eqsat.const_eclass") and len(op.operands) == 1:
                out = go(op.operands[0])
            elif op.name in OP_TO_FPCORE:
                out = (OP_TO_FPCORE[op.name],) + tuple(go(o) for o in op.operands)
            else:
                raise FPCoreError(f"{op.name} has no FPCore equivalent")
        memo[v] = out
        return out

    return go(value)


def function_to_fpcore(func: Operation, template: Optional[FPCore] = None) -> FPCore:
    """Read back a straight-line f64 function as an FPCore expression."""
    block = func.regions[0].block
    ret = block.last_op
    if ret is None or ret.name != "func.return" or len(ret.operands) != 1:
        raise FPCoreError("expected a function returning one value")
    if template is not None:
        arg_names = list(template.args)
    else:
        arg_names = [a.name_hint or f"x{i}" for i, a in enumerate(block.args)]
    names = dict(zip(block.args, arg_names))
    body = expr_of_value(ret.operands[0], names)
    if template is None:
        return FPCore(arg_names, body, func.attributes["sym_name"].value)  # type: ignore[attr-defined]
    return FPCore(arg_names, body, template.name, template.pre, dict(template.props))


def print_fpcore(func: Operation, template: Optional[FPCore] = None) -> str:
    return format_fpcore(function_to_fpcore(func, template))
