"""Definitions for the func, arith, math, cplx and eqsat dialects."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Optional, Sequence

from ..ir.attributes import (
    FLOAT_TYPES, INT_TYPES, Attribute, FloatAttr, IntegerAttr, StringAttr, wrap_int,
)
from ..ir.core import Operation, OpResult, RegionKind
from ..ir.registry import OpDefinition, Registry, Trait

PURE = frozenset({Trait.PURE})
PURE_COMM = frozenset({Trait.PURE, Trait.COMMUTATIVE})

EQSAT_CLASS_OPS = ("eqsat.eclass", "eqsat.const_eclass")
CPLX = "cplx"


# -- type rules -------------------------------------------------------------

def _same(n: int, family: dict[str, int]) -> Callable[[Sequence[str]], Optional[list[str]]]:
    def rule(types: Sequence[str]) -> Optional[list[str]]:
        if len(types) != n or types[0] not in family or any(t != types[0] for t in types):
            return None
        return [types[0]]
    return rule


def _fixed(inputs: tuple[str, ...], output: str) -> Callable[[Sequence[str]], Optional[list[str]]]:
    def rule(types: Sequence[str]) -> Optional[list[str]]:
        return [output] if tuple(types) == inputs else None
    return rule


def _no_results(types: Sequence[str]) -> Optional[list[str]]:
    return []


def _explicit(types: Sequence[str]) -> Optional[list[str]]:
    return [] if not types else None


def _eclass_rule(types: Sequence[str]) -> Optional[list[str]]:
    if not types or any(t != types[0] for t in types):
        return None
    return [types[0]]


# -- fold hooks -------------------------------------------------------------

def _ints(consts: Sequence[Optional[Attribute]]) -> Optional[list[int]]:
    if any(not isinstance(c, IntegerAttr) for c in consts):
        return None
    return [c.value for c in consts]  # type: ignore[union-attr]


def _floats(consts: Sequence[Optional[Attribute]]) -> Optional[list[float]]:
    out = []
    for c in consts:
        if isinstance(c, FloatAttr):
            v = c.value
        elif isinstance(c, IntegerAttr):
            v = float(c.value)
        else:
            return None
        if not math.isfinite(v):
            return None
        out.append(v)
    return out


def _int_fold(fn: Callable[[int, int, int], Optional[int]]):
    def fold(attrs: dict, consts: Sequence[Optional[Attribute]], result_type: str):
        vals = _ints(consts)
        if vals is None:
            return None
        width = INT_TYPES[result_type]
        out = fn(vals[0], vals[1], width)
        return None if out is None else IntegerAttr(wrap_int(out, width), width)
    return fold


def _shl(a: int, b: int, width: int) -> Optional[int]:
    return a << b if 0 <= b < width else None


def _exact(result: Fraction) -> Optional[float]:
    """The float equal to ``result``, or None when rounding would be needed."""
    try:
        f = float(result)
    except OverflowError:
        return None
    if not math.isfinite(f) or Fraction(f) != result:
        return None
    return f


def _float_fold(fn: Callable[..., Optional[float]]):
    # Only exact results are folded: folding must not change real-valued meaning,
    # and results that would be NaN or infinite are never produced.
    def fold(attrs: dict, consts: Sequence[Optional[Attribute]], result_type: str):
        vals = _floats(consts)
        if vals is None:
            return None
        try:
            out = fn(*vals)
        except (ValueError, ZeroDivisionError, OverflowError):
            return None
        if out is None or not math.isfinite(out):
            return None
        return FloatAttr(out, FLOAT_TYPES[result_type])
    return fold


def _f_add(a: float, b: float) -> Optional[float]:
    return _exact(Fraction(a) + Fraction(b))


def _f_sub(a: float, b: float) -> Optional[float]:
    return _exact(Fraction(a) - Fraction(b))


def _f_mul(a: float, b: float) -> Optional[float]:
    return _exact(Fraction(a) * Fraction(b))


def _f_div(a: float, b: float) -> Optional[float]:
    if b == 0.0:
        return None
    return _exact(Fraction(a) / Fraction(b))


def _f_sqrt(a: float) -> Optional[float]:
    if a < 0:
        return None
    r = math.sqrt(a)
    return r if Fraction(r) * Fraction(r) == Fraction(a) else None


def _f_pow(a: float, b: float) -> Optional[float]:
    if not b.is_integer() or abs(b) > 64 or (a == 0.0 and b < 0):
        return None
    return _exact(Fraction(a) ** int(b))


def _f_log(a: float) -> Optional[float]:
    return 0.0 if a == 1.0 else None


def _f_exp(a: float) -> Optional[float]:
    return 1.0 if a == 0.0 else None


def _f_sin(a: float) -> Optional[float]:
    return a if a == 0.0 else None


def _f_cos(a: float) -> Optional[float]:
    return 1.0 if a == 0.0 else None


def _fold_constant(attrs: dict, consts, result_type: str):
    return attrs.get("value")


# -- verifiers --------------------------------------------------------------

def _verify_constant(op: Operation) -> list[str]:
    value = op.attributes.get("value")
    if not isinstance(value, (IntegerAttr, FloatAttr)):
        return [f"{op.name}: missing numeric 'value' attribute"]
    if value.type != op.results[0].type:
        return [f"{op.name}: value type {value.type} != result type {op.results[0].type}"]
    return []


def _verify_func(op: Operation) -> list[str]:
    if not isinstance(op.attributes.get("sym_name"), StringAttr):
        return ["func.func: missing 'sym_name' attribute"]
    return []


def _in_egraph(op: Operation) -> list[str]:
    parent = op.parent_op
    if parent is None or parent.name != "eqsat.egraph":
        return [f"{op.name}#{op.id}: must be contained within an eqsat.egraph"]
    return []


def _verify_eclass(op: Operation) -> list[str]:
    return _in_egraph(op)


def constant_value_of(value) -> Optional[Attribute]:
    """The constant attribute behind ``value`` if it is produced by a constant op."""
    if isinstance(value, OpResult) and value.op.name == "arith.constant":
        return value.op.attributes.get("value")
    return None


def _verify_const_eclass(op: Operation) -> list[str]:
    diags = _in_egraph(op)
    cst = op.attributes.get("cst")
    if cst is None:
        diags.append(f"eqsat.const_eclass#{op.id}: missing 'cst' attribute")
    elif constant_value_of(op.operands[0]) != cst:
        diags.append(
            f"eqsat.const_eclass#{op.id}: operand is not a constant with value equal to 'cst'"
        )
    return diags


def _verify_egraph(op: Operation) -> list[str]:
    diags = []
    block = op.regions[0].blocks[0] if op.regions and op.regions[0].blocks else None
    if block is None or block.last_op is None or block.last_op.name != "eqsat.yield":
        return ["eqsat.egraph: body must end with eqsat.yield"]
    yielded = block.last_op.operands
    if [v.type for v in yielded] != [r.type for r in op.results]:
        diags.append("eqsat.egraph: result types do not match yield operand types")
    for v in yielded:
        if not (isinstance(v, OpResult) and v.op.name in EQSAT_CLASS_OPS):
            diags.append("eqsat.yield: operands must be eclass or const_eclass results")
    return diags


def _verify_yield(op: Operation) -> list[str]:
    parent = op.parent_op
    if parent is None or parent.name != "eqsat.egraph":
        return ["eqsat.yield: must terminate an eqsat.egraph"]
    return []


def _verify_return(op: Operation) -> list[str]:
    parent = op.parent_op
    if parent is None or parent.name != "func.func":
        return ["func.return: must terminate a func.func"]
    return []


# -- registration -----------------------------------------------------------

def register_builtin_dialects(registry: Registry) -> None:
    """Register every operation shipped with the framework."""
    defs: list[OpDefinition] = [
        OpDefinition("builtin.module", 0, 0, _no_results, region_kinds=(RegionKind.GRAPH,)),
        OpDefinition("func.func", 0, 0, _no_results, verifier=_verify_func,
                     region_kinds=(RegionKind.CFG,), terminator="func.return",
                     required_attrs=("sym_name",)),
        OpDefinition("func.return", 0, None, _no_results, frozenset({Trait.TERMINATOR}),
                     verifier=_verify_return),
        OpDefinition("func.call", 0, None, _no_results, required_attrs=("callee",),
                     explicit_results=True),
        OpDefinition("arith.constant", 0, 0, _explicit,
                     frozenset({Trait.PURE, Trait.CONSTANT}),
                     verifier=_verify_constant, fold=_fold_constant, required_attrs=("value",)),
    ]
    int_bin = {
        "arith.addi": (PURE_COMM, _int_fold(lambda a, b, w: a + b)),
        "arith.subi": (PURE, _int_fold(lambda a, b, w: a - b)),
        "arith.muli": (PURE_COMM, _int_fold(lambda a, b, w: a * b)),
        "arith.shli": (PURE, _int_fold(_shl)),
    }
    for name, (traits, fold) in int_bin.items():
        defs.append(OpDefinition(name, 2, 2, _same(2, INT_TYPES), traits, fold=fold))
    float_bin = {
        "arith.addf": (PURE_COMM, _f_add),
        "arith.subf": (PURE, _f_sub),
        "arith.mulf": (PURE_COMM, _f_mul),
        "arith.divf": (PURE, _f_div),
        "math.powf": (PURE, _f_pow),
    }
    for name, (traits, fn) in float_bin.items():
        defs.append(OpDefinition(name, 2, 2, _same(2, FLOAT_TYPES), traits, fold=_float_fold(fn)))
    float_un = {
        "arith.negf": lambda a: -a,
        "math.sqrt": _f_sqrt,
        "math.log": _f_log,
        "math.exp": _f_exp,
        "math.sin": _f_sin,
        "math.cos": _f_cos,
        "math.absf": abs,
    }
    for name, fn in float_un.items():
        defs.append(OpDefinition(name, 1, 1, _same(1, FLOAT_TYPES), PURE, fold=_float_fold(fn)))
    defs += [
        OpDefinition("cplx.create", 2, 2, _fixed(("f64", "f64"), CPLX), PURE),
        OpDefinition("cplx.re", 1, 1, _fixed((CPLX,), "f64"), PURE),
        OpDefinition("cplx.im", 1, 1, _fixed((CPLX,), "f64"), PURE),
        OpDefinition("cplx.div", 2, 2, _fixed((CPLX, CPLX), CPLX), PURE),
        OpDefinition("cplx.abs", 1, 1, _fixed((CPLX,), "f64"), PURE),
        OpDefinition("eqsat.eclass", 1, None, _eclass_rule, PURE, verifier=_verify_eclass),
        OpDefinition("eqsat.const_eclass", 1, 1, _eclass_rule, PURE,
                     verifier=_verify_const_eclass, required_attrs=("cst",)),
        OpDefinition("eqsat.egraph", 0, 0, _explicit, PURE, verifier=_verify_egraph,
                     explicit_results=True,
                     region_kinds=(RegionKind.GRAPH,), terminator="eqsat.yield"),
        OpDefinition("eqsat.yield", 0, None, _no_results,
                     frozenset({Trait.TERMINATOR, Trait.PURE}), verifier=_verify_yield),
    ]
    for d in defs:
        registry.register(d)


def fold(op: Operation, constant_operands: Sequence[Optional[Attribute]], registry: Registry) -> Optional[Attribute]:
    """Fold ``op`` given a constant attribute (or None) per operand."""
    definition = registry.get(op.name)
    if definition is None or definition.fold is None or len(op.results) != 1:
        return None
    return fold_values(definition, op.attributes, constant_operands, op.results[0].type)


def fold_values(definition: OpDefinition, attributes: dict,
                constant_operands: Sequence[Optional[Attribute]], result_type: str) -> Optional[Attribute]:
    if definition.fold is None:
        return None
    if any(c is None for c in constant_operands):
        return None
    return definition.fold(attributes, list(constant_operands), result_type)
