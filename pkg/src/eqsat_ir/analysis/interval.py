"""Interval domain over IEEE doubles (and integers) with sound outward rounding.

An :class:`Interval` encloses every value an SSA value may take: the reals in
``[lo, hi]`` plus NaN when ``may_be_nan`` is set. ``lo > hi`` means the real
part is empty; together with ``may_be_nan=False`` that is bottom.

Basic operations (+, -, *, /, sqrt) are correctly rounded in IEEE arithmetic,
so their bounds are computed exactly with rationals and rounded outward to the
nearest double. Library functions get a two-ulp margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

from ..ir.attributes import FLOAT_TYPES, INT_TYPES, Attribute, FloatAttr, IntegerAttr

INF = math.inf
Number = Union[int, float]

LIBM_ULPS = 2


@dataclass(frozen=True)
class Interval:
    lo: Number
    hi: Number
    may_be_nan: bool = False

    @property
    def is_bottom(self) -> bool:
        return self.lo > self.hi and not self.may_be_nan

    @property
    def empty_reals(self) -> bool:
        return self.lo > self.hi

    def contains(self, x: Number) -> bool:
        if isinstance(x, float) and math.isnan(x):
            return self.may_be_nan
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def __str__(self) -> str:
        if self.is_bottom:
            return "bottom"
        return f"[{self.lo},{self.hi}] nan={str(self.may_be_nan).lower()}"


BOTTOM = Interval(INF, -INF, False)
NAN_ONLY = Interval(INF, -INF, True)
FLOAT_TOP = Interval(-INF, INF, True)


def top_for(type_: str) -> Interval:
    if type_ in INT_TYPES:
        width = INT_TYPES[type_]
        if width == 1:
            return Interval(0, 1)
        return Interval(-(1 << (width - 1)), (1 << (width - 1)) - 1)
    return FLOAT_TOP


def point(value: Number) -> Interval:
    if isinstance(value, float) and math.isnan(value):
        return NAN_ONLY
    return Interval(value, value)


def meet(a: Interval, b: Interval) -> Interval:
    """Intersection: both enclosures hold for the same value."""
    lo = max(a.lo, b.lo)
    hi = min(a.hi, b.hi)
    nan = a.may_be_nan and b.may_be_nan
    if lo > hi:
        return NAN_ONLY if nan else BOTTOM
    return Interval(lo, hi, nan)


def hull(a: Interval, b: Interval) -> Interval:
    if a.empty_reals:
        return Interval(b.lo, b.hi, a.may_be_nan or b.may_be_nan)
    if b.empty_reals:
        return Interval(a.lo, a.hi, a.may_be_nan or b.may_be_nan)
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi), a.may_be_nan or b.may_be_nan)


def leq(a: Interval, b: Interval) -> bool:
    """``a`` is at least as precise as ``b`` (subset order)."""
    if a.may_be_nan and not b.may_be_nan:
        return False
    if a.empty_reals:
        return True
    return b.lo <= a.lo and a.hi <= b.hi


# -- outward rounding ---------------------------------------------------------

def _widen(lo: float, hi: float, ulps: int = LIBM_ULPS) -> tuple[float, float]:
    for _ in range(ulps):
        if math.isfinite(lo):
            lo = math.nextafter(lo, -INF)
        if math.isfinite(hi):
            hi = math.nextafter(hi, INF)
    return lo, hi


MAX_FLOAT = 1.7976931348623157e308


def _enclose(r: float, num: int, den: int) -> tuple[float, float]:
    """Tightest doubles around the exact value ``num/den`` (den > 0), given its rounding ``r``."""
    if math.isinf(r):
        return (MAX_FLOAT, INF) if r > 0 else (-INF, -MAX_FLOAT)
    rn, rd = r.as_integer_ratio()
    diff = rn * den - num * rd  # sign of r - exact
    lo = r if diff <= 0 else math.nextafter(r, -INF)
    hi = r if diff >= 0 else math.nextafter(r, INF)
    return lo, hi


def _ext_binary(x: float, y: float, op: str) -> Optional[tuple[float, float]]:
    """Doubles enclosing the exact ``x op y``, or None when the result is NaN."""
    if math.isfinite(x) and math.isfinite(y):
        xn, xd = x.as_integer_ratio()
        yn, yd = y.as_integer_ratio()
        if op == "+":
            num, den = xn * yd + yn * xd, xd * yd
            r = x + y
        elif op == "*":
            num, den = xn * yn, xd * yd
            r = x * y
        else:
            if y == 0:
                if x == 0:
                    return None
                r = INF if (x > 0) == (math.copysign(1.0, y) > 0) else -INF
                return r, r
            num, den = xn * yd, xd * yn
            if den < 0:
                num, den = -num, -den
            r = x / y
        return _enclose(r, num, den)
    try:
        if op == "+":
            r = x + y
        elif op == "*":
            r = x * y
        else:
            r = x / y
    except ZeroDivisionError:
        r = math.copysign(INF, x) * math.copysign(1.0, y) if x != 0 else math.nan
    if math.isnan(r):
        return None
    return r, r


def _float_corner_op(a: Interval, b: Interval, op: str) -> Interval:
    if a.empty_reals or b.empty_reals:
        return NAN_ONLY if (a.may_be_nan or b.may_be_nan) else BOTTOM
    nan = a.may_be_nan or b.may_be_nan
    los, his = [], []
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            r = _ext_binary(float(x), float(y), op)
            if r is None:
                nan = True
            else:
                los.append(r[0])
                his.append(r[1])
    if op == "+":
        if (a.hi == INF and b.lo == -INF) or (a.lo == -INF and b.hi == INF):
            nan = True
    elif op == "*":
        if (a.contains_zero() and (b.lo == -INF or b.hi == INF)) or (
                b.contains_zero() and (a.lo == -INF or a.hi == INF)):
            nan = True
            los.append(0.0)
            his.append(0.0)
    elif b.lo == -INF or b.hi == INF:
        # A finite or unbounded dividend over an infinite divisor reaches zero
        # even when every corner is inf/inf.
        if not (a.lo == a.hi and math.isinf(a.lo)):
            los.append(0.0)
            his.append(0.0)
    if not los:
        return NAN_ONLY
    return Interval(min(los), max(his), nan)


def _add(a: Interval, b: Interval) -> Interval:
    return _float_corner_op(a, b, "+")


def _neg(a: Interval) -> Interval:
    if a.empty_reals:
        return a
    return Interval(-a.hi, -a.lo, a.may_be_nan)


def _sub(a: Interval, b: Interval) -> Interval:
    return _add(a, _neg(b))


def _mul(a: Interval, b: Interval) -> Interval:
    return _float_corner_op(a, b, "*")


def _div(a: Interval, b: Interval) -> Interval:
    if a.empty_reals or b.empty_reals:
        return NAN_ONLY if (a.may_be_nan or b.may_be_nan) else BOTTOM
    if b.contains_zero():
        # Signed zeros make the sign of the pole unknowable from the interval.
        nan = a.may_be_nan or b.may_be_nan or a.contains_zero() or (
            (a.lo == -INF or a.hi == INF) and (b.lo == -INF or b.hi == INF))
        return Interval(-INF, INF, nan)
    out = _float_corner_op(a, b, "/")
    if (a.lo == -INF or a.hi == INF) and (b.lo == -INF or b.hi == INF):
        out = Interval(out.lo, out.hi, True)
    return out


def _abs(a: Interval) -> Interval:
    if a.empty_reals:
        return a
    if a.lo >= 0:
        return Interval(a.lo, a.hi, a.may_be_nan)
    if a.hi <= 0:
        return Interval(-a.hi, -a.lo, a.may_be_nan)
    return Interval(0.0, max(-a.lo, a.hi), a.may_be_nan)


def _sqrt(a: Interval) -> Interval:
    if a.empty_reals:
        return a
    nan = a.may_be_nan or a.lo < 0
    if a.hi < 0:
        return NAN_ONLY
    lo = max(a.lo, 0.0)

    def bound(x: float, lower: bool) -> float:
        if math.isinf(x):
            return INF
        r = math.sqrt(x)
        rn, rd = r.as_integer_ratio()
        xn, xd = x.as_integer_ratio()
        diff = rn * rn * xd - xn * rd * rd  # sign of r*r - x
        if diff == 0:
            return r
        if lower:
            return r if diff < 0 else math.nextafter(r, -INF)
        return r if diff > 0 else math.nextafter(r, INF)

    return Interval(bound(float(lo), True), bound(float(a.hi), False), nan)


def _safe(fn: Callable[[float], float], x: float) -> float:
    try:
        return fn(x)
    except OverflowError:
        return INF
    except ValueError:
        return math.nan


def _log(a: Interval) -> Interval:
    if a.empty_reals:
        return a
    if a.hi < 0:
        return NAN_ONLY
    nan = a.may_be_nan or a.lo < 0
    lo = -INF if a.lo <= 0 else _safe(math.log, float(a.lo))
    hi = -INF if a.hi == 0 else _safe(math.log, float(a.hi))
    lo, hi = _widen(lo, hi)
    return Interval(lo, hi, nan)


def _exp(a: Interval) -> Interval:
    if a.empty_reals:
        return a
    lo, hi = _widen(_safe(math.exp, float(a.lo)), _safe(math.exp, float(a.hi)))
    return Interval(max(lo, 0.0), hi, a.may_be_nan)


def _trig(a: Interval, fn: Callable[[float], float], peak_phase: float) -> Interval:
    """sin/cos: ``peak_phase`` is where ``fn`` reaches +1 (mod 2*pi)."""
    if a.empty_reals:
        return a
    nan = a.may_be_nan or math.isinf(a.lo) or math.isinf(a.hi)
    if math.isinf(a.lo) or math.isinf(a.hi) or a.hi - a.lo >= 2 * math.pi or max(abs(a.lo), abs(a.hi)) > 1e8:
        return Interval(-1.0, 1.0, nan)
    lo_v, hi_v = _safe(fn, float(a.lo)), _safe(fn, float(a.hi))
    lo, hi = min(lo_v, hi_v), max(lo_v, hi_v)
    slack = 1e-9 * (1 + max(abs(a.lo), abs(a.hi)))

    def crosses(phase: float) -> bool:
        k = math.ceil((a.lo - slack - phase) / (2 * math.pi))
        return phase + 2 * math.pi * k <= a.hi + slack

    if crosses(peak_phase):
        hi = 1.0
    if crosses(peak_phase + math.pi):
        lo = -1.0
    lo, hi = _widen(lo, hi)
    return Interval(max(lo, -1.0), min(hi, 1.0), nan)


def _is_int_point(b: Interval) -> bool:
    return b.lo == b.hi and math.isfinite(b.lo) and float(b.lo).is_integer()


def _pow(a: Interval, b: Interval) -> Interval:
    if a.empty_reals or b.empty_reals:
        return NAN_ONLY if (a.may_be_nan or b.may_be_nan) else BOTTOM
    nan = a.may_be_nan or b.may_be_nan

    def p(x: float, y: float) -> float:
        try:
            return math.pow(x, y)
        except OverflowError:
            return INF if x > 0 or float(y).is_integer() and int(y) % 2 == 0 else math.copysign(INF, x)
        except ValueError:
            # pow(0, negative) is a pole.
            return INF if x == 0 else math.nan

    xs = [float(a.lo), float(a.hi)]
    if a.lo < 0:
        if not _is_int_point(b):
            return Interval(-INF, INF, True)
        n = int(b.lo)
        if a.contains_zero():
            xs.append(0.0)
        if n < 0 and a.contains_zero():
            return Interval(-INF, INF, nan)
        vals = [p(x, float(n)) for x in xs]
        if n % 2 == 0 and n > 0 and a.contains_zero():
            vals.append(0.0)
    else:
        vals = [p(x, float(y)) for x in xs for y in (b.lo, b.hi)]
        if b.lo <= 0 <= b.hi:
            vals.append(1.0)
    good = [v for v in vals if not math.isnan(v)]
    if len(good) != len(vals):
        nan = True
    if not good:
        return NAN_ONLY
    lo, hi = _widen(min(good), max(good))
    if a.lo >= 0 and a.contains_zero() and b.lo < 0:
        lo = -INF  # pow(-0.0, odd negative) = -inf
    return Interval(lo, hi, nan)


def _int_op(fn: Callable[[int, int], Optional[int]], type_: str):
    width = INT_TYPES[type_]
    top = top_for(type_)

    def transfer(a: Interval, b: Interval) -> Interval:
        if a.is_bottom or b.is_bottom:
            return BOTTOM
        corners = []
        for x in (a.lo, a.hi):
            for y in (b.lo, b.hi):
                r = fn(int(x), int(y))
                if r is None:
                    return top
                corners.append(r)
        lo, hi = min(corners), max(corners)
        if width == 1 or lo < top.lo or hi > top.hi:
            return top
        return Interval(lo, hi)

    return transfer


def _shl(a: Interval, b: Interval, type_: str) -> Interval:
    width = INT_TYPES[type_]
    if a.is_bottom or b.is_bottom:
        return BOTTOM
    if b.lo < 0 or b.hi >= width:
        return top_for(type_)
    return _int_op(lambda x, y: x * (1 << y), type_)(a, b)


_FLOAT_BINARY = {
    "arith.addf": _add, "arith.subf": _sub, "arith.mulf": _mul, "arith.divf": _div,
    "math.powf": _pow,
}
_FLOAT_UNARY: dict[str, Callable[[Interval], Interval]] = {
    "arith.negf": _neg,
    "math.absf": _abs,
    "math.sqrt": _sqrt,
    "math.log": _log,
    "math.exp": _exp,
    "math.sin": lambda a: _trig(a, math.sin, math.pi / 2),
    "math.cos": lambda a: _trig(a, math.cos, 0.0),
}


def constant_interval(attr: Optional[Attribute], type_: str) -> Interval:
    if isinstance(attr, (IntegerAttr, FloatAttr)):
        return point(attr.value)
    return top_for(type_)


def interval_transfer(name: str, attrs: dict, operands: Sequence[Interval], result_type: str) -> Interval:
    """Sound enclosure of ``name`` applied to operand intervals."""
    if name == "arith.constant":
        return constant_interval(attrs.get("value"), result_type)
    if name == "eqsat.const_eclass":
        return constant_interval(attrs.get("cst"), result_type)
    if name == "eqsat.eclass":
        out = top_for(result_type)
        for o in operands:
            out = meet(out, o)
        return out
    if result_type in FLOAT_TYPES:
        if name in _FLOAT_BINARY and len(operands) == 2:
            return _FLOAT_BINARY[name](operands[0], operands[1])
        if name in _FLOAT_UNARY and len(operands) == 1:
            return _FLOAT_UNARY[name](operands[0])
    if result_type in INT_TYPES and len(operands) == 2:
        if name == "arith.addi":
            return _int_op(lambda x, y: x + y, result_type)(*operands)
        if name == "arith.subi":
            return _int_op(lambda x, y: x - y, result_type)(*operands)
        if name == "arith.muli":
            return _int_op(lambda x, y: x * y, result_type)(*operands)
        if name == "arith.shli":
            return _shl(operands[0], operands[1], result_type)
    return top_for(result_type)


# -- predicates -------------------------------------------------------------

def positive(i: Interval) -> bool:
    return not i.may_be_nan and not i.empty_reals and i.lo > 0


def non_negative(i: Interval) -> bool:
    return not i.may_be_nan and not i.empty_reals and i.lo >= 0


def non_zero(i: Interval) -> bool:
    return not i.may_be_nan and not i.empty_reals and (i.lo > 0 or i.hi < 0)


def non_error(i: Interval) -> bool:
    return not i.may_be_nan and not i.empty_reals and math.isfinite(i.lo) and math.isfinite(i.hi)


PREDICATE_FUNCTIONS = {
    "positive": positive,
    "non_negative": non_negative,
    "non_zero": non_zero,
    "non_error": non_error,
}


@dataclass(frozen=True)
class PredicateFacts:
    positive: bool
    non_negative: bool
    non_zero: bool
    non_error: bool


def predicate_facts(i: Interval) -> PredicateFacts:
    return PredicateFacts(positive(i), non_negative(i), non_zero(i), non_error(i))


class IntervalAnalysis:
    """Lattice contract for intervals; combine is intersection."""

    name = "interval"

    def top(self, type_: str) -> Interval:
        return top_for(type_)

    def combine(self, a: Interval, b: Interval) -> Interval:
        return meet(a, b)

    def leq(self, a: Interval, b: Interval) -> bool:
        return leq(a, b)

    def transfer(self, name: str, attrs: dict, operands: Sequence[Interval], result_type: str) -> Interval:
        return interval_transfer(name, attrs, operands, result_type)
