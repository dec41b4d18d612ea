"""Evaluating ops and FPCore expressions in binary64 and in high precision."""

from __future__ import annotations

from contextlib import contextmanager
from typing import Optional

import gmpy2
import numpy as np

from .fpcore import OPERATORS, Expr
from .ieee import eval_f64

DEFAULT_PRECISION = 1024

_MPFR_OPS = {
    "arith.addf": lambda a, b: a + b,
    "arith.subf": lambda a, b: a - b,
    "arith.mulf": lambda a, b: a * b,
    "arith.divf": lambda a, b: a / b,
    "arith.negf": lambda a: -a,
    "math.sqrt": gmpy2.sqrt,
    "math.powf": lambda a, b: a ** b,
    "math.log": gmpy2.log,
    "math.exp": gmpy2.exp,
    "math.sin": gmpy2.sin,
    "math.cos": gmpy2.cos,
    "math.absf": abs,
}


@contextmanager
def precision(bits: int):
    """A gmpy2 context at ``bits`` of precision that never raises on special values."""
    with gmpy2.context(precision=bits, round=gmpy2.RoundToNearest) as ctx:
        yield ctx


def is_real(x) -> bool:
    return x is not None and gmpy2.is_finite(x)


def eval_mpfr(name: str, operands: list) -> Optional[object]:
    """Apply ``name`` in the active gmpy2 context; None marks a domain error.

    Must run inside :func:`precision`. Infinite or NaN results are errors,
    since they have no real value to compare against.
    """
    if any(o is None for o in operands):
        return None
    fn = _MPFR_OPS.get(name)
    if fn is None:
        return None
    try:
        out = fn(*operands)
    except (ValueError, ZeroDivisionError, OverflowError):
        return None
    return out if gmpy2.is_finite(out) else None


def round_f64(values: list) -> np.ndarray:
    """Round high-precision values to the nearest doubles; errors become NaN."""
    return np.array([float(v) if v is not None else np.nan for v in values], dtype=np.float64)


def eval_expr_f64(expr: Expr, env: dict[str, np.ndarray]) -> np.ndarray:
    """Evaluate ``expr`` over whole sample columns in binary64."""
    memo: dict[int, np.ndarray] = {}
    n = len(next(iter(env.values()))) if env else 1

    def go(e) -> np.ndarray:
        if isinstance(e, float):
            return np.full(n, e)
        if isinstance(e, str):
            return env[e]
        key = id(e)
        if key not in memo:
            memo[key] = eval_f64(OPERATORS[e[0]], [go(x) for x in e[1:]])
        return memo[key]

    return go(expr)


def eval_expr_mpfr(expr: Expr, env: dict[str, list], bits: int = DEFAULT_PRECISION) -> list:
    """Evaluate ``expr`` per sample at ``bits`` of precision; None marks errors."""
    n = len(next(iter(env.values()))) if env else 1
    out = []
    with precision(bits):
        for i in range(n):
            memo: dict[int, object] = {}

            def go(e):
                if isinstance(e, float):
                    return gmpy2.mpfr(e)
                if isinstance(e, str):
                    return env[e][i]
                key = id(e)
                if key not in memo:
                    memo[key] = eval_mpfr(OPERATORS[e[0]], [go(x) for x in e[1:]])
                return memo[key]

            out.append(go(expr))
    return out
