"""Reference implementations the tests compare against.

Each oracle is written from the definitions, independently of the code it
checks: a plain interpreter, a naive congruence closure, exhaustive selection
enumeration and scalar IEEE evaluation.
"""

from __future__ import annotations

import math
import random

from eqsat_ir.ir import BlockArgument, OpResult, parse_ir, print_ir
from eqsat_ir.ir.attributes import IntegerAttr


# -- integer functions ------------------------------------------------------------

MASK = (1 << 64) - 1


def wrap64(x: int) -> int:
    x &= MASK
    return x - (1 << 64) if x >= 1 << 63 else x


INT_SEMANTICS = {
    "arith.addi": lambda a, b: wrap64(a + b),
    "arith.subi": lambda a, b: wrap64(a - b),
    "arith.muli": lambda a, b: wrap64(a * b),
    "arith.shli": lambda a, b: wrap64(a << b),
}


def interpret(func, args):
    """Run a straight-line integer function; returns the list of returned values."""
    block = func.regions[0].blocks[0]
    env = dict(zip(block.args, args))
    for op in block.ops:
        if op.name == "func.return":
            return [env[v] for v in op.operands]
        if op.name == "arith.constant":
            env[op.results[0]] = op.attributes["value"].value
        else:
            env[op.results[0]] = INT_SEMANTICS[op.name](*[env[v] for v in op.operands])
    raise AssertionError("function has no return")


def random_int_function(rng: random.Random, name: str = "f", max_ops: int = 12) -> str:
    """IR text of a pure straight-line i64 function with shifts by in-range constants."""
    nargs = rng.randint(1, 4)
    values = [f"%a{i}" for i in range(nargs)]
    lines = [f'func.func() {{sym_name = "{name}"}} {{',
             "^bb0(" + ", ".join(f"{v} : i64" for v in values) + "):"]
    for i in range(rng.randint(1, max_ops)):
        kind = rng.random()
        dst = f"%v{i}"
        if kind < 0.15:
            lines.append(f"  {dst} = arith.constant {{value = {rng.randint(-5, 5)} : i64}} : i64")
        elif kind < 0.25:
            amt = f"%s{i}"
            lines.append(f"  {amt} = arith.constant {{value = {rng.randint(0, 8)} : i64}} : i64")
            lines.append(f"  {dst} = arith.shli({rng.choice(values)}, {amt}) : i64")
        else:
            op = rng.choice(["arith.addi", "arith.subi", "arith.muli"])
            lines.append(f"  {dst} = {op}({rng.choice(values)}, {rng.choice(values)}) : i64")
        values.append(dst)
    lines.append(f"  func.return({values[-1]})")
    lines.append("}")
    return "\n".join(lines) + "\n"


def first_func(module):
    return next(op for op in module.walk() if op.name == "func.func")


def clone_func(func):
    return first_func(parse_ir(print_ir(func)))


# -- congruence closure -------------------------------------------------------------

class NaiveClosure:
    """Union-find over terms closed under congruence by repeated all-pairs scans."""

    def __init__(self):
        self.terms: list[tuple] = []
        self.parent: list[int] = []

    def add(self, head, kids=()) -> int:
        self.terms.append((head, tuple(kids)))
        self.parent.append(len(self.parent))
        return len(self.terms) - 1

    def find(self, t: int) -> int:
        while self.parent[t] != t:
            t = self.parent[t]
        return t

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def close(self) -> None:
        changed = True
        while changed:
            changed = False
            for i, (hi, ki) in enumerate(self.terms):
                for j in range(i + 1, len(self.terms)):
                    hj, kj = self.terms[j]
                    if hi != hj or len(ki) != len(kj) or self.find(i) == self.find(j):
                        continue
                    if all(self.find(x) == self.find(y) for x, y in zip(ki, kj)):
                        self.union(i, j)
                        changed = True

    def partition(self) -> set[frozenset]:
        groups: dict[int, set] = {}
        for t in range(len(self.terms)):
            groups.setdefault(self.find(t), set()).add(t)
        return {frozenset(g) for g in groups.values()}


def congruence_violations(view) -> list[tuple]:
    """All pairs of e-nodes with equal keys living in different classes (quadratic scan)."""
    nodes = view.nodes()
    keys = [view.key_of(n) for n in nodes]
    bad = []
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if keys[i] == keys[j] and view.class_of_node(nodes[i]) != view.class_of_node(nodes[j]):
                bad.append((nodes[i], nodes[j]))
    return bad


# -- extraction ---------------------------------------------------------------

def member_cost(cost_model, v) -> float:
    if isinstance(v, BlockArgument):
        return cost_model.leaf
    return cost_model.op_cost(v.op)


def _kids(view, v) -> list[int]:
    if isinstance(v, OpResult):
        return [view.class_of_value(o) for o in v.op.operands]
    return []


def _acyclic(view, choice: dict[int, int]) -> bool:
    state: dict[int, int] = {}

    def visit(c) -> bool:
        if state.get(c) == 1:
            return False
        if state.get(c) == 2:
            return True
        state[c] = 1
        v = view.members(c)[choice[c]]
        ok = all(visit(k) for k in _kids(view, v))
        state[c] = 2
        return ok

    return all(visit(c) for c in choice)


def brute_force_optimum(view, cost_model, roots=None):
    """Minimum DAG cost over every acyclic selection reachable from ``roots``.

    Enumerates member choices class by class as they become reachable; a
    branch is cut only when its partial cost already reaches the best complete
    cost, which is safe because costs are non-negative.
    """
    roots = view.roots() if roots is None else roots
    best = [math.inf, None]

    def go(pending: list[int], choice: dict[int, int], cost: float) -> None:
        if cost >= best[0]:
            return
        pending = [c for c in pending if c not in choice]
        if not pending:
            if _acyclic(view, choice):
                best[0], best[1] = cost, dict(choice)
            return
        c, rest = pending[0], pending[1:]
        for i, v in enumerate(view.members(c)):
            mc = member_cost(cost_model, v)
            if not math.isfinite(mc):
                continue
            choice[c] = i
            go(rest + _kids(view, v), choice, cost + mc)
            del choice[c]

    go(list(dict.fromkeys(roots)), {}, 0.0)
    return best[0], best[1]


def expr_tree(func):
    """The returned value of a straight-line function as a nested ``(name, kid, ...)`` tuple."""
    block = func.regions[0].blocks[0]
    ret = block.last_op

    def go(v):
        if isinstance(v, BlockArgument):
            return v.name_hint or f"arg{v.index}"
        op = v.op
        if op.name == "arith.constant":
            return float(op.attributes["value"].value)
        return (op.name,) + tuple(go(o) for o in op.operands)

    return go(ret.operands[0])


def distinct_scalar_ops(expr) -> int:
    """Distinct operation nodes in a hash-consed expression tree (shared subterms count once)."""
    seen = set()

    def go(e):
        if isinstance(e, tuple):
            if e in seen:
                return
            seen.add(e)
            for k in e[1:]:
                go(k)

    go(expr)
    return len(seen)


# -- scalar IEEE evaluation ----------------------------------------------------

def _is_odd_integer(y: float) -> bool:
    return math.isfinite(y) and y.is_integer() and int(y) % 2 == 1


def _pow(x: float, y: float) -> float:
    try:
        return math.pow(x, y)
    except ValueError:
        if x == 0 and y < 0:
            return math.copysign(math.inf, x) if _is_odd_integer(y) else math.inf
        return math.nan
    except OverflowError:
        return -math.inf if x < 0 and _is_odd_integer(y) else math.inf


def _log(x: float) -> float:
    if math.isnan(x) or x < 0:
        return math.nan
    if x == 0:
        return -math.inf
    return math.log(x)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _unary(fn):
    def go(x: float) -> float:
        try:
            return fn(x)
        except ValueError:
            return math.nan
    return go


def _div(x: float, y: float) -> float:
    try:
        return x / y
    except ZeroDivisionError:
        if x == 0 or math.isnan(x):
            return math.nan
        return math.copysign(math.inf, x) * math.copysign(1.0, y)


def _add(x, y):
    return x + y


SCALAR = {
    "arith.addf": _add,
    "arith.subf": lambda x, y: x - y,
    "arith.mulf": lambda x, y: x * y,
    "arith.divf": _div,
    "arith.negf": lambda x: -x,
    "math.sqrt": lambda x: math.nan if x < 0 else math.sqrt(x),
    "math.powf": _pow,
    "math.log": _log,
    "math.exp": _exp,
    "math.sin": _unary(math.sin),
    "math.cos": _unary(math.cos),
    "math.absf": abs,
}


def eval_tree(tree, env):
    """Evaluate ``(name, kid, ...)`` trees with string leaves looked up in ``env``."""
    if isinstance(tree, str):
        return env[tree]
    if isinstance(tree, float):
        return tree
    return SCALAR[tree[0]](*[eval_tree(k, env) for k in tree[1:]])


FLOAT_OPS = [("arith.addf", 2), ("arith.subf", 2), ("arith.mulf", 2), ("arith.divf", 2),
             ("arith.negf", 1), ("math.sqrt", 1), ("math.powf", 2), ("math.log", 1),
             ("math.exp", 1), ("math.sin", 1), ("math.cos", 1), ("math.absf", 1)]


def random_float_tree(rng: random.Random, args, depth: int):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.2:
            return rng.choice([0.0, 1.0, -1.0, 2.0, 0.5, 3.0, 1e-3, 1e3])
        return rng.choice(args)
    name, arity = rng.choice(FLOAT_OPS)
    return (name,) + tuple(random_float_tree(rng, args, depth - 1) for _ in range(arity))


# -- ULP counting ---------------------------------------------------------------

def floats_between(lo: float, hi: float) -> list[float]:
    """Every double from ``lo`` up to ``hi`` inclusive, one nextafter step at a time (zeros merged)."""
    out = [lo]
    x = lo
    while x < hi:
        x = math.nextafter(x, math.inf)
        if x == 0 and out[-1] == 0:
            continue
        out.append(x)
    return out


def int_attr(v: int) -> IntegerAttr:
    return IntegerAttr(v)
