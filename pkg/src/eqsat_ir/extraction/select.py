"""Choosing one member per e-class.

Greedy selection minimizes tree cost (a child is paid for at every use) and
is computed like Knuth's generalization of Dijkstra's algorithm: a class is
settled at the smallest cost reachable through members whose operand classes
are already settled. Settled choices therefore never form a cycle.

ILP selection minimizes DAG cost (each chosen e-node paid once). It is solved
with HiGHS through ``scipy.optimize.milp`` or with the built-in
branch-and-bound in this module.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

from ..ir.core import BlockArgument, Operation, OpResult, Value
from ..engine.egraph import EGraphView
from .cost import CostModel

Cost = Union[float, tuple]


class ExtractionError(Exception):
    pass


@dataclass
class Selection:
    choices: dict[int, int] = field(default_factory=dict)  # canonical class id -> operand index
    total_cost: Optional[float] = None

    def is_total_for(self, classes: Sequence[int]) -> bool:
        return all(c in self.choices for c in classes)


def _add(a: Cost, b: Cost) -> Cost:
    if isinstance(a, tuple):
        return tuple(x + y for x, y in zip(a, b))  # type: ignore[arg-type]
    return a + b  # type: ignore[operator]


def _finite(c: Cost) -> bool:
    return all(math.isfinite(x) for x in c) if isinstance(c, tuple) else math.isfinite(c)


def _member_cost_fn(cost_model: Union[CostModel, Callable[[Value], Cost]]) -> Callable[[Value], Cost]:
    if isinstance(cost_model, CostModel):
        def fn(v: Value) -> Cost:
            if isinstance(v, BlockArgument):
                return cost_model.leaf
            return cost_model.op_cost(v.op)  # type: ignore[attr-defined]
        return fn
    return cost_model


def select_greedy(view: EGraphView, cost_model: Union[CostModel, Callable[[Value], Cost]]) -> Selection:
    """Lowest tree-cost member per class; classes with no finite cost stay unselected.

    ``cost_model`` may also be a function from member value to a cost, where
    costs are numbers or equal-length tuples compared lexicographically.
    """
    member_cost = _member_cost_fn(cost_model)
    best: dict[int, Cost] = {}
    choices: dict[int, int] = {}
    heap: list = []
    waiting: dict[int, int] = {}  # e-node id -> unsettled distinct operand classes
    users: dict[int, list[Operation]] = {}
    for cid in view.classes():
        for index, v in enumerate(view.members(cid)):
            c = member_cost(v)
            if not _finite(c):
                continue
            if isinstance(v, OpResult):
                node = v.op
                kids = {view.class_of_value(o) for o in node.operands}
                if kids:
                    waiting[node.id] = len(kids)
                    for k in kids:
                        users.setdefault(k, []).append(node)
                    continue
            heapq.heappush(heap, (c, cid, index))
    while heap:
        c, cid, index = heapq.heappop(heap)
        if cid in best:
            continue
        best[cid] = c
        choices[cid] = index
        for node in users.get(cid, ()):
            waiting[node.id] -= 1
            if waiting[node.id]:
                continue
            owner = view.class_of_node(node)
            if owner in best:
                continue
            total = member_cost(node.results[0])
            for o in node.operands:
                total = _add(total, best[view.class_of_value(o)])
            index = view.members(owner).index(node.results[0])
            heapq.heappush(heap, (total, owner, index))
    selection = Selection(choices)
    if isinstance(cost_model, CostModel):
        roots = view.roots()
        if all(r in choices for r in roots):
            selection.total_cost = dag_cost(view, selection, cost_model, roots)
    return selection


def chosen_member(view: EGraphView, selection: Selection, cid: int) -> Value:
    return view.members(cid)[selection.choices[view.find(cid)]]


def reachable_classes(view: EGraphView, selection: Selection, roots: Sequence[int]) -> list[int]:
    """Classes reachable from ``roots`` through chosen members, in discovery order."""
    seen: list[int] = []
    marked: set[int] = set()
    stack = [view.find(r) for r in reversed(list(roots))]
    while stack:
        cid = stack.pop()
        if cid in marked:
            continue
        marked.add(cid)
        seen.append(cid)
        if cid not in selection.choices:
            continue
        v = chosen_member(view, selection, cid)
        if isinstance(v, OpResult):
            for o in reversed(v.op.operands):
                stack.append(view.class_of_value(o))
    return seen


def dag_cost(view: EGraphView, selection: Selection, cost_model: CostModel, roots: Sequence[int]) -> float:
    """Sum of costs of the distinct chosen members reachable from ``roots``."""
    member_cost = _member_cost_fn(cost_model)
    total = 0.0
    for cid in reachable_classes(view, selection, roots):
        if cid not in selection.choices:
            return math.inf
        total += member_cost(chosen_member(view, selection, cid))  # type: ignore[operator]
    return total


def has_cycle(view: EGraphView, selection: Selection) -> bool:
    """Whether chosen members form a cycle among selected classes."""
    color: dict[int, int] = {}
    for start in selection.choices:
        if start in color:
            continue
        stack = [(start, iter(_chosen_children(view, selection, start)))]
        color[start] = 1
        while stack:
            cid, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[cid] = 2
                stack.pop()
                continue
            state = color.get(nxt, 0)
            if state == 1:
                return True
            if state == 0 and nxt in selection.choices:
                color[nxt] = 1
                stack.append((nxt, iter(_chosen_children(view, selection, nxt))))
    return False


def _chosen_children(view: EGraphView, selection: Selection, cid: int) -> list[int]:
    v = chosen_member(view, selection, cid)
    if isinstance(v, OpResult):
        return [view.class_of_value(o) for o in v.op.operands]
    return []


# -- ILP -----------------------------------------------------------------------

@dataclass
class _Problem:
    classes: list[int]
    members: dict[int, list[tuple[int, float, tuple[int, ...]]]]  # class -> (index, cost, child classes)
    roots: list[int]


def _build_problem(view: EGraphView, cost_model: CostModel, roots: Sequence[int]) -> _Problem:
    member_cost = _member_cost_fn(cost_model)
    roots = [view.find(r) for r in roots]
    members: dict[int, list] = {}
    order: list[int] = []
    stack = list(reversed(roots))
    while stack:
        cid = stack.pop()
        if cid in members:
            continue
        options = []
        for index, v in enumerate(view.members(cid)):
            c = member_cost(v)
            if not math.isfinite(c):  # type: ignore[arg-type]
                continue
            kids: tuple[int, ...] = ()
            if isinstance(v, OpResult):
                kids = tuple(dict.fromkeys(view.class_of_value(o) for o in v.op.operands))
            if cid in kids:
                continue  # a member using its own class can never be chosen
            options.append((index, float(c), kids))  # type: ignore[arg-type]
        members[cid] = options
        order.append(cid)
        for _, _, kids in options:
            for k in reversed(kids):
                if k not in members:
                    stack.append(k)
    return _Problem(order, members, roots)


def _solve_scipy(problem: _Problem, time_limit: Optional[float]) -> Optional[dict[int, int]]:
    import numpy as np
    from scipy.optimize import LinearConstraint, milp
    from scipy.sparse import lil_matrix

    var: dict[tuple[int, int], int] = {}
    costs = []
    for cid in problem.classes:
        for index, c, _ in problem.members[cid]:
            var[(cid, index)] = len(costs)
            costs.append(c)
    n_x = len(costs)
    level = {cid: n_x + i for i, cid in enumerate(problem.classes)}
    n = n_x + len(level)
    big_m = len(level) + 1
    rows: list[tuple[dict[int, float], float, float]] = []
    for cid in problem.classes:
        xs = {var[(cid, i)]: 1.0 for i, _, _ in problem.members[cid]}
        rows.append((xs, 1.0 if cid in problem.roots else 0.0, 1.0))
        for index, _, kids in problem.members[cid]:
            x = var[(cid, index)]
            for k in kids:
                row = {var[(k, i)]: 1.0 for i, _, _ in problem.members[k]}
                row[x] = row.get(x, 0.0) - 1.0
                rows.append((row, 0.0, math.inf))
                # level[cid] - level[k] >= 1 - M (1 - x)
                rows.append(({level[cid]: 1.0, level[k]: -1.0, x: -float(big_m)},
                             1.0 - big_m, math.inf))
    a = lil_matrix((len(rows), n))
    lb = np.empty(len(rows))
    ub = np.empty(len(rows))
    for r, (coeffs, lo, hi) in enumerate(rows):
        for j, v in coeffs.items():
            a[r, j] = v
        lb[r], ub[r] = lo, hi
    c = np.zeros(n)
    c[:n_x] = costs
    integrality = np.zeros(n)
    integrality[:n_x] = 1
    lower = np.zeros(n)
    upper = np.concatenate([np.ones(n_x), np.full(len(level), float(big_m))])
    from scipy.optimize import Bounds

    options = {"disp": False}
    if time_limit is not None:
        options["time_limit"] = time_limit
    res = milp(c, constraints=LinearConstraint(a.tocsr(), lb, ub), integrality=integrality,
               bounds=Bounds(lower, upper), options=options)
    if res.x is None:
        if res.status == 1:
            raise ExtractionError("ILP solver hit its time limit")
        return None
    choices = {}
    for (cid, index), j in var.items():
        if res.x[j] > 0.5 and cid not in choices:
            choices[cid] = index
    return choices


class _BranchAndBound:
    def __init__(self, problem: _Problem, node_limit: Optional[int]) -> None:
        self.p = problem
        self.min_cost = {cid: min((c for _, c, _ in ms), default=math.inf)
                         for cid, ms in problem.members.items()}
        self.best_cost = math.inf
        self.best: Optional[dict[int, int]] = None
        self.node_limit = node_limit
        self.explored = 0

    def reaches(self, chosen: dict[int, tuple[int, tuple[int, ...]]], start: int, target: int) -> bool:
        stack = [start]
        seen = set()
        while stack:
            cid = stack.pop()
            if cid == target:
                return True
            if cid in seen or cid not in chosen:
                continue
            seen.add(cid)
            stack.extend(chosen[cid][1])
        return False

    def solve(self, upper: float = math.inf, incumbent: Optional[dict[int, int]] = None) -> Optional[dict[int, int]]:
        self.best_cost = upper
        self.best = incumbent
        roots = list(dict.fromkeys(self.p.roots))
        self._search({}, roots, 0.0)
        return self.best

    def _search(self, chosen: dict, open_classes: list[int], cost: float) -> None:
        self.explored += 1
        if self.node_limit is not None and self.explored > self.node_limit:
            raise ExtractionError("branch-and-bound node limit reached")
        bound = cost + sum(self.min_cost[c] for c in open_classes)
        if bound >= self.best_cost:
            return
        if not open_classes:
            self.best_cost = cost
            self.best = {cid: index for cid, (index, _) in chosen.items()}
            return
        # Branch on the open class with the fewest options.
        cid = min(open_classes, key=lambda c: (len(self.p.members[c]), c))
        rest = [c for c in open_classes if c != cid]
        for index, c, kids in sorted(self.p.members[cid], key=lambda m: (m[1], m[0])):
            if any(self.reaches(chosen, k, cid) for k in kids):
                continue
            chosen[cid] = (index, kids)
            new_open = rest + [k for k in kids if k not in chosen and k not in rest]
            new_open = list(dict.fromkeys(new_open))
            self._search(chosen, new_open, cost + c)
            del chosen[cid]


def select_ilp(view: EGraphView, cost_model: CostModel, roots: Optional[Sequence[int]] = None,
               solver: str = "auto", time_limit: Optional[float] = None,
               node_limit: Optional[int] = None) -> Selection:
    """Minimum DAG-cost acyclic selection covering ``roots``.

    ``solver`` is ``"scipy"`` (HiGHS), ``"bnb"`` (built-in branch-and-bound) or
    ``"auto"`` (scipy when importable, else branch-and-bound).
    """
    roots = view.roots() if roots is None else [view.find(r) for r in roots]
    problem = _build_problem(view, cost_model, roots)
    if solver == "auto":
        try:
            import scipy.optimize  # noqa: F401
            solver = "scipy"
        except ImportError:
            solver = "bnb"
    if solver == "scipy":
        choices = _solve_scipy(problem, time_limit)
    elif solver == "bnb":
        greedy = select_greedy(view, cost_model)
        upper, incumbent = math.inf, None
        if greedy.total_cost is not None and all(r in greedy.choices for r in roots):
            reach = reachable_classes(view, greedy, roots)
            if all(c in problem.members for c in reach) and not has_cycle(view, greedy):
                incumbent = {c: greedy.choices[c] for c in reach}
                upper = dag_cost(view, greedy, cost_model, roots)
        bnb = _BranchAndBound(problem, node_limit)
        # Search strictly below the incumbent, then fall back to it.
        found = bnb.solve(upper, None)
        choices = found if found is not None else incumbent
    else:
        raise ValueError(f"unknown ILP solver {solver!r}")
    if choices is None:
        raise ExtractionError("no acyclic finite-cost selection covers the roots")
    selection = Selection(dict(choices))
    selection.total_cost = dag_cost(view, selection, cost_model, roots)
    return selection
