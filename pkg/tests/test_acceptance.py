"""Numbered end-to-end acceptance checks; each prints one PASS/FAIL line in the summary."""

import math
import random
import time

import numpy as np
import pytest

from eqsat_ir.analysis import Interval, interval_transfer
from eqsat_ir.cli import Pipeline, bench_matching, read_text
from eqsat_ir.dialects import insert_eclasses
from eqsat_ir.engine import EGraphView, saturate
from eqsat_ir.extraction import (
    CostModel, annotate_selection, dag_cost, load_cost_config, replace_selected, select_greedy,
    select_ilp, topo_sort,
)
from eqsat_ir.fp import (
    ImproveConfig, improve_detailed, ordinal, parse_fpcore, ulp_distance,
    ulp_distances,
)
from eqsat_ir.ir import IntegerAttr, parse_ir, verify
from eqsat_ir.patterns import parse_patterns

import oracles

ABS_OF_QUOTIENT = """
func.func() {sym_name = "abs_of_quotient"} {
^bb0(%p : f64, %q : f64, %r : f64, %s : f64):
  %x = cplx.create(%p, %q) : cplx
  %y = cplx.create(%r, %s) : cplx
  %z = cplx.div(%x, %y) : cplx
  %m = cplx.abs(%z) : f64
  func.return(%m)
}
"""

ABS_PLUS_PARTS = """
func.func() {sym_name = "abs_plus_parts"} {
^bb0(%p : f64, %q : f64, %r : f64, %s : f64):
  %x = cplx.create(%p, %q) : cplx
  %y = cplx.create(%r, %s) : cplx
  %z = cplx.div(%x, %y) : cplx
  %m = cplx.abs(%z) : f64
  %re = cplx.re(%z) : f64
  %im = cplx.im(%z) : f64
  %t = arith.addf(%m, %re) : f64
  %u = arith.addf(%t, %im) : f64
  func.return(%u)
}
"""


def toy_pipeline(text, passes):
    module = parse_ir(text)
    rules = parse_patterns(read_text("toy.rules"))
    cost = load_cost_config(read_text("toy.cost"))
    pipeline = Pipeline(module, passes, rules, cost, select="ilp")
    pipeline.run()
    return module, pipeline


def sq(v):
    return ("arith.mulf", v, v)


def mul(a, b):
    return ("arith.mulf", a, b)


def add(a, b):
    return ("arith.addf", a, b)


@pytest.mark.criterion(1, "toy optimum: 8 scalar ops, sqrt((p^2+q^2)/(r^2+s^2))")
def test_toy_optimum():
    t0 = time.perf_counter()
    module, _ = toy_pipeline(ABS_OF_QUOTIENT, ["insert-eclasses", "saturate", "select-ilp", "replace",
                                   "topo-sort"])
    elapsed = time.perf_counter() - t0
    func = oracles.first_func(module)
    tree = oracles.expr_tree(func)
    expected = ("math.sqrt", ("arith.divf", add(sq("p"), sq("q")), add(sq("r"), sq("s"))))
    assert tree == expected
    body = [op for op in func.regions[0].blocks[0].ops if op.name != "func.return"]
    assert len(body) == 8
    assert oracles.distinct_scalar_ops(expected) == 8
    assert elapsed < 10


@pytest.mark.criterion(2, "sharing beats the identity: ILP matches brute force and the shared-form op count")
@pytest.mark.parametrize("solver", ["scipy", "bnb"])
def test_sharing_beats_identity(solver):
    t0 = time.perf_counter()
    module, pipeline = toy_pipeline(ABS_PLUS_PARTS, ["insert-eclasses", "saturate"])
    (_, view), = pipeline.egraphs()
    cost = pipeline.cost
    best, _ = oracles.brute_force_optimum(view, cost)
    selection = select_ilp(view, cost, solver=solver)
    assert selection.total_cost == best

    # The program that lowers everything and shares the two quotient parts.
    den = add(sq("r"), sq("s"))
    re = ("arith.divf", add(mul("p", "r"), mul("q", "s")), den)
    im = ("arith.divf", ("arith.subf", mul("q", "r"), mul("p", "s")), den)
    shared = add(add(("math.sqrt", add(sq(re), sq(im))), re), im)
    # The program that applies the identity first.
    identity = add(add(("math.sqrt", ("arith.divf", add(sq("p"), sq("q")), den)), re), im)
    assert oracles.distinct_scalar_ops(shared) == best
    assert oracles.distinct_scalar_ops(identity) > best

    annotate_selection(view, selection)
    replace_selected(module)
    func = oracles.first_func(module)
    topo_sort(func.regions[0])
    assert verify(module) == []
    body = [op for op in func.regions[0].blocks[0].ops if op.name != "func.return"]
    assert len(body) == best
    assert time.perf_counter() - t0 < 60


def _random_congruence_case(rng):
    module = parse_ir('func.func() {sym_name = "g"} {\n^bb0(%a0 : i64, %a1 : i64, %a2 : i64):\n'
                      '  func.return(%a0)\n}\n')
    func = oracles.first_func(module)
    insert_eclasses(func)
    egraph = next(op for op in func.walk() if op.name == "eqsat.egraph")
    view = EGraphView(egraph)
    closure = oracles.NaiveClosure()
    term_class = []
    for i, arg in enumerate(func.regions[0].blocks[0].args):
        uses = [u for u in arg.users() if u.name == "eqsat.eclass"]
        term_class.append(uses[0].id)
        closure.add(("arg", i))
    budget = rng.randint(3, 36)
    while len({view.find(c) for c in term_class}) < 40 and len(term_class) < 3 + budget:
        name = rng.choice(["arith.addi", "arith.muli", "arith.subi"])
        kids = [rng.randrange(len(term_class)) for _ in range(2)]
        cid = view.add_op(name, [term_class[k] for k in kids])
        term_class.append(cid)
        closure.add(name, kids)
        if rng.random() < 0.3:
            view.rebuild()
    for _ in range(rng.randint(0, 8)):
        a, b = rng.randrange(len(term_class)), rng.randrange(len(term_class))
        view.union(term_class[a], term_class[b])
        closure.union(a, b)
        if rng.random() < 0.3:
            view.rebuild()
    view.rebuild()
    closure.close()
    groups: dict[int, set] = {}
    for t, c in enumerate(term_class):
        groups.setdefault(view.find(c), set()).add(t)
    return view, {frozenset(g) for g in groups.values()}, closure.partition()


@pytest.mark.criterion(3, "congruence after rebuild on 500 random e-graphs")
def test_congruence_property():
    rng = random.Random(3)
    for _ in range(500):
        view, got, expected = _random_congruence_case(rng)
        assert len(view.classes()) <= 40
        assert oracles.congruence_violations(view) == []
        assert got == expected


@pytest.mark.criterion(4, "combined matching equals individual matching on the ported suite")
def test_matcher_equivalence():
    rules = parse_patterns(read_text("egg_suite.rules"))
    assert len(rules) == 14
    module = parse_ir(read_text("egg_suite.ir"))
    funcs = [op for op in module.walk() if op.name == "func.func"]
    assert len(funcs) == 6
    report = bench_matching(funcs, rules, max_iterations=5, repeats=3)
    assert len(report.rows) == 6
    assert all(r.iterations <= 5 for r in report.rows)
    print(f"\ncombined/individual geometric-mean speedup: {report.geomean_speedup:.3f}")


@pytest.mark.criterion(5, "cyclic class from a+0 extracts to the bare argument")
def test_cycle_extraction():
    module = parse_ir('func.func() {sym_name = "f"} {\n^bb0(%a : i64):\n'
                      '  %z = arith.constant {value = 0 : i64} : i64\n'
                      '  %r = arith.addi(%a, %z) : i64\n  func.return(%r)\n}\n')
    func = oracles.first_func(module)
    insert_eclasses(func)
    view = EGraphView(next(op for op in func.walk() if op.name == "eqsat.egraph"))
    saturate(view, parse_patterns("(rule add-zero (arith.addi ?x (const 0)) ?x)"))
    root = view.roots()[0]
    names = [m.op.name for m in view.members(root) if hasattr(m, "op")]
    assert "arith.addi" in names
    addi = next(m.op for m in view.members(root) if hasattr(m, "op") and m.op.name == "arith.addi")
    assert view.class_of_value(addi.operands[0]) == root  # the class contains itself
    selection = select_greedy(view, CostModel())
    annotate_selection(view, selection)
    replace_selected(module)
    topo_sort(func.regions[0])
    assert verify(module) == []
    ops = list(func.regions[0].blocks[0].ops)
    assert [op.name for op in ops] == ["func.return"]
    assert ops[0].operands[0] is func.regions[0].blocks[0].args[0]


@pytest.mark.criterion(6, "eager folding turns addi(1, 1) into a const class with cst=2")
def test_eager_folding():
    module = parse_ir('func.func() {sym_name = "f"} {\n^bb0(%a : i64):\n'
                      '  %two = arith.constant {value = 2 : i64} : i64\n'
                      '  %r = arith.muli(%a, %two) : i64\n  func.return(%r)\n}\n')
    func = oracles.first_func(module)
    insert_eclasses(func)
    view = EGraphView(next(op for op in func.walk() if op.name == "eqsat.egraph"))
    rules = parse_patterns("(rule split-two (arith.muli ?x (const 2))"
                           " (arith.muli ?x (arith.addi (const 1) (const 1))))")
    saturate(view, rules)
    assert [n for n in view.nodes() if n.name == "arith.addi"] == []
    consts = [view.class_op(c) for c in view.classes()
              if view.class_op(c).name == "eqsat.const_eclass"]
    assert IntegerAttr(2) in [c.attributes["cst"] for c in consts]
    assert verify(module) == []


def _random_inputs(rng, n):
    pool = [0, 1, -1, 2, (1 << 63) - 1, -(1 << 63)]
    return [rng.choice(pool) if rng.random() < 0.2 else rng.randint(-(1 << 63), (1 << 63) - 1)
            for _ in range(n)]


@pytest.mark.criterion(7, "round trip through an unsaturated e-graph preserves 200 random functions")
def test_round_trip():
    rng = random.Random(7)
    for k in range(200):
        text = oracles.random_int_function(rng, f"f{k}")
        original = oracles.first_func(parse_ir(text))
        module = parse_ir(text)
        func = oracles.first_func(module)
        insert_eclasses(func)
        view = EGraphView(next(op for op in func.walk() if op.name == "eqsat.egraph"))
        saturate(view, [])
        annotate_selection(view, select_greedy(view, CostModel()))
        replace_selected(module)
        topo_sort(func.regions[0])
        assert verify(module) == []
        assert not any(op.name.startswith("eqsat.") for op in func.walk())
        nargs = len(original.regions[0].blocks[0].args)
        for _ in range(100):
            args = _random_inputs(rng, nargs)
            assert oracles.interpret(func, args) == oracles.interpret(original, args), text


def _random_acyclic_egraph(rng):
    module = parse_ir('func.func() {sym_name = "g"} {\n^bb0(%a0 : i64, %a1 : i64, %a2 : i64):\n'
                      '  func.return(%a0)\n}\n')
    func = oracles.first_func(module)
    insert_eclasses(func)
    view = EGraphView(next(op for op in func.walk() if op.name == "eqsat.egraph"))
    order = list(view.roots())
    for arg in func.regions[0].blocks[0].args[1:]:
        order.append(next(u.id for u in arg.users() if u.name == "eqsat.eclass"))
    uid = 0
    for _ in range(rng.randint(1, 17)):
        cid = None
        for _ in range(rng.randint(1, 4)):
            uid += 1
            kids = [view.find(rng.choice(order)) for _ in range(2)]
            attrs = {"eqsat.cost": IntegerAttr(rng.randint(1, 9)), "tag": IntegerAttr(uid)}
            new = view.add_op(rng.choice(["arith.addi", "arith.muli"]), kids, attrs)
            cid = new if cid is None else view.union(cid, new)
        view.rebuild()
        order.append(cid)
    view.yield_op.set_operand(0, view.class_value(order[-1]))
    return view


@pytest.mark.criterion(8, "ILP equals the exhaustive optimum and never exceeds greedy on 100 e-graphs")
@pytest.mark.parametrize("solver", ["scipy", "bnb"])
def test_ilp_optimality(solver):
    rng = random.Random(8)
    cost = CostModel()
    for _ in range(100):
        view = _random_acyclic_egraph(rng)
        assert len(view.classes()) <= 20
        best, _ = oracles.brute_force_optimum(view, cost)
        ilp = select_ilp(view, cost, solver=solver)
        greedy = select_greedy(view, cost)
        assert ilp.total_cost == best
        assert ilp.total_cost <= dag_cost(view, greedy, cost, view.roots())


def _interval_of_tree(tree, box):
    if isinstance(tree, str):
        return Interval(*box[tree])
    if isinstance(tree, float):
        return interval_transfer("arith.constant", {"value": _float_attr(tree)}, [], "f64")
    kids = [_interval_of_tree(k, box) for k in tree[1:]]
    return interval_transfer(tree[0], {}, kids, "f64")


def _float_attr(x):
    from eqsat_ir.ir import FloatAttr
    return FloatAttr(x)


def _subtrees(tree):
    yield tree
    if isinstance(tree, tuple):
        for k in tree[1:]:
            yield from _subtrees(k)


def _random_box(rng):
    scale = 10.0 ** rng.randint(-3, 3)
    lo = rng.uniform(-scale, scale)
    if rng.random() < 0.2:
        return lo, lo
    return lo, lo + rng.uniform(0, 2 * scale)


@pytest.mark.criterion(9, "interval enclosures contain 100 concrete evaluations of 1000 random expressions")
def test_interval_soundness():
    rng = random.Random(9)
    args = ["x", "y", "z"]
    violations = []
    for _ in range(1000):
        tree = oracles.random_float_tree(rng, args, rng.randint(1, 5))
        box = {a: _random_box(rng) for a in args}
        nodes = list(_subtrees(tree))
        enclosures = [_interval_of_tree(t, box) for t in nodes]
        for _ in range(100):
            env = {a: rng.uniform(*box[a]) if rng.random() < 0.9 else rng.choice(box[a])
                   for a in args}
            for t, iv in zip(nodes, enclosures):
                v = oracles.eval_tree(t, env)
                if not iv.contains(v):
                    violations.append((t, env, v, iv))
    assert violations[:5] == []


@pytest.mark.criterion(10, "improve lowers the error of sqrt(x+1) - sqrt(x) within 4000 e-nodes")
def test_fp_accuracy():
    t0 = time.perf_counter()
    rules = parse_patterns(read_text("fp.rules"))
    text = "(FPCore (x) :pre (>= x 0) (- (sqrt (+ x 1)) (sqrt x)))"
    result = improve_detailed(text, rules, ImproveConfig(samples=256, max_enodes=4000))
    report = result.report
    print("\n" + report.line())
    assert report.samples == 256
    assert report.output_bits_err < report.input_bits_err
    assert report.enodes <= 4000
    reparsed = parse_fpcore(result.text)
    assert reparsed.args == ["x"]
    assert time.perf_counter() - t0 < 300


@pytest.mark.criterion(11, "ULP distance equals the brute-force count of doubles between two values")
def test_ulp_metric():
    windows = [
        (0.0, 5e-324 * 300),                    # across zero, subnormals only
        (-5e-324 * 300, 5e-324 * 300),
        (math.ldexp(1.0, -1022) * (1 - 2.0 ** -44), math.ldexp(1.0, -1022) * (1 + 2.0 ** -44)),
        (1.0 - 2.0 ** -44, 1.0 + 2.0 ** -43),   # binade boundary at 1
        (-2.0 - 2.0 ** -42, -2.0 + 2.0 ** -43),
        (math.nextafter(math.inf, 0) * (1 - 2.0 ** -45), math.inf),
    ]
    for lo, hi in windows:
        values = oracles.floats_between(lo, hi)
        assert 100 < len(values) < 5000
        a = np.array(values)
        # distance between the i-th and j-th enumerated value is |i - j|
        got = ulp_distances(a[:, None], a[None, :])
        idx = np.arange(len(values))
        assert np.array_equal(got, np.abs(idx[:, None] - idx[None, :]).astype(got.dtype))
        rng = random.Random(11)
        for _ in range(200):
            i, j = rng.randrange(len(values)), rng.randrange(len(values))
            assert ulp_distance(values[i], values[j]) == abs(i - j)
    assert ulp_distance(0.0, -0.0) == 0
    assert ordinal(-0.0) == ordinal(0.0)
