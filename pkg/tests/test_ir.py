import pytest
from hypothesis import given, settings, strategies as st

from eqsat_ir.ir import (
    Block, Builder, IRError, IntegerAttr, ParseError, RegionKind,
    build_operation, check_use_def, default_registry, erase_operation, parse_ir, print_ir,
    replace_all_uses, verify,
)
from eqsat_ir.ir.attributes import FloatAttr, StringAttr
from eqsat_ir.ir.registry import RegistryError

import oracles

MUL_BY_TWO = """func.func() {sym_name = "f"} {
^bb0(%a : i64):
  %two = arith.constant {value = 2 : i64} : i64
  %res = arith.muli(%a, %two) : i64
  func.return(%res)
}
"""

# An e-graph whose sum class contains itself: sum = addi(a, 0) and sum = a.
CYCLIC_EGRAPH = """func.func() {sym_name = "f"} {
^bb0(%a : i64):
  %r = eqsat.egraph {
    %sum = eqsat.eclass(%a, %add) : i64
    %zero = arith.constant {value = 0 : i64} : i64
    %c_zero = eqsat.const_eclass(%zero) {cst = 0 : i64} : i64
    %add = arith.addi(%sum, %c_zero) : i64
    eqsat.yield(%sum)
  } : i64
  func.return(%r)
}
"""


def body_of(module):
    return oracles.first_func(module).regions[0].blocks[0]


class TestBuild:
    def test_constant_has_one_result(self):
        op = build_operation("arith.constant", [], {"value": IntegerAttr(2)})
        assert len(op.results) == 1
        assert op.results[0].type == "i64"

    def test_self_use_is_recorded_twice(self):
        module = parse_ir(MUL_BY_TWO)
        a = body_of(module).args[0]
        op = build_operation("arith.muli", [a, a])
        assert sorted(u.index for u in a.uses if u.operation is op) == [0, 1]

    def test_yield_accepted_as_terminator(self):
        module = parse_ir(CYCLIC_EGRAPH)
        assert verify(module) == []

    def test_unknown_op_rejected(self):
        with pytest.raises(RegistryError):
            build_operation("arith.frobnicate", [])

    def test_operand_type_mismatch_rejected(self):
        module = parse_ir(MUL_BY_TWO)
        a = body_of(module).args[0]
        x = build_operation("arith.constant", [], {"value": FloatAttr(1.0)}).results[0]
        with pytest.raises(Exception):
            build_operation("arith.muli", [a, x])

    def test_builder_inserts_at_end(self):
        block = Block(["i64"])
        b = Builder().at_end(block)
        b.build("arith.addi", [block.args[0], block.args[0]])
        assert [op.name for op in block.ops] == ["arith.addi"]


class TestUses:
    def test_replace_moves_every_use(self):
        module = parse_ir("""func.func() {sym_name = "f"} {
^bb0(%a : i64, %b : i64):
  %x = arith.addi(%a, %a) : i64
  %y = arith.muli(%a, %x) : i64
  func.return(%y)
}
""")
        a, b = body_of(module).args
        replace_all_uses(a, b)
        assert a.users() == []
        assert len(b.uses) == 3
        assert check_use_def(module) == []

    def test_replace_without_uses_is_noop(self):
        module = parse_ir(MUL_BY_TWO)
        block = body_of(module)
        before = print_ir(module)
        fresh = build_operation("arith.constant", [], {"value": IntegerAttr(7)})
        block.insert_before(fresh, block.first_op)
        replace_all_uses(fresh.results[0], block.args[0])
        fresh.erase()
        assert print_ir(module) == before

    def test_replace_type_mismatch(self):
        module = parse_ir(MUL_BY_TWO)
        a = body_of(module).args[0]
        f = build_operation("arith.constant", [], {"value": FloatAttr(1.0)}).results[0]
        with pytest.raises(IRError):
            replace_all_uses(a, f)

    def test_erase_dead_constant(self):
        module = parse_ir(MUL_BY_TWO)
        block = body_of(module)
        dead = build_operation("arith.constant", [], {"value": IntegerAttr(9)})
        block.insert_before(dead, block.first_op)
        n = len(block)
        erase_operation(dead)
        assert len(block) == n - 1

    def test_erase_live_op_rejected(self):
        module = parse_ir(MUL_BY_TWO)
        two = body_of(module).first_op
        with pytest.raises(IRError):
            erase_operation(two)


class TestVerify:
    def test_use_before_def(self):
        module = parse_ir("""func.func() {sym_name = "f"} {
^bb0(%a : i64):
  %x = arith.addi(%a, %y) : i64
  %y = arith.addi(%a, %a) : i64
  func.return(%x)
}
""")
        problems = verify(module)
        assert any("dominate" in p or "before" in p for p in problems), problems

    def test_graph_region_cycle_is_fine(self):
        assert verify(parse_ir(CYCLIC_EGRAPH)) == []

    def test_eclass_outside_egraph(self):
        module = parse_ir("""func.func() {sym_name = "f"} {
^bb0(%a : i64):
  %c = eqsat.eclass(%a) : i64
  func.return(%c)
}
""")
        assert any("egraph" in p for p in verify(module))

    def test_missing_terminator(self):
        module = parse_ir(MUL_BY_TWO)
        body_of(module).last_op.erase()
        assert verify(module) != []


class TestText:
    def test_listing_round_trip(self):
        module = parse_ir(MUL_BY_TWO)
        text = print_ir(module)
        assert print_ir(parse_ir(text)) == text
        assert "%res = arith.muli(%a, %two) : i64" in text

    def test_empty_module(self):
        assert print_ir(parse_ir("")).strip() == "builtin.module {}"

    def test_forward_reference_in_graph_region(self):
        module = parse_ir(CYCLIC_EGRAPH)
        text = print_ir(module)
        assert print_ir(parse_ir(text)) == text

    def test_comments_ignored(self):
        module = parse_ir("// leading comment\n" + MUL_BY_TWO)
        assert verify(module) == []

    def test_syntax_error_has_position(self):
        with pytest.raises(ParseError) as info:
            parse_ir('func.func() {sym_name = "f"} {\n^bb0(%a : i64):\n  %x = arith.addi(%a %a) : i64\n}\n')
        assert info.value.line == 3

    def test_unknown_op_in_strict_mode(self):
        with pytest.raises(ParseError):
            parse_ir('func.func() {sym_name = "f"} {\n^bb0(%a : i64):\n  %x = foo.bar(%a) : i64\n'
                     '  func.return(%x)\n}\n')

    def test_undefined_value(self):
        with pytest.raises(ParseError):
            parse_ir('func.func() {sym_name = "f"} {\n^bb0(%a : i64):\n  func.return(%nope)\n}\n')

    def test_functions_have_separate_scopes(self):
        text = MUL_BY_TWO + MUL_BY_TWO.replace('"f"', '"g"')
        module = parse_ir(text)
        assert verify(module) == []

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_print_parse_print_is_stable(self, seed):
        import random
        text = oracles.random_int_function(random.Random(seed))
        once = print_ir(parse_ir(text))
        assert print_ir(parse_ir(once)) == once


class TestAttributes:
    def test_structural_equality_and_hash(self):
        assert IntegerAttr(3) == IntegerAttr(3)
        assert hash(StringAttr("x")) == hash(StringAttr("x"))
        assert FloatAttr(0.0) != FloatAttr(-0.0)
        assert FloatAttr(float("nan")) == FloatAttr(float("nan"))

    def test_float_round_trip_exact(self):
        module = parse_ir('func.func() {sym_name = "f"} {\n^bb0():\n'
                          '  %c = arith.constant {value = 0.1 : f64} : f64\n  func.return(%c)\n}\n')
        again = parse_ir(print_ir(module))
        assert body_of(again).first_op.attributes["value"].value == 0.1


class TestRegions:
    def test_graph_region_needs_one_block(self):
        module = parse_ir(CYCLIC_EGRAPH)
        egraph = next(op for op in module.walk() if op.name == "eqsat.egraph")
        assert egraph.regions[0].kind == RegionKind.GRAPH
        egraph.regions[0].add_block(Block())
        assert verify(module) != []

    def test_registry_has_builtin_dialects(self):
        reg = default_registry()
        for name in ["func.func", "func.return", "arith.shli", "math.powf", "cplx.div",
                     "eqsat.const_eclass"]:
            assert reg.get(name) is not None
