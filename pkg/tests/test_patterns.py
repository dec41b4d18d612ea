import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from eqsat_ir.engine import ematch
from eqsat_ir.ir import parse_ir
from eqsat_ir.patterns import (
    PConst, POp, PVar, PatternError, check_program, format_program, lower_combined,
    lower_single, parse_patterns,
)
from eqsat_ir.patterns.program import (
    AreEqual, CheckAttribute, CheckOperandCount, CheckOperationName, Choose, Finalize,
    GetDefiningOp, RecordMatch,
)

import oracles

ADD_ZERO = "(rule add-zero (arith.addi ?a (const 0)) ?a)"
MUL2 = "(rule mul2-shift (arith.muli ?x (const 2)) (arith.shli ?x (const 1)))"
POW_GUARD = ("(rule pow-mul (math.powf ?a (arith.mulf ?b ?c)) (math.powf (math.powf ?a ?b) ?c)"
             " :when ((positive ?a) (positive (math.powf ?a ?b))))")


def eager_violations(program):
    """Paths where a second GetDefiningOp runs before the first defined op is name-checked."""
    instrs = program.matcher
    bad = []
    for i, instr in enumerate(instrs):
        if not isinstance(instr, GetDefiningOp):
            continue
        reg = instr.dst
        stack, seen = [instr.succ], set()
        while stack:
            pc = stack.pop()
            if pc in seen:
                continue
            seen.add(pc)
            cur = instrs[pc]
            if isinstance(cur, CheckOperationName) and cur.op == reg:
                continue
            if isinstance(cur, GetDefiningOp):
                bad.append((i, pc))
                continue
            if isinstance(cur, Choose):
                stack.extend(cur.branches)
            elif not isinstance(cur, Finalize):
                stack.append(cur.succ)  # failure edges lead to Finalize
    return bad


class TestParse:
    def test_add_zero(self):
        (p,) = parse_patterns(ADD_ZERO)
        assert p.name == "add-zero"
        assert p.lhs == POp("arith.addi", (PVar("a"), PConst(0)))
        assert p.rhs == PVar("a")

    def test_mul2_shift(self):
        (p,) = parse_patterns(MUL2)
        assert p.rhs == POp("arith.shli", (PVar("x"), PConst(1)))

    def test_guard_is_rewrite_time(self):
        (p,) = parse_patterns(POW_GUARD)
        assert len(p.constraints) == 2
        assert [c.predicate for c in p.match_constraints] == ["positive"]
        assert len(p.rewrite_constraints) == 1
        assert isinstance(p.rewrite_constraints[0].args[0], POp)

    def test_benefit_and_comments(self):
        (p,) = parse_patterns("; comment\n(rule r (arith.addi ?a ?b) (arith.addi ?b ?a) :benefit 3)")
        assert p.benefit == 3

    def test_printing_round_trips(self):
        for text in (ADD_ZERO, MUL2, POW_GUARD):
            (p,) = parse_patterns(text)
            assert parse_patterns(str(p)) == [p]

    @pytest.mark.parametrize("text", [
        "(rule r (arith.addi ?a ?b) ?c)",                         # unbound variable
        "(rule r (arith.addi ?a ?b) ?a :when ((prime ?a)))",      # unknown predicate
        "(rule r (arith.addi ?a) ?a)",                            # arity mismatch
        "(rule r ?a ?a)",                                         # root must be an op
        "(rule r (nope.op ?a) ?a)",                               # unknown op
        "(rule r (arith.addi ?a ?b) ?a",                          # unbalanced
        "(rule r (arith.addi ?a ?b) ?a :when (positive ?a))",    # :when needs a list
    ])
    def test_errors(self, text):
        with pytest.raises(PatternError):
            parse_patterns(text)


class TestLowerSingle:
    def test_add_zero_shape(self):
        prog = lower_single(parse_patterns(ADD_ZERO)[0])
        kinds = [type(i).__name__ for i in prog.matcher]
        assert kinds[0] == "CheckOperationName"
        assert "GetDefiningOp" in kinds
        assert prog.count(CheckAttribute) == 1
        assert prog.count(RecordMatch) == 1
        assert isinstance(prog.matcher[-1], Finalize)
        assert prog.count(Choose) == 0
        assert check_program(prog) == []

    def test_repeated_variable_gives_are_equal(self):
        (p,) = parse_patterns("(rule r (arith.addi ?a (arith.muli ?a ?b)) ?a)")
        assert lower_single(p).count(AreEqual) == 1

    def test_naive_order_defers_checks(self):
        (p,) = parse_patterns("(rule r (arith.addi (arith.addi (arith.addi ?a ?b) ?c) ?d) ?a)")
        naive = lower_single(p, eager=False)
        eager = lower_single(p)
        assert eager_violations(naive) != []
        assert eager_violations(eager) == []


class TestLowerCombined:
    def test_unrelated_patterns_choose(self):
        prog = lower_combined(parse_patterns(ADD_ZERO + MUL2))
        first = prog.matcher[0]
        assert isinstance(first, Choose) and len(first.branches) == 2

    def test_shared_prefix_checked_once(self):
        rules = parse_patterns(ADD_ZERO + "(rule r2 (arith.addi ?a (const 1)) ?a)")
        prog = lower_combined(rules)
        names = [i for i in prog.matcher if isinstance(i, CheckOperationName)
                 and i.name == "arith.addi"]
        assert len(names) == 1
        assert prog.count(CheckOperandCount) == 1  # the root arity check is shared too

    def test_every_choose_branches(self):
        rules = parse_patterns(read_fp_rules())
        prog = lower_combined(rules)
        for instr in prog.matcher:
            if isinstance(instr, Choose):
                assert len(instr.branches) >= 2
        assert eager_violations(prog) == []
        assert check_program(prog) == []
        assert "Choose" in format_program(prog)


def read_fp_rules():
    from eqsat_ir.cli import read_text
    return read_text("fp.rules")


# -- random pattern sets: fused matching equals the union of single matching ----

OPS = ["arith.addi", "arith.muli", "arith.subi"]


def random_term(rng, depth):
    r = rng.random()
    if depth == 0 or r < 0.3:
        return f"?{rng.choice('abc')}"
    if r < 0.4:
        return f"(const {rng.randint(-1, 2)})"
    return f"({rng.choice(OPS)} {random_term(rng, depth - 1)} {random_term(rng, depth - 1)})"


def random_rules(rng, n):
    out = []
    for i in range(n):
        lhs = f"({rng.choice(OPS)} {random_term(rng, 2)} {random_term(rng, 2)})"
        vars_ = sorted(set(t for t in lhs.replace("(", " ").replace(")", " ").split()
                           if t.startswith("?")))
        rhs = vars_[0] if vars_ else "(const 0)"
        out.append(f"(rule r{i} {lhs} {rhs})")
    return parse_patterns("\n".join(out))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_fused_matches_equal_union_of_single(seed):
    rng = random.Random(seed)
    rules = random_rules(rng, rng.randint(1, 6))
    func = oracles.first_func(parse_ir(oracles.random_int_function(rng, max_ops=16)))
    fused = Counter(m.key for m in ematch(lower_combined(rules), func))
    single = Counter()
    for p in rules:
        single.update(m.key for m in ematch(lower_single(p), func))
    assert fused == single
    assert eager_violations(lower_combined(rules)) == []
