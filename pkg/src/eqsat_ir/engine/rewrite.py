"""Applying matches and driving equality saturation."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from ..ir.attributes import number_attr
from ..patterns.lowering import lower_combined, lower_single
from ..patterns.program import ApplyConstraint, CreateConstant, CreateOp, MatcherProgram, Replace
from ..patterns.rules import Pattern
from .compare import match_key
from .egraph import EGraphView
from .ematch import MatchRecord, ematch


@dataclass
class ApplyStats:
    new_enodes: int = 0
    unions: int = 0
    aborted: int = 0
    applied: int = 0
    skipped: int = 0
    truncated: bool = False


def apply_matches(view: EGraphView, matches: Sequence[MatchRecord],
                  max_enodes: Optional[int] = None) -> ApplyStats:
    """Instantiate each match's rewrite and union it with the matched root.

    Matches are re-canonicalized first, since earlier applications in the same
    batch may have merged their classes; duplicates are applied once. With
    ``max_enodes`` set, the batch stops before a rewrite that could push the
    e-node count past the limit.
    """
    stats = ApplyStats()
    view.created = view.unions = 0
    seen: set[tuple] = set()
    for m in matches:
        key = match_key(view, m)
        if key in seen:
            stats.skipped += 1
            continue
        seen.add(key)
        assert m.program is not None
        rewriter = m.program.rewriters[m.pattern_index]
        if max_enodes is not None:
            worst = sum(isinstance(i, (CreateOp, CreateConstant)) for i in rewriter.instructions)
            if view.enode_count + worst > max_enodes:
                stats.truncated = True
                break
        regs: dict[int, int] = {i: view.find(c) for i, (_, c) in enumerate(m.bindings)}
        regs[rewriter.root_register] = view.find(m.root)
        aborted = False
        for instr in rewriter.instructions:
            if isinstance(instr, CreateOp):
                regs[instr.dst] = view.add_op(instr.name, [regs[r] for r in instr.operands])
            elif isinstance(instr, CreateConstant):
                type_ = view.class_value(regs[instr.type_of]).type
                try:
                    attr = number_attr(instr.literal, type_)
                except ValueError:
                    aborted = True
                    break
                regs[instr.dst] = view.add_constant(attr)
            elif isinstance(instr, ApplyConstraint):
                values = [view.class_value(regs[r]) for r in instr.args]
                if not view.holds(instr.predicate, values):
                    aborted = True  # ops inserted so far are kept
                    break
            elif isinstance(instr, Replace):
                view.union(regs[instr.root], regs[instr.value])
            else:
                raise TypeError(f"{type(instr).__name__} is not a rewriter instruction")
        if aborted:
            stats.aborted += 1
        else:
            stats.applied += 1
    stats.new_enodes = view.created
    stats.unions = view.unions
    return stats


class StopReason(enum.Enum):
    SATURATED = "saturated"
    NODE_LIMIT = "node_limit"
    ITERATION_LIMIT = "iteration_limit"
    TIMEOUT = "timeout"


class MatchMode(enum.Enum):
    COMBINED = "combined"
    INDIVIDUAL = "individual"


@dataclass
class SaturationConfig:
    max_iterations: Optional[int] = None
    max_enodes: int = 4000
    wall_timeout: Optional[float] = None  # seconds
    match_mode: MatchMode = MatchMode.COMBINED


@dataclass
class IterationStats:
    iteration: int
    matches: int
    new_enodes: int
    unions: int
    enodes: int
    ms: float
    aborted: int = 0

    def line(self) -> str:
        return (f"iter={self.iteration} matches={self.matches} new_enodes={self.new_enodes} "
                f"unions={self.unions} enodes={self.enodes} ms={self.ms:.3f}")


@dataclass
class SaturationResult:
    iterations: int
    reason: StopReason
    per_iteration: list[IterationStats] = field(default_factory=list)
    match_log: list[list[MatchRecord]] = field(default_factory=list)

    @property
    def matches_per_iteration(self) -> list[int]:
        return [s.matches for s in self.per_iteration]


def compile_programs(patterns: Sequence[Pattern], mode: MatchMode) -> list[MatcherProgram]:
    if not patterns:
        return []
    if mode == MatchMode.COMBINED:
        return [lower_combined(patterns)]
    return [lower_single(p) for p in patterns]


def collect_matches(view: EGraphView, programs: Sequence[MatcherProgram]) -> list[MatchRecord]:
    matches: list[MatchRecord] = []
    for program in programs:
        matches.extend(ematch(program, view))
    return matches


def saturate(view: EGraphView, rules: Union[Sequence[Pattern], Sequence[MatcherProgram]],
             config: Optional[SaturationConfig] = None, keep_matches: bool = False) -> SaturationResult:
    """Run match/apply/rebuild rounds until a fixpoint or a limit.

    ``rules`` is a list of patterns (compiled per ``config.match_mode``) or of
    already compiled programs. An iteration that would cross the node limit
    applies only the matches that fit and then stops the run.
    """
    config = config or SaturationConfig()
    if rules and isinstance(rules[0], MatcherProgram):
        programs = list(rules)  # type: ignore[arg-type]
    else:
        programs = compile_programs(list(rules), config.match_mode)  # type: ignore[arg-type]
    view.rebuild()
    if view.enode_count > config.max_enodes:
        raise ValueError(f"e-graph already has {view.enode_count} e-nodes (limit {config.max_enodes})")
    result = SaturationResult(0, StopReason.SATURATED)
    start = time.perf_counter()
    while True:
        if config.max_iterations is not None and result.iterations >= config.max_iterations:
            result.reason = StopReason.ITERATION_LIMIT
            break
        if config.wall_timeout is not None and time.perf_counter() - start > config.wall_timeout:
            result.reason = StopReason.TIMEOUT
            break
        t0 = time.perf_counter()
        matches = collect_matches(view, programs)
        stats = apply_matches(view, matches, config.max_enodes)
        view.rebuild()
        # Counters include constants and unions produced while rebuilding.
        created, unions = view.created, view.unions
        result.iterations += 1
        if keep_matches:
            result.match_log.append(matches)
        result.per_iteration.append(IterationStats(
            result.iterations, len(matches), created, unions, view.enode_count,
            (time.perf_counter() - t0) * 1000, stats.aborted,
        ))
        if created == 0 and unions == 0 and not stats.truncated:
            result.reason = StopReason.SATURATED
            break
        if stats.truncated or view.enode_count >= config.max_enodes:
            result.reason = StopReason.NODE_LIMIT
            break
    return result
