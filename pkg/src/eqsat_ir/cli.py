"""``eqsat-opt``: run passes over textual IR or FPCore and print the result.

Program text goes to stdout; statistics, reports and analysis dumps go to
stderr.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, TextIO

from .analysis.interval import IntervalAnalysis
from .engine.compare import isomorphic, match_set
from .engine.egraph import EGraphView
from .engine.rewrite import (
    MatchMode, SaturationConfig, apply_matches, collect_matches, compile_programs, saturate,
)
from .extraction.cost import CostModel, load_cost_config
from .extraction.replace import annotate_selection, replace_selected, topo_sort
from .extraction.select import select_greedy, select_ilp
from .dialects.insert import insert_eclasses
from .dialects.ops import EQSAT_CLASS_OPS
from .fp.fpcore import format_fpcore, function_to_fpcore, parse_fpcore, to_function
from .fp.improve import ImproveConfig, improve_detailed
from .ir.core import BlockArgument, Operation, OpResult
from .ir.parser import parse_ir
from .ir.printer import format_attribute, print_ir
from .ir.verifier import verify
from .patterns.rules import Pattern, parse_patterns

PASSES = ("insert-eclasses", "saturate", "select", "select-greedy", "select-ilp", "replace",
          "topo-sort", "print-analysis", "emit-dot")
ANALYSES = ("interval",)


class PipelineError(Exception):
    pass


class BenchMismatch(AssertionError):
    pass


def resolve_path(path: str) -> Path:
    """``path`` itself, or the packaged data file of that name."""
    p = Path(path)
    if p.exists():
        return p
    packaged = resources.files("eqsat_ir.data") / p.name
    if packaged.is_file():
        return Path(str(packaged))
    raise FileNotFoundError(f"no such file: {path}")


def read_text(path: str) -> str:
    return resolve_path(path).read_text()


# -- DOT rendering -------------------------------------------------------------

def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _member_label(v) -> str:
    if isinstance(v, BlockArgument):
        return "%" + (v.name_hint or f"arg{v.index}")
    op = v.op
    if op.name == "arith.constant":
        return f"{op.name} {format_attribute(op.attributes['value'])}"
    return op.name


def emit_dot(egraph, name: str = "egraph") -> str:
    """Render an e-graph as DOT: one cluster per class, one node per e-node.

    ``egraph`` is an :class:`EGraphView` or an ``eqsat.egraph`` op. Edges run
    from an e-node to the cluster of each operand class.
    """
    view = egraph if isinstance(egraph, EGraphView) else EGraphView(egraph)
    classes = view.classes()
    index = {cid: i for i, cid in enumerate(classes)}
    node_ids: dict[int, str] = {}
    lines = [f"digraph {_quote(name)} {{", "  compound=true;", "  node [shape=box];"]
    anchors: dict[int, str] = {}
    for cid in classes:
        i = index[cid]
        op = view.class_op(cid)
        label = f"e{i}"
        if op.name == "eqsat.const_eclass":
            label += " cst=" + format_attribute(op.attributes["cst"])
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f"    style=dotted; label={_quote(label)};")
        for j, v in enumerate(view.members(cid)):
            nid = f"n{i}_{j}"
            if isinstance(v, OpResult):
                node_ids[v.op.id] = nid
            lines.append(f"    {nid} [label={_quote(_member_label(v))}];")
            anchors.setdefault(cid, nid)
        lines.append("  }")
    for cid in classes:
        for v in view.members(cid):
            if not isinstance(v, OpResult):
                continue
            src = node_ids[v.op.id]
            for k, o in enumerate(v.op.operands):
                target = view.class_of_value(o)
                lines.append(f"  {src} -> {anchors[target]} "
                             f"[lhead=cluster_{index[target]}, label={k}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- matcher benchmark ---------------------------------------------------------------

def _clone(func: Operation) -> Operation:
    module = parse_ir(print_ir(func))
    return next(op for op in module.walk() if op.name == "func.func")


def _egraph_of(func: Operation) -> Operation:
    return next(op for op in func.walk() if op.name == "eqsat.egraph")


def _fresh_view(func: Operation) -> EGraphView:
    f = _clone(func)
    if not any(op.name == "eqsat.egraph" for op in f.walk()):
        insert_eclasses(f)
    return EGraphView(_egraph_of(f))


@dataclass
class BenchRow:
    name: str
    combined_ms: float
    individual_ms: float
    matches: list[int]
    iterations: int

    @property
    def speedup(self) -> float:
        return self.individual_ms / self.combined_ms if self.combined_ms > 0 else math.nan


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)

    @property
    def geomean_speedup(self) -> float:
        ratios = [r.speedup for r in self.rows if r.speedup > 0 and math.isfinite(r.speedup)]
        if not ratios:
            return math.nan
        return math.exp(sum(math.log(x) for x in ratios) / len(ratios))

    def text(self) -> str:
        out = [f"input={r.name} combined_ms={r.combined_ms:.3f} individual_ms={r.individual_ms:.3f} "
               f"matches={','.join(map(str, r.matches))} iters={r.iterations} "
               f"speedup={r.speedup:.3f}" for r in self.rows]
        out.append(f"geomean_speedup={self.geomean_speedup:.3f}")
        return "\n".join(out) + "\n"


def bench_matching(inputs: Sequence[Operation], rules: Sequence[Pattern], mode: str = "both",
                   max_iterations: int = 5, max_enodes: int = 4000, repeats: int = 1) -> BenchReport:
    """Time matching in combined and individual modes on each input function.

    Both modes match the same e-graph state in every iteration, and the
    combined match set must equal the union of the individual ones; full runs
    in each mode must also end in isomorphic e-graphs. ``mode`` may name a
    single mode to time it alone, without the cross-checks.
    """
    combined = compile_programs(rules, MatchMode.COMBINED)
    individual = compile_programs(rules, MatchMode.INDIVIDUAL)
    report = BenchReport()
    for func in inputs:
        name = func.attributes["sym_name"].value  # type: ignore[attr-defined]
        view = _fresh_view(func)
        t_comb = t_ind = 0.0
        counts: list[int] = []
        iterations = 0
        for _ in range(max_iterations):
            got_comb = got_ind = None
            if mode in ("both", "combined"):
                t0 = time.perf_counter()
                for _ in range(repeats):
                    got_comb = collect_matches(view, combined)
                t_comb += (time.perf_counter() - t0) / repeats
            if mode in ("both", "individual"):
                t0 = time.perf_counter()
                for _ in range(repeats):
                    got_ind = collect_matches(view, individual)
                t_ind += (time.perf_counter() - t0) / repeats
            if got_comb is not None and got_ind is not None:
                if match_set(view, got_comb) != match_set(view, got_ind):
                    raise BenchMismatch(f"{name}: match sets differ in iteration {iterations + 1}")
            matches = got_comb if got_comb is not None else got_ind
            assert matches is not None
            counts.append(len(matches))
            stats = apply_matches(view, matches, max_enodes)
            view.rebuild()
            iterations += 1
            if (view.created == 0 and view.unions == 0) or stats.truncated:
                break
        if mode == "both":
            runs = []
            for m in (MatchMode.COMBINED, MatchMode.INDIVIDUAL):
                v = _fresh_view(func)
                saturate(v, rules, SaturationConfig(max_iterations, max_enodes, match_mode=m))
                runs.append(v)
            if not isomorphic(runs[0], runs[1]):
                raise BenchMismatch(f"{name}: final e-graphs differ between modes")
        report.rows.append(BenchRow(name, t_comb * 1000, t_ind * 1000, counts, iterations))
    return report


# -- pass pipeline ------------------------------------------------------------

@dataclass
class Pipeline:
    module: Operation
    passes: list[str]
    rules: Optional[list[Pattern]] = None
    cost: CostModel = field(default_factory=CostModel)
    select: str = "greedy"
    sat_config: SaturationConfig = field(default_factory=SaturationConfig)
    analysis: str = "interval"
    stats: bool = False
    out: TextIO = sys.stdout
    err: TextIO = sys.stderr
    views: dict[int, EGraphView] = field(default_factory=dict)

    def check(self) -> None:
        selected = False
        for p in self.passes:
            if p not in PASSES:
                raise PipelineError(f"unknown pass '{p}' (known: {', '.join(PASSES)})")
            if p == "saturate" and self.rules is None:
                raise PipelineError("saturate needs --rules")
            if p.startswith("select"):
                selected = True
            if p == "replace" and not selected:
                raise PipelineError("replace needs an earlier select pass")
        if self.analysis not in ANALYSES:
            raise PipelineError(f"unknown analysis '{self.analysis}'")

    def egraphs(self) -> list[tuple[str, EGraphView]]:
        out = []
        for func in self.module.walk():
            if func.name != "func.func":
                continue
            fname = func.attributes["sym_name"].value  # type: ignore[attr-defined]
            for op in func.walk():
                if op.name == "eqsat.egraph":
                    if op.id not in self.views:
                        self.views[op.id] = EGraphView(op)
                    out.append((fname, self.views[op.id]))
        return out

    def run(self) -> None:
        self.check()
        for p in self.passes:
            getattr(self, "_" + p.replace("-", "_"))()
            problems = verify(self.module)
            if problems:
                raise PipelineError(f"verifier failed after {p}: " + "; ".join(problems))

    def _log(self, text: str) -> None:
        if self.stats:
            print(text, file=self.err)

    def _insert_eclasses(self) -> None:
        for func in list(self.module.walk()):
            if func.name == "func.func" and not any(o.name == "eqsat.egraph" for o in func.walk()):
                insert_eclasses(func)

    def _ensure_interval(self, view: EGraphView) -> None:
        if "interval" not in view.analyses:
            view.register_analysis(IntervalAnalysis())

    def _saturate(self) -> None:
        assert self.rules is not None
        programs = compile_programs(self.rules, self.sat_config.match_mode)
        guarded = any(r.constraints for r in self.rules)
        for fname, view in self.egraphs():
            if guarded:
                self._ensure_interval(view)
            result = saturate(view, programs, self.sat_config)
            for s in result.per_iteration:
                self._log(f"func={fname} {s.line()}")
            self._log(f"func={fname} iterations={result.iterations} reason={result.reason.value} "
                      f"enodes={view.enode_count}")

    def _select(self) -> None:
        if self.select == "ilp":
            self._select_ilp()
        else:
            self._select_greedy()

    def _annotate(self, fname: str, view: EGraphView, selection) -> None:
        missing = [r for r in view.roots() if r not in selection.choices]
        if missing:
            raise PipelineError(f"{fname}: no finite-cost program for a result")
        annotate_selection(view, selection)
        self._log(f"func={fname} selected_cost={selection.total_cost}")

    def _select_greedy(self) -> None:
        for fname, view in self.egraphs():
            self._annotate(fname, view, select_greedy(view, self.cost))

    def _select_ilp(self) -> None:
        for fname, view in self.egraphs():
            self._annotate(fname, view, select_ilp(view, self.cost))

    def _replace(self) -> None:
        replace_selected(self.module)
        self.views.clear()

    def _topo_sort(self) -> None:
        for func in self.module.walk():
            if func.name == "func.func":
                topo_sort(func.regions[0])

    def _print_analysis(self) -> None:
        for fname, view in self.egraphs():
            self._ensure_interval(view)
            for i, cid in enumerate(view.classes()):
                print(f"func={fname} class=e{i} {self.analysis}={view.analysis_data(self.analysis, cid)}",
                      file=self.err)

    def _emit_dot(self) -> None:
        for fname, view in self.egraphs():
            self.out.write(emit_dot(view, fname))


def _emit_fpcore(module: Operation, template=None) -> str:
    funcs = [op for op in module.walk() if op.name == "func.func"]
    return "\n".join(format_fpcore(function_to_fpcore(f, template)) for f in funcs) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eqsat-opt", description=__doc__.splitlines()[0])
    ap.add_argument("input", nargs="?", default="-", help="IR or FPCore file ('-' for stdin)")
    ap.add_argument("--passes", default="", help="comma-separated pass list")
    ap.add_argument("--rules", help="rule file")
    ap.add_argument("--cost-config", help="cost configuration file")
    ap.add_argument("--select", choices=("greedy", "ilp"), default="greedy")
    ap.add_argument("--max-enodes", type=int, default=4000)
    ap.add_argument("--max-iters", type=int)
    ap.add_argument("--match-mode", choices=("combined", "individual"), default="combined")
    ap.add_argument("--emit", choices=("ir", "fpcore", "dot"), default=None)
    ap.add_argument("--print-analysis", metavar="NAME",
                    help="dump an analysis per e-class after the pipeline")
    ap.add_argument("--stats", action="store_true", help="print statistics to stderr")
    ap.add_argument("--fpcore", action="store_true", help="input is FPCore")
    ap.add_argument("--improve", action="store_true", help="run accuracy improvement on FPCore")
    ap.add_argument("--samples", type=int, default=256)
    ap.add_argument("--precision-bits", type=int, default=1024)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--bench", action="store_true",
                    help="compare combined and individual matching on every function")
    return ap


def _run(args, out: TextIO, err: TextIO) -> int:
    text = sys.stdin.read() if args.input == "-" else read_text(args.input)
    rules = parse_patterns(read_text(args.rules)) if args.rules else None
    mode = MatchMode(args.match_mode)
    if args.fpcore and args.improve:
        if rules is None:
            raise PipelineError("--improve needs --rules")
        config = ImproveConfig(args.samples, args.precision_bits, args.max_enodes, args.max_iters,
                               match_mode=mode, seed=args.seed)
        result = improve_detailed(text, rules, config)
        out.write(result.text + "\n")
        print(result.report.line(), file=err)
        if args.stats:
            for s in result.saturation.per_iteration:
                print(s.line(), file=err)
        return 0
    template = None
    if args.fpcore:
        template = parse_fpcore(text)
        module = to_function(template)
    else:
        module = parse_ir(text)
    problems = verify(module)
    if problems:
        raise PipelineError("input does not verify: " + "; ".join(problems))
    if args.bench:
        if rules is None:
            raise PipelineError("--bench needs --rules")
        funcs = [op for op in module.walk() if op.name == "func.func"]
        report = bench_matching(funcs, rules, max_iterations=args.max_iters or 5,
                                max_enodes=args.max_enodes)
        out.write(report.text())
        return 0
    passes = [p.strip() for p in args.passes.split(",") if p.strip()]
    cost = load_cost_config(read_text(args.cost_config)) if args.cost_config else CostModel()
    pipeline = Pipeline(module, passes, rules, cost, args.select,
                        SaturationConfig(args.max_iters, args.max_enodes, match_mode=mode),
                        args.print_analysis or "interval", args.stats, out, err)
    pipeline.run()
    if args.print_analysis:
        pipeline._print_analysis()
    emit = args.emit or ("fpcore" if args.fpcore else "ir")
    if emit == "ir":
        out.write(print_ir(module))
    elif emit == "fpcore":
        if any(op.name in EQSAT_CLASS_OPS for op in module.walk()):
            raise PipelineError("cannot print FPCore while e-classes remain; select and replace first")
        out.write(_emit_fpcore(module, template))
    else:
        for fname, view in pipeline.egraphs():
            out.write(emit_dot(view, fname))
    return 0


def main(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return _run(args, out, err)
    except FileNotFoundError as exc:
        print(f"eqsat-opt: {exc}", file=err)
        return 1
    except Exception as exc:  # parse, verify and pipeline errors all end the run
        print(f"eqsat-opt: error: {type(exc).__name__}: {exc}", file=err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
