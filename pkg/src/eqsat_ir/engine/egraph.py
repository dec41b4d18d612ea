"""Union-find and hashcons index over the eclass ops of one ``eqsat.egraph``.

The IR is the e-graph: each ``eqsat.eclass`` op is an e-class whose operands
are its e-nodes, and every e-node is an ordinary op whose operands are e-class
results. This view keeps the bookkeeping needed to treat it as one:

* ``find`` maps any eclass op id ever seen to the id of the live eclass op
  that now represents it;
* the hashcons maps ``(name, attributes, canonical operand classes)`` to the
  unique e-node with that key;
* ``pending`` collects classes whose parents must be re-keyed by ``rebuild``.

Unions merge eclass ops physically: the survivor takes the other's operands
and uses, and the other op is erased.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..analysis.interval import PREDICATE_FUNCTIONS
from ..dialects.insert import wrap_unclassed
from ..dialects.ops import EQSAT_CLASS_OPS, fold_values
from ..ir.attributes import Attribute
from ..ir.builder import build_operation
from ..ir.core import BlockArgument, Operation, OpResult, Value
from ..ir.registry import Registry, default_registry

EQSAT_OPS = frozenset(EQSAT_CLASS_OPS + ("eqsat.egraph", "eqsat.yield"))


class EGraphError(Exception):
    pass


def attrs_key(attributes: dict) -> tuple:
    return tuple(sorted(attributes.items(), key=lambda kv: kv[0]))


@dataclass
class _AnalysisState:
    analysis: object
    seeds: dict
    data: dict[int, object] = field(default_factory=dict)


class EGraphView:
    def __init__(self, egraph: Operation, registry: Optional[Registry] = None) -> None:
        if egraph.name != "eqsat.egraph":
            raise EGraphError(f"expected eqsat.egraph, got {egraph.name}")
        self.egraph = egraph
        self.block = egraph.regions[0].block
        self.registry = registry or default_registry()
        self.parent: dict[int, int] = {}
        self.class_ops: dict[int, Operation] = {}
        self.node_class: dict[int, int] = {}
        self.hashcons: dict[tuple, Operation] = {}
        self.node_key: dict[int, tuple] = {}
        self.pending: list[int] = []
        self.enode_count = 0
        self.diagnostics: list[str] = []
        self.analyses: dict[str, _AnalysisState] = {}
        self._analysis_pending: set[int] = set()
        # Counters read and reset by the rewrite driver.
        self.created = 0
        self.unions = 0
        self._scan()

    # -- construction ------------------------------------------------------
    def _scan(self) -> None:
        last = self.block.last_op
        if last is None or last.name != "eqsat.yield":
            raise EGraphError("egraph body must end with eqsat.yield")
        self.yield_op = last
        wrap_unclassed(self.egraph, self.registry)
        for op in self.block.ops:
            if op.name in EQSAT_CLASS_OPS:
                self.parent[op.id] = op.id
                self.class_ops[op.id] = op
        for cls in self.class_ops.values():
            for v in cls.operands:
                if isinstance(v, BlockArgument):
                    self.enode_count += 1
                elif isinstance(v, OpResult) and v.op.name not in EQSAT_OPS:
                    if v.op.id in self.node_class:
                        raise EGraphError(f"{v.op.name}#{v.op.id} belongs to two e-classes")
                    self.node_class[v.op.id] = cls.id
                else:
                    raise EGraphError(f"eclass#{cls.id} operand is not an e-node result")
        nodes = []
        for op in self.block.ops:
            if op.name in EQSAT_OPS:
                continue
            if len(op.results) != 1 or op.regions:
                raise EGraphError(f"{op.name}: e-nodes must have one result and no regions")
            if op.id not in self.node_class:
                raise EGraphError(f"{op.name}#{op.id} is not a member of any e-class")
            for v in op.operands:
                if not (isinstance(v, OpResult) and v.op.name in EQSAT_CLASS_OPS):
                    raise EGraphError(f"{op.name}#{op.id}: operand is not an e-class result")
            self.enode_count += 1
            nodes.append(op)
        for op in nodes:
            if op.parent is not None:
                self._repair(op)
        self.rebuild()
        self.created = self.unions = 0

    # -- queries -----------------------------------------------------------
    def find(self, cid: int) -> int:
        root = cid
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[cid] != root:
            self.parent[cid], cid = root, self.parent[cid]
        return root

    def class_of_value(self, value: Value) -> int:
        if not (isinstance(value, OpResult) and value.op.id in self.parent):
            raise EGraphError(f"{value!r} is not an e-class result")
        return self.find(value.op.id)

    def class_of_node(self, op: Operation) -> int:
        return self.find(self.node_class[op.id])

    def class_op(self, cid: int) -> Operation:
        return self.class_ops[self.find(cid)]

    def class_value(self, cid: int) -> Value:
        return self.class_op(cid).results[0]

    def classes(self) -> list[int]:
        """Canonical class ids in block order."""
        return [op.id for op in self.block.ops if op.name in EQSAT_CLASS_OPS]

    def nodes(self) -> list[Operation]:
        """Live e-nodes in block order."""
        return [op for op in self.block.ops if op.name not in EQSAT_OPS]

    def members(self, cid: int) -> list[Value]:
        return list(self.class_op(cid).operands)

    def parents(self, cid: int) -> list[Operation]:
        return [u for u in self.class_value(cid).users() if u.name not in EQSAT_OPS]

    def constant_of(self, cid: int) -> Optional[Attribute]:
        return self.class_op(cid).attributes.get("cst")

    def key_of(self, op: Operation) -> tuple:
        return (op.name, attrs_key(op.attributes),
                tuple(self.class_of_value(v) for v in op.operands))

    def lookup(self, name: str, operand_classes: Sequence[int], attributes: Optional[dict] = None) -> Optional[int]:
        key = (name, attrs_key(attributes or {}), tuple(self.find(c) for c in operand_classes))
        hit = self.hashcons.get(key)
        return None if hit is None else self.class_of_node(hit)

    def roots(self) -> list[int]:
        return [self.class_of_value(v) for v in self.yield_op.operands]

    # -- mutation ----------------------------------------------------------
    def _new_class(self, node: Operation, cst: Optional[Attribute] = None) -> int:
        self.block.insert_before(node, self.yield_op)
        if cst is None:
            cls = Operation("eqsat.eclass", [node.results[0]], [node.results[0].type])
        else:
            cls = Operation("eqsat.const_eclass", [node.results[0]], [node.results[0].type],
                            {"cst": cst})
        self.block.insert_before(cls, self.yield_op)
        self.parent[cls.id] = cls.id
        self.class_ops[cls.id] = cls
        self.node_class[node.id] = cls.id
        key = self.key_of(node)
        self.hashcons[key] = node
        self.node_key[node.id] = key
        self.enode_count += 1
        self.created += 1
        for st in self.analyses.values():
            st.data[cls.id] = self._make(st, node)
        return cls.id

    def add_constant(self, attr: Attribute) -> int:
        """Class of the constant ``attr``, creating it if needed."""
        key = ("arith.constant", (("value", attr),), ())
        hit = self.hashcons.get(key)
        if hit is not None:
            return self.class_of_node(hit)
        node = Operation("arith.constant", [], [attr.type], {"value": attr})  # type: ignore[attr-defined]
        return self._new_class(node, attr)

    def add_op(self, name: str, operand_classes: Sequence[int], attributes: Optional[dict] = None) -> int:
        """Class of ``name(operands)``: a hashcons hit, a folded constant or a new e-node."""
        attributes = dict(attributes or {})
        classes = [self.find(c) for c in operand_classes]
        hit = self.lookup(name, classes, attributes)
        if hit is not None:
            return hit
        values = [self.class_value(c) for c in classes]
        node = build_operation(name, values, attributes, registry=self.registry)
        if len(node.results) != 1:
            node.drop_all_references()
            raise EGraphError(f"{name}: e-nodes must have exactly one result")
        folded = self._fold(node)
        if folded is not None:
            node.drop_all_references()
            return self.add_constant(folded)
        return self._new_class(node)

    def _fold(self, node: Operation) -> Optional[Attribute]:
        if not node.operands:
            return None
        consts = [self.constant_of(self.class_of_value(v)) for v in node.operands]
        if any(c is None for c in consts):
            return None
        definition = self.registry.get(node.name)
        if definition is None:
            return None
        return fold_values(definition, node.attributes, consts, node.results[0].type)

    def union(self, a: int, b: int) -> int:
        """Merge two classes; returns the surviving canonical id."""
        a, b = self.find(a), self.find(b)
        if a == b:
            return a
        A, B = self.class_ops[a], self.class_ops[b]
        if A.results[0].type != B.results[0].type:
            raise EGraphError(f"cannot union {A.results[0].type} class with {B.results[0].type} class")
        # The class with more operands survives (fewer IR mutations); ties go to the older op.
        if (len(B.operands), -B.id) > (len(A.operands), -A.id):
            A, B, a, b = B, A, b, a
        present = set(A.operands)
        merged = list(A.operands) + [v for v in B.operands if v not in present]
        B.results[0].replace_all_uses_with(A.results[0])
        B.set_operands(())
        B.erase()
        A.set_operands(merged)
        if A.name == "eqsat.const_eclass":
            A.name = "eqsat.eclass"  # a const_eclass has exactly one operand
        cst_a, cst_b = A.attributes.get("cst"), B.attributes.get("cst")
        if cst_a is not None and cst_b is not None and cst_a != cst_b:
            del A.attributes["cst"]
            self.diagnostics.append(
                f"union of classes with different constants {cst_a} and {cst_b}"
            )
        elif cst_a is None and cst_b is not None:
            A.attributes["cst"] = cst_b
        self.parent[b] = a
        del self.class_ops[b]
        self.pending.append(a)
        self.unions += 1
        for st in self.analyses.values():
            old_a, old_b = st.data.get(a), st.data.get(b)
            new = st.analysis.combine(old_a, old_b)  # type: ignore[attr-defined]
            st.data[a] = new
            st.data.pop(b, None)
            if new != old_a or new != old_b:
                self._analysis_pending.add(a)
        return a

    def _erase_node(self, op: Operation) -> None:
        cid = self.find(self.node_class.pop(op.id))
        cls = self.class_ops[cid]
        remaining = [v for v in cls.operands if v is not op.results[0]]
        if not remaining:
            raise EGraphError(f"erasing {op.name}#{op.id} would empty its e-class")
        cls.set_operands(remaining)
        key = self.node_key.pop(op.id, None)
        if key is not None and self.hashcons.get(key) is op:
            del self.hashcons[key]
        op.erase()
        self.enode_count -= 1

    def _repair(self, op: Operation) -> int:
        old = self.node_key.pop(op.id, None)
        if old is not None and self.hashcons.get(old) is op:
            del self.hashcons[old]
        key = self.key_of(op)
        existing = self.hashcons.get(key)
        if existing is not None and existing is not op:
            repairs = 0
            a, b = self.class_of_node(op), self.class_of_node(existing)
            if a != b:
                self.union(a, b)
                repairs = 1
            self._erase_node(op)
            return repairs
        self.hashcons[key] = op
        self.node_key[op.id] = key
        folded = self._fold(op)
        if folded is not None:
            c = self.add_constant(folded)
            if self.find(c) != self.class_of_node(op):
                self.union(c, self.class_of_node(op))
                return 1
        return 0

    def rebuild(self) -> int:
        """Restore congruence and the hashcons; returns the number of repair unions."""
        repairs = 0
        while True:
            while self.pending or self._analysis_pending:
                while self.pending:
                    todo = sorted({self.find(c) for c in self.pending})
                    self.pending.clear()
                    for c in todo:
                        for p in self.parents(self.find(c)):
                            if p.parent is not None:
                                repairs += self._repair(p)
                self._propagate_analyses()
            if not self._run_modify_hooks():
                return repairs

    def _run_modify_hooks(self) -> bool:
        """Give each analysis with a ``modify(view, cid, element)`` method a pass over
        every class once the graph is congruent; true if a hook changed the graph."""
        hooks = [st for st in self.analyses.values() if callable(getattr(st.analysis, "modify", None))]
        if not hooks:
            return False
        for st in hooks:
            for cid in self.classes():
                cid = self.find(cid)
                st.analysis.modify(self, cid, st.data[cid])  # type: ignore[attr-defined]
        return bool(self.pending or self._analysis_pending)

    # -- e-class analyses ----------------------------------------------------
    def _leaf_element(self, st: _AnalysisState, value: Value):
        return st.seeds.get(value, st.analysis.top(value.type))  # type: ignore[attr-defined]

    def _make(self, st: _AnalysisState, node: Operation):
        operands = [st.data[self.class_of_value(v)] for v in node.operands]
        return st.analysis.transfer(  # type: ignore[attr-defined]
            node.name, node.attributes, operands, node.results[0].type)

    def _propagate_analyses(self) -> None:
        # Descending updates from a sound state stay sound, so a budget is safe.
        budget = 4 * (len(self.class_ops) + 1)
        work = deque(sorted(self._analysis_pending))
        queued = set(work)
        self._analysis_pending.clear()
        while work and budget > 0:
            cid = self.find(work.popleft())
            queued.discard(cid)
            budget -= 1
            for p in self.parents(cid):
                pc = self.class_of_node(p)
                for st in self.analyses.values():
                    new = st.analysis.combine(st.data[pc], self._make(st, p))  # type: ignore[attr-defined]
                    if new != st.data[pc]:
                        st.data[pc] = new
                        if pc not in queued:
                            queued.add(pc)
                            work.append(pc)

    def register_analysis(self, analysis, seeds: Optional[dict] = None) -> None:
        from ..analysis.dataflow import run_dataflow

        name = analysis.name
        if name in self.analyses:
            raise EGraphError(f"analysis {name} is already registered")
        st = _AnalysisState(analysis, dict(seeds or {}))
        elems = run_dataflow(self.egraph, analysis, st.seeds)
        for cid, op in self.class_ops.items():
            st.data[cid] = elems[op.results[0]]
        self.analyses[name] = st

    def analysis_data(self, name: str, cid: int):
        return self.analyses[name].data[self.find(cid)]

    def holds(self, predicate: str, values: Sequence[Value]) -> bool:
        """Whether the interval analysis proves ``predicate`` for every value."""
        st = self.analyses.get("interval")
        if st is None:
            return False
        check = PREDICATE_FUNCTIONS[predicate]
        return all(check(st.data[self.class_of_value(v)]) for v in values)


def register_eclass_analysis(view: EGraphView, analysis, seeds: Optional[dict] = None) -> None:
    """Maintain ``analysis`` per e-class: transfer on insertion, combine on union.

    An analysis that also defines ``modify(view, cid, element)`` gets a pass
    over every class at the end of each rebuild, where it may add e-nodes or
    unions (for example to pin a class to a constant it has proven).
    """
    view.register_analysis(analysis, seeds)
