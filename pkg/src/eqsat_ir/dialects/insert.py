"""Turn a pure straight-line function into a trivial e-graph."""

from __future__ import annotations

from typing import Optional

from ..ir.core import Block, Operation, Region, RegionKind, Value
from ..ir.registry import Registry, Trait, default_registry


class InsertionError(Exception):
    pass


def _wrap(value: Value, block: Block, after: Optional[Operation], op: Operation) -> Value:
    if after is None:
        if block.first_op is None:
            block.append(op)
        else:
            block.insert_before(op, block.first_op)
    else:
        block.insert_after(op, after)
    result = op.results[0]
    if value.name_hint:
        result.name_hint = f"c_{value.name_hint}"
    for use in list(value.uses):
        if use.operation is not op:
            use.operation.set_operand(use.index, result)
    return result


def insert_eclasses(func: Operation, registry: Optional[Registry] = None) -> Operation:
    """Wrap ``func``'s body in an ``eqsat.egraph`` with one e-class per value.

    Block arguments and non-constant results get an ``eqsat.eclass``; constant
    results get an ``eqsat.const_eclass`` carrying the constant as ``cst``.
    """
    registry = registry or default_registry()
    if func.name != "func.func":
        raise InsertionError(f"expected func.func, got {func.name}")
    if len(func.regions) != 1 or len(func.regions[0].blocks) != 1:
        raise InsertionError("function body must be a single block")
    body = func.regions[0].blocks[0]
    ret = body.last_op
    if ret is None or ret.name != "func.return":
        raise InsertionError("function body must end with func.return")
    ops = [op for op in body.ops if op is not ret]
    for op in ops:
        if op.name == "eqsat.egraph" or op.name.startswith("eqsat."):
            raise InsertionError("function already contains an e-graph")
        definition = registry.get(op.name)
        if definition is None or not definition.has(Trait.PURE):
            raise InsertionError(f"{op.name} is not a pure operation")
        if op.regions:
            raise InsertionError(f"{op.name} has regions; only straight-line code is supported")

    graph_block = Block()
    egraph = Operation(
        "eqsat.egraph",
        result_types=[v.type for v in ret.operands],
        regions=[Region(RegionKind.GRAPH, [graph_block])],
    )
    body.insert_before(egraph, ret)

    last: Optional[Operation] = None
    for arg in body.args:
        cls = Operation("eqsat.eclass", [arg], [arg.type])
        _wrap(arg, graph_block, last, cls)
        last = cls
    for op in ops:
        op.detach()
        graph_block.append(op)
        for res in op.results:
            definition = registry.lookup(op.name)
            if definition.has(Trait.CONSTANT):
                cls = Operation("eqsat.const_eclass", [res], [res.type],
                                {"cst": op.attributes["value"]})
            else:
                cls = Operation("eqsat.eclass", [res], [res.type])
            _wrap(res, graph_block, op, cls)
    yielded = list(ret.operands)
    graph_block.append(Operation("eqsat.yield", yielded))
    ret.set_operands(egraph.results)
    for r, v in zip(egraph.results, yielded):
        r.name_hint = "graph_res" if len(yielded) == 1 else f"graph_res{r.index}"
    return func


def wrap_unclassed(egraph: Operation, registry: Optional[Registry] = None) -> int:
    """Give every value in ``egraph`` that is not yet an e-class member its own e-class.

    After a partial extraction, chosen e-nodes and block arguments may be used
    directly by other e-nodes or by the yield. Wrapping them restores the
    invariant that e-nodes and the yield only consume e-class results.
    Returns the number of e-classes created.
    """
    registry = registry or default_registry()
    block = egraph.regions[0].block
    created = 0

    def is_class(op: Operation) -> bool:
        return op.name in ("eqsat.eclass", "eqsat.const_eclass")

    def consumers(value: Value) -> list:
        return [u for u in value.uses
                if u.operation.parent is block and not is_class(u.operation)]

    outside: dict[int, Value] = {}
    for op in block.ops:
        if is_class(op):
            continue
        for v in op.operands:
            defining = v.op if hasattr(v, "op") else None
            if defining is None or defining.parent is not block:
                outside.setdefault(v.id, v)
    for v in outside.values():
        cls = Operation("eqsat.eclass", [v], [v.type])
        if block.first_op is None:
            block.append(cls)
        else:
            block.insert_before(cls, block.first_op)
        for use in consumers(v):
            if use.operation is not cls:
                use.operation.set_operand(use.index, cls.results[0])
        created += 1
    for op in list(block.ops):
        if is_class(op) or op.name == "eqsat.yield" or len(op.results) != 1:
            continue
        res = op.results[0]
        if any(is_class(u.operation) for u in res.uses):
            continue
        definition = registry.get(op.name)
        if definition is not None and definition.has(Trait.CONSTANT) and "value" in op.attributes:
            cls = Operation("eqsat.const_eclass", [res], [res.type], {"cst": op.attributes["value"]})
        else:
            cls = Operation("eqsat.eclass", [res], [res.type])
        block.insert_after(cls, op)
        for use in consumers(res):
            if use.operation is not cls:
                use.operation.set_operand(use.index, cls.results[0])
        created += 1
    return created
