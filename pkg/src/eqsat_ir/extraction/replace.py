"""Writing a selection back into the IR."""

from __future__ import annotations

import heapq
from typing import Optional

from ..dialects.insert import wrap_unclassed
from ..dialects.ops import EQSAT_CLASS_OPS
from ..ir.attributes import IntegerAttr
from ..ir.core import Block, Operation, OpResult, Region, Value
from ..engine.egraph import EGraphView
from .select import ExtractionError, Selection

SELECTED_ATTR = "eqsat.selected"


def annotate_selection(view: EGraphView, selection: Selection) -> None:
    """Record each choice as an ``eqsat.selected`` attribute on its eclass op."""
    for cid, index in selection.choices.items():
        op = view.class_op(cid)
        if not 0 <= index < len(op.operands):
            raise ExtractionError(f"selected operand {index} out of range for eclass#{op.id}")
        op.attributes[SELECTED_ATTR] = IntegerAttr(index)


def _selected_index(op: Operation) -> Optional[int]:
    attr = op.attributes.get(SELECTED_ATTR)
    return attr.value if isinstance(attr, IntegerAttr) else None


def _check_acyclic(block: Block, chosen: dict[int, Value]) -> None:
    # Edges from a selected class to the classes its chosen member uses.
    def kids(op: Operation) -> list[Operation]:
        v = chosen[op.id]
        if not isinstance(v, OpResult) or v.op.parent is not block:
            return []
        return [o.op for o in v.op.operands
                if isinstance(o, OpResult) and o.op.id in chosen]

    color: dict[int, int] = {}
    for op in block.ops:
        if op.id not in chosen or op.id in color:
            continue
        color[op.id] = 1
        stack = [(op, iter(kids(op)))]
        while stack:
            cur, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[cur.id] = 2
                stack.pop()
            elif color.get(nxt.id) == 1:
                raise ExtractionError("the selection induces a cycle among chosen e-nodes")
            elif nxt.id not in color:
                color[nxt.id] = 1
                stack.append((nxt, iter(kids(nxt))))


def _erase_dead(block: Block, roots: list[Value]) -> None:
    live: set[int] = set()
    stack = [v.op for v in roots if isinstance(v, OpResult) and v.op.parent is block]
    while stack:
        op = stack.pop()
        if op.id in live:
            continue
        live.add(op.id)
        for v in op.operands:
            if isinstance(v, OpResult) and v.op.parent is block:
                stack.append(v.op)
    dead = [op for op in block.ops if op.id not in live and op is not block.last_op]
    for op in dead:
        op.drop_all_references()
    for op in dead:
        op.erase()


def _replace_in_egraph(egraph: Operation) -> None:
    block = egraph.regions[0].block
    yield_op = block.last_op
    assert yield_op is not None
    chosen: dict[int, Value] = {}
    for op in block.ops:
        if op.name in EQSAT_CLASS_OPS:
            index = _selected_index(op)
            if index is not None:
                if not 0 <= index < len(op.operands):
                    raise ExtractionError(f"selected operand {index} out of range for eclass#{op.id}")
                chosen[op.id] = op.operands[index]
    _check_acyclic(block, chosen)
    for op in list(block.ops):
        if op.id in chosen:
            op.results[0].replace_all_uses_with(chosen[op.id])
            op.drop_all_references()
            op.erase()
    _erase_dead(block, list(yield_op.operands))
    if any(op.name in EQSAT_CLASS_OPS for op in block.ops):
        wrap_unclassed(egraph)
        return
    # Nothing left to choose: splice the body, in dependency order, into the parent block.
    _topo_sort_block(block)
    parent = egraph.parent
    assert parent is not None
    for op in list(block.ops):
        if op is yield_op:
            continue
        op.detach()
        parent.insert_before(op, egraph)
    for res, v in zip(egraph.results, yield_op.operands):
        res.replace_all_uses_with(v)
    yield_op.drop_all_references()
    yield_op.erase()
    egraph.erase()


def replace_selected(root: Operation) -> None:
    """Replace every annotated eclass op under ``root`` with its chosen operand.

    Unannotated eclass ops are kept, so a partial selection leaves a smaller
    e-graph that a later selection can finish. Members that become unreachable
    are erased, and an e-graph with no eclass ops left is dissolved.
    """
    egraphs = [op for op in root.walk() if op.name == "eqsat.egraph"]
    for egraph in egraphs:
        _replace_in_egraph(egraph)


def topo_sort(region: Region) -> None:
    """Reorder each block so definitions precede uses, keeping independent ops in place."""
    for block in region.blocks:
        _topo_sort_block(block)


def _topo_sort_block(block: Block) -> None:
    ops = list(block.ops)
    if not ops:
        return
    terminator = ops[-1] if ops[-1].name in ("func.return", "eqsat.yield") else None
    body = [op for op in ops if op is not terminator]
    position = {op.id: i for i, op in enumerate(body)}
    owner: dict[int, int] = {}  # value id -> defining op id in this block
    for op in body:
        for r in op.results:
            owner[r.id] = op.id
    deps: dict[int, set[int]] = {op.id: set() for op in body}
    for op in body:
        for inner in op.walk():
            for v in inner.operands:
                d = owner.get(v.id)
                if d is not None and d != op.id:
                    deps[op.id].add(d)
    users: dict[int, list[int]] = {op.id: [] for op in body}
    for oid, ds in deps.items():
        for d in ds:
            users[d].append(oid)
    remaining = {oid: len(ds) for oid, ds in deps.items()}
    ready = [position[oid] for oid, n in remaining.items() if n == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        op = body[i]
        order.append(op)
        for u in users[op.id]:
            remaining[u] -= 1
            if remaining[u] == 0:
                heapq.heappush(ready, position[u])
    if len(order) != len(body):
        raise ExtractionError("cannot sort a block whose use-def graph has a cycle")
    for op in body:
        op.detach()
    anchor = terminator
    for op in order:
        if anchor is None:
            block.append(op)
        else:
            block.insert_before(op, anchor)
