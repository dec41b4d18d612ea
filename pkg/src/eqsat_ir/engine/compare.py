"""Comparing e-graphs and match sets independently of op ids and block order."""

from __future__ import annotations

from typing import Iterable, Optional

from ..ir.core import BlockArgument
from .egraph import EGraphView
from .ematch import MatchRecord


def match_key(view: EGraphView, m: MatchRecord) -> tuple:
    """Pattern name, canonical bindings and canonical root of a match."""
    return (m.pattern, tuple((n, view.find(c)) for n, c in m.bindings), view.find(m.root))


def match_set(view: EGraphView, matches: Iterable[MatchRecord]) -> set[tuple]:
    return {match_key(view, m) for m in matches}


def _arg_index(v) -> Optional[int]:
    return v.index if isinstance(v, BlockArgument) else None


def class_correspondence(a: EGraphView, b: EGraphView) -> Optional[dict[int, int]]:
    """Map classes of ``a`` onto classes of ``b`` when the two e-graphs are isomorphic.

    Both views must sit in functions whose block arguments correspond by
    position. Classes holding arguments are paired first; a class holding a
    node is then paired with the class of the node in ``b`` that has the same
    name, attributes and (paired) operand classes. Returns None when the
    pairing is not a bijection on classes and e-nodes or the roots differ.
    """
    mapping: dict[int, int] = {}
    b_args: dict[int, int] = {}
    for cid in b.classes():
        for v in b.members(cid):
            i = _arg_index(v)
            if i is not None:
                b_args[i] = cid
    for cid in a.classes():
        for v in a.members(cid):
            i = _arg_index(v)
            if i is None:
                continue
            if i not in b_args or mapping.setdefault(cid, b_args[i]) != b_args[i]:
                return None
    nodes = a.nodes()
    changed = True
    while changed:
        changed = False
        for node in nodes:
            kids = [a.class_of_value(v) for v in node.operands]
            if not all(k in mapping for k in kids):
                continue
            hit = b.lookup(node.name, [mapping[k] for k in kids], node.attributes)
            if hit is None:
                return None
            owner = a.class_of_node(node)
            if owner not in mapping:
                mapping[owner] = hit
                changed = True
            elif mapping[owner] != hit:
                return None
    if len(mapping) != len(a.classes()) or len(set(mapping.values())) != len(b.classes()):
        return None
    if len(nodes) != len(b.nodes()) or a.enode_count != b.enode_count:
        return None
    if [mapping[r] for r in a.roots()] != b.roots():
        return None
    return mapping


def isomorphic(a: EGraphView, b: EGraphView) -> bool:
    return class_correspondence(a, b) is not None

