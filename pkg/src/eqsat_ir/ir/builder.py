"""Registry-checked operation construction with an insertion point."""

from __future__ import annotations

from typing import Optional, Sequence

from .attributes import Attribute
from .core import Block, IRError, Operation, Region, Value
from .registry import Registry, default_registry


class Builder:
    """Creates operations and inserts them at the current insertion point.

    The insertion point is either the end of a block or just before an anchor op.
    """

    def __init__(self, block: Optional[Block] = None, registry: Optional[Registry] = None) -> None:
        self.registry = registry or default_registry()
        self.block = block
        self.before: Optional[Operation] = None

    def at_end(self, block: Block) -> "Builder":
        self.block, self.before = block, None
        return self

    def before_op(self, op: Operation) -> "Builder":
        if op.parent is None:
            raise IRError("anchor op is detached")
        self.block, self.before = op.parent, op
        return self

    def insert(self, op: Operation) -> Operation:
        if self.block is None:
            return op
        if self.before is not None:
            return self.block.insert_before(op, self.before)
        return self.block.append(op)

    def build(
        self,
        name: str,
        operands: Sequence[Value] = (),
        attributes: Optional[dict[str, Attribute]] = None,
        result_types: Optional[Sequence[str]] = None,
        regions: Sequence[Region] = (),
    ) -> Operation:
        return self.insert(
            build_operation(name, operands, attributes, result_types, regions, self.registry)
        )


def build_operation(
    name: str,
    operands: Sequence[Value] = (),
    attributes: Optional[dict[str, Attribute]] = None,
    result_types: Optional[Sequence[str]] = None,
    regions: Sequence[Region] = (),
    registry: Optional[Registry] = None,
) -> Operation:
    """Create a detached operation after checking it against its definition.

    ``result_types`` may be omitted when the definition can infer them from the
    operand types (and, for constants, from the ``value`` attribute).
    """
    registry = registry or default_registry()
    definition = registry.lookup(name)
    if not definition.arity_ok(len(operands)):
        raise IRError(f"{name}: wrong operand count {len(operands)}")
    attributes = dict(attributes or {})
    if definition.explicit_results:
        if result_types is None:
            raise IRError(f"{name}: result types must be given")
        return Operation(name, operands, list(result_types), attributes, regions)
    inferred = definition.type_rule([v.type for v in operands])
    if not operands and hasattr(attributes.get("value"), "type"):
        inferred = [attributes["value"].type]  # type: ignore[attr-defined]
    if inferred is None and operands:
        raise IRError(f"{name}: operand types {[v.type for v in operands]} are not accepted")
    if result_types is None:
        if inferred is None:
            raise IRError(f"{name}: cannot infer result types")
        result_types = inferred
    elif inferred is not None and (operands or "value" in attributes):
        if list(result_types) != list(inferred):
            raise IRError(f"{name}: result types {list(result_types)} != expected {inferred}")
    return Operation(name, operands, list(result_types), attributes, regions)
