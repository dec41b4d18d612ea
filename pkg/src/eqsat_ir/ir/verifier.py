"""Structural verification returning diagnostics instead of raising."""

from __future__ import annotations

from typing import Optional

from .core import Block, BlockArgument, Operation, RegionKind, Value
from .registry import Registry, Trait, default_registry


def verify(root: Operation, registry: Optional[Registry] = None, strict: bool = True) -> list[str]:
    """Check every op nested in ``root``; an empty list means the IR is valid."""
    registry = registry or default_registry()
    diags: list[str] = []
    positions: dict[int, dict[int, int]] = {}

    def position(block: Block, op: Operation) -> int:
        if block.id not in positions:
            positions[block.id] = block.index_map()
        return positions[block.id][op.id]

    def visible(value: Value, user: Operation) -> Optional[str]:
        home = value.block if isinstance(value, BlockArgument) else value.op.parent  # type: ignore[union-attr]
        if home is None:
            return f"operand of {user.name}#{user.id} is defined by a detached operation"
        anchor, block = user, user.parent
        while block is not None:
            if block is home:
                if isinstance(value, BlockArgument):
                    return None
                region = block.parent
                if region is not None and region.kind is RegionKind.GRAPH:
                    return None
                if position(block, value.op) < position(block, anchor):  # type: ignore[union-attr]
                    return None
                return (
                    f"operand of {user.name}#{user.id} does not dominate its use "
                    f"(defined by {value.op.name}#{value.op.id})"  # type: ignore[union-attr]
                )
            anchor = block.parent_op  # type: ignore[assignment]
            if anchor is None:
                break
            block = anchor.parent
        return f"operand of {user.name}#{user.id} is used outside the scope of its definition"

    for op in root.walk():
        definition = registry.get(op.name)
        if definition is None:
            if strict:
                diags.append(f"unknown operation {op.name}")
        else:
            if not definition.arity_ok(len(op.operands)):
                diags.append(f"{op.name}#{op.id}: wrong operand count {len(op.operands)}")
            elif not definition.explicit_results:
                inferred = definition.type_rule([v.type for v in op.operands])
                if op.operands and inferred is None:
                    diags.append(f"{op.name}#{op.id}: operand types not accepted")
                elif op.operands and inferred != [r.type for r in op.results]:
                    diags.append(f"{op.name}#{op.id}: result types do not match operands")
            for key in definition.required_attrs:
                if key not in op.attributes:
                    diags.append(f"{op.name}#{op.id}: missing required attribute '{key}'")
            if len(op.regions) != len(definition.region_kinds):
                diags.append(f"{op.name}#{op.id}: expected {len(definition.region_kinds)} region(s)")
            for region, kind in zip(op.regions, definition.region_kinds):
                if region.kind is not kind:
                    diags.append(f"{op.name}#{op.id}: region must be a {kind.value} region")
                if region.kind is RegionKind.GRAPH and len(region.blocks) != 1:
                    diags.append(f"{op.name}#{op.id}: graph regions must have one block")
                if definition.terminator is not None:
                    for block in region.blocks:
                        last = block.last_op
                        if last is None or last.name != definition.terminator:
                            diags.append(
                                f"{op.name}#{op.id}: block must end with {definition.terminator}"
                            )
            if definition.has(Trait.TERMINATOR) and op.next_op is not None:
                diags.append(f"{op.name}#{op.id}: terminator must be the last op of its block")
            if definition.verifier is not None:
                try:
                    diags.extend(definition.verifier(op))
                except Exception as exc:  # malformed op shape
                    diags.append(f"{op.name}#{op.id}: verifier failed: {exc}")
        for value in op.operands:
            problem = visible(value, op)
            if problem:
                diags.append(problem)
    return diags
