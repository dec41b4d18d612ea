"""SSA object graph: values, operations, blocks and regions.

Operations live in intrusive doubly-linked lists owned by their block so that
insertion and erasure are O(1). Every operand slot is mirrored by a use entry
on the referenced value.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence

from .attributes import Attribute

_value_ids = itertools.count()
_op_ids = itertools.count()
_block_ids = itertools.count()


class IRError(Exception):
    """Raised on illegal mutation of the IR."""


class RegionKind(Enum):
    CFG = "cfg"
    GRAPH = "graph"


@dataclass(frozen=True)
class Use:
    operation: "Operation"
    index: int


class Value:
    """An SSA value. Identity is the integer ``id``; ``name_hint`` only affects printing."""

    __slots__ = ("id", "type", "uses", "name_hint")

    def __init__(self, type_: str, name_hint: Optional[str] = None) -> None:
        self.id = next(_value_ids)
        self.type = type_
        self.uses: set[Use] = set()
        self.name_hint = name_hint

    @property
    def owner(self) -> "Operation | Block":
        raise NotImplementedError

    def users(self) -> list["Operation"]:
        """Distinct operations using this value, in ascending op id order."""
        seen = {u.operation.id: u.operation for u in self.uses}
        return [seen[k] for k in sorted(seen)]

    def has_uses(self) -> bool:
        return bool(self.uses)

    def replace_all_uses_with(self, new: "Value") -> None:
        if new is self:
            return
        if new.type != self.type:
            raise IRError(f"type mismatch replacing {self.type} value with {new.type}")
        for use in list(self.uses):
            use.operation.set_operand(use.index, new)

    def __hash__(self) -> int:
        return self.id

    def __eq__(self, other: object) -> bool:
        return self is other


class OpResult(Value):
    __slots__ = ("op", "index")

    def __init__(self, type_: str, op: "Operation", index: int) -> None:
        super().__init__(type_)
        self.op = op
        self.index = index

    @property
    def owner(self) -> "Operation":
        return self.op

    def __repr__(self) -> str:
        return f"<OpResult #{self.index} of {self.op.name}#{self.op.id}>"


class BlockArgument(Value):
    __slots__ = ("block", "index")

    def __init__(self, type_: str, block: "Block", index: int) -> None:
        super().__init__(type_)
        self.block = block
        self.index = index

    @property
    def owner(self) -> "Block":
        return self.block

    def __repr__(self) -> str:
        return f"<BlockArgument #{self.index} : {self.type}>"


class Operation:
    __slots__ = (
        "id", "name", "_operands", "results", "attributes", "regions",
        "parent", "prev_op", "next_op",
    )

    def __init__(
        self,
        name: str,
        operands: Sequence[Value] = (),
        result_types: Sequence[str] = (),
        attributes: Optional[dict[str, Attribute]] = None,
        regions: Sequence["Region"] = (),
    ) -> None:
        self.id = next(_op_ids)
        self.name = name
        self._operands: list[Value] = []
        self.results = [OpResult(t, self, i) for i, t in enumerate(result_types)]
        self.attributes: dict[str, Attribute] = dict(attributes or {})
        self.regions: list[Region] = []
        self.parent: Optional[Block] = None
        self.prev_op: Optional[Operation] = None
        self.next_op: Optional[Operation] = None
        for region in regions:
            self.add_region(region)
        self.set_operands(operands)

    # operands ------------------------------------------------------------
    @property
    def operands(self) -> tuple[Value, ...]:
        return tuple(self._operands)

    def set_operands(self, operands: Sequence[Value]) -> None:
        for i, old in enumerate(self._operands):
            old.uses.discard(Use(self, i))
        self._operands = list(operands)
        for i, new in enumerate(self._operands):
            new.uses.add(Use(self, i))

    def set_operand(self, index: int, value: Value) -> None:
        old = self._operands[index]
        old.uses.discard(Use(self, index))
        self._operands[index] = value
        value.uses.add(Use(self, index))

    def drop_all_references(self) -> None:
        self.set_operands(())
        for region in self.regions:
            for block in region.blocks:
                for op in block.ops:
                    op.drop_all_references()

    # structure -----------------------------------------------------------
    def add_region(self, region: "Region") -> None:
        if region.parent is not None:
            raise IRError("region already attached")
        region.parent = self
        self.regions.append(region)

    @property
    def result(self) -> OpResult:
        if len(self.results) != 1:
            raise IRError(f"{self.name} has {len(self.results)} results")
        return self.results[0]

    @property
    def parent_op(self) -> Optional["Operation"]:
        if self.parent is None or self.parent.parent is None:
            return None
        return self.parent.parent.parent

    def walk(self) -> Iterator["Operation"]:
        """Pre-order walk of this op and every nested op."""
        yield self
        for region in self.regions:
            for block in region.blocks:
                for op in list(block.ops):
                    yield from op.walk()

    def is_ancestor_of(self, other: "Operation") -> bool:
        cur: Optional[Operation] = other
        while cur is not None:
            if cur is self:
                return True
            cur = cur.parent_op
        return False

    def detach(self) -> None:
        if self.parent is None:
            raise IRError("operation is not in a block")
        self.parent._unlink(self)

    def erase(self) -> None:
        """Remove from the parent block. Results must be dead."""
        for res in self.results:
            if res.uses:
                raise IRError(
                    f"cannot erase {self.name}#{self.id}: result #{res.index} still has "
                    f"{len(res.uses)} use(s)"
                )
        if self.parent is not None:
            self.detach()
        self.drop_all_references()

    def __repr__(self) -> str:
        return f"<Operation {self.name}#{self.id}>"


class Block:
    __slots__ = ("id", "args", "parent", "first_op", "last_op", "_size")

    def __init__(self, arg_types: Sequence[str] = ()) -> None:
        self.id = next(_block_ids)
        self.args = [BlockArgument(t, self, i) for i, t in enumerate(arg_types)]
        self.parent: Optional[Region] = None
        self.first_op: Optional[Operation] = None
        self.last_op: Optional[Operation] = None
        self._size = 0

    def add_arg(self, type_: str) -> BlockArgument:
        arg = BlockArgument(type_, self, len(self.args))
        self.args.append(arg)
        return arg

    @property
    def ops(self) -> Iterator[Operation]:
        op = self.first_op
        while op is not None:
            nxt = op.next_op
            yield op
            op = nxt

    def __len__(self) -> int:
        return self._size

    @property
    def parent_op(self) -> Optional[Operation]:
        return self.parent.parent if self.parent is not None else None

    def _link(self, op: Operation, prev: Optional[Operation], nxt: Optional[Operation]) -> None:
        if op.parent is not None:
            raise IRError(f"{op!r} is already in a block")
        op.parent = self
        op.prev_op, op.next_op = prev, nxt
        if prev is None:
            self.first_op = op
        else:
            prev.next_op = op
        if nxt is None:
            self.last_op = op
        else:
            nxt.prev_op = op
        self._size += 1

    def _unlink(self, op: Operation) -> None:
        if op.prev_op is None:
            self.first_op = op.next_op
        else:
            op.prev_op.next_op = op.next_op
        if op.next_op is None:
            self.last_op = op.prev_op
        else:
            op.next_op.prev_op = op.prev_op
        op.parent = op.prev_op = op.next_op = None
        self._size -= 1

    def append(self, op: Operation) -> Operation:
        self._link(op, self.last_op, None)
        return op

    def insert_before(self, op: Operation, anchor: Operation) -> Operation:
        if anchor.parent is not self:
            raise IRError("anchor is not in this block")
        self._link(op, anchor.prev_op, anchor)
        return op

    def insert_after(self, op: Operation, anchor: Operation) -> Operation:
        if anchor.parent is not self:
            raise IRError("anchor is not in this block")
        self._link(op, anchor, anchor.next_op)
        return op

    def index_map(self) -> dict[int, int]:
        """Op id -> position in this block."""
        return {op.id: i for i, op in enumerate(self.ops)}


class Region:
    __slots__ = ("kind", "blocks", "parent")

    def __init__(self, kind: RegionKind = RegionKind.CFG, blocks: Iterable[Block] = ()) -> None:
        self.kind = kind
        self.blocks: list[Block] = []
        self.parent: Optional[Operation] = None
        for b in blocks:
            self.add_block(b)

    def add_block(self, block: Block) -> Block:
        block.parent = self
        self.blocks.append(block)
        return block

    @property
    def block(self) -> Block:
        if len(self.blocks) != 1:
            raise IRError(f"region has {len(self.blocks)} blocks")
        return self.blocks[0]


def replace_all_uses(old: Value, new: Value) -> None:
    old.replace_all_uses_with(new)


def erase_operation(op: Operation) -> None:
    op.erase()


def defining_op(value: Value) -> Optional[Operation]:
    return value.op if isinstance(value, OpResult) else None


def check_use_def(root: Operation) -> list[str]:
    """Full-walk check that use lists exactly mirror operand lists."""
    problems = []
    expected: dict[int, set[Use]] = {}
    values: dict[int, Value] = {}
    for op in root.walk():
        for i, v in enumerate(op.operands):
            expected.setdefault(v.id, set()).add(Use(op, i))
            values[v.id] = v
        for r in op.results:
            values[r.id] = r
        for region in op.regions:
            for block in region.blocks:
                for a in block.args:
                    values[a.id] = a
    for vid, v in values.items():
        if v.uses != expected.get(vid, set()):
            problems.append(f"use list mismatch on value {vid}")
    return problems
