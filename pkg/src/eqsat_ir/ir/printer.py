"""Textual form of the IR.

Grammar (generic form)::

    op      ::= results? name ('(' operand (',' operand)* ')')? attrs? region* (':' type-sig)?
    results ::= '%'ident (',' '%'ident)* '='
    attrs   ::= '{' key '=' attr (',' key '=' attr)* '}'
    region  ::= '{' block* '}'
    block   ::= ('^'label ('(' '%'ident ':' type, ... ')')? ':')? op*

The type signature lists the result types and is omitted for ops without results.
"""

from __future__ import annotations

import json
import re
from io import StringIO

from .attributes import (
    ArrayAttr, Attribute, FloatAttr, IntegerAttr, StringAttr, TypeAttr, format_float,
)
from .core import Block, Operation, Region, Value

_NAME_OK = re.compile(r"^[A-Za-z0-9_.$-]+$")
_KEY_OK = re.compile(r"^[A-Za-z_][\w.$]*$")


def format_attribute(attr: Attribute) -> str:
    if isinstance(attr, IntegerAttr):
        return f"{attr.value} : {attr.type}"
    if isinstance(attr, FloatAttr):
        return f"{format_float(attr.value)} : {attr.type}"
    if isinstance(attr, StringAttr):
        return json.dumps(attr.value)
    if isinstance(attr, TypeAttr):
        return f"!{attr.value}"
    if isinstance(attr, ArrayAttr):
        return "[" + ", ".join(format_attribute(a) for a in attr.value) + "]"
    raise TypeError(f"cannot print attribute {attr!r}")


class Printer:
    def __init__(self) -> None:
        self.names: dict[int, str] = {}
        self.used: set[str] = set()
        self.counter = 0
        self.block_names: dict[int, str] = {}
        self.out = StringIO()

    def name_of(self, value: Value) -> str:
        if value.id in self.names:
            return self.names[value.id]
        hint = value.name_hint
        if hint and _NAME_OK.match(hint):
            name, k = hint, 1
            while name in self.used:
                name = f"{hint}_{k}"
                k += 1
        else:
            while str(self.counter) in self.used:
                self.counter += 1
            name = str(self.counter)
            self.counter += 1
        self.used.add(name)
        self.names[value.id] = name
        return name

    def _assign(self, op: Operation) -> None:
        # Names are assigned in a pre-order walk so forward references print stably.
        for r in op.results:
            self.name_of(r)
        for region in op.regions:
            for block in region.blocks:
                for a in block.args:
                    self.name_of(a)
                for inner in block.ops:
                    self._assign(inner)

    def print_op(self, op: Operation, indent: int = 0) -> None:
        pad = "  " * indent
        out = self.out
        out.write(pad)
        if op.results:
            out.write(", ".join("%" + self.name_of(r) for r in op.results))
            out.write(" = ")
        out.write(op.name)
        if op.operands:
            out.write("(" + ", ".join("%" + self.name_of(v) for v in op.operands) + ")")
        if op.attributes:
            items = []
            for k, v in op.attributes.items():
                key = k if _KEY_OK.match(k) else json.dumps(k)
                items.append(f"{key} = {format_attribute(v)}")
            out.write(" {" + ", ".join(items) + "}")
        for region in op.regions:
            out.write(" ")
            self.print_region(region, indent)
        if op.results:
            types = [r.type for r in op.results]
            sig = types[0] if len(types) == 1 else "(" + ", ".join(types) + ")"
            out.write(" : " + sig)
        out.write("\n")

    def print_region(self, region: Region, indent: int) -> None:
        blocks = region.blocks
        if len(blocks) == 1 and not blocks[0].args and len(blocks[0]) == 0:
            self.out.write("{}")
            return
        self.out.write("{\n")
        for i, block in enumerate(blocks):
            if block.args or len(blocks) > 1:
                self.print_label(block, indent)
            for op in block.ops:
                self.print_op(op, indent + 1)
        self.out.write("  " * indent + "}")

    def print_label(self, block: Block, indent: int) -> None:
        if block.id not in self.block_names:
            self.block_names[block.id] = f"bb{len(self.block_names)}"
        label = "^" + self.block_names[block.id]
        if block.args:
            label += "(" + ", ".join(f"%{self.name_of(a)} : {a.type}" for a in block.args) + ")"
        self.out.write("  " * indent + label + ":\n")


def print_ir(op: Operation) -> str:
    printer = Printer()
    printer._assign(op)
    printer.print_op(op)
    return printer.out.getvalue()
