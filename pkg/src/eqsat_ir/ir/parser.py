"""Recursive-descent parser for the textual IR produced by :mod:`printer`."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional

from .attributes import (
    FLOAT_TYPES, INT_TYPES, ArrayAttr, Attribute, FloatAttr, IntegerAttr, StringAttr, TypeAttr,
)
from .core import Block, Operation, Region, RegionKind, Value
from .registry import Registry, default_registry


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<value>%[A-Za-z0-9_.$-]+)
  | (?P<label>\^[A-Za-z0-9_]+)
  | (?P<type>![A-Za-z0-9_]+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<number>-?(?:inf|nan)\b|-?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][\w.$]*)
  | (?P<arrow>->)
  | (?P<punct>[(){}\[\],:=])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        assert kind is not None
        if kind != "ws":
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        chunk = m.group()
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Forward(Value):
    """Placeholder for a value used before its definition."""

    __slots__ = ("token",)

    def __init__(self, token: Token) -> None:
        super().__init__("?")
        self.token = token


class Parser:
    def __init__(self, text: str, registry: Optional[Registry] = None, strict: bool = True) -> None:
        self.tokens = tokenize(text)
        self.i = 0
        self.registry = registry or default_registry()
        self.strict = strict
        self.values: dict[str, Value] = {}
        self.forward: dict[str, _Forward] = {}

    # token helpers -------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("punct", "arrow")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected '{text}', found '{self.tok.text or 'end of input'}'")
        tok = self.tok
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect_kind(self, kind: str) -> Token:
        if self.tok.kind != kind:
            raise self.error(f"expected {kind}, found '{self.tok.text or 'end of input'}'")
        tok = self.tok
        self.i += 1
        return tok

    # values --------------------------------------------------------------
    def use(self, tok: Token) -> Value:
        name = tok.text[1:]
        if name in self.values:
            return self.values[name]
        if name not in self.forward:
            self.forward[name] = _Forward(tok)
        return self.forward[name]

    def define(self, tok: Token, value: Value) -> None:
        name = tok.text[1:]
        if name in self.values:
            raise self.error(f"redefinition of %{name}", tok)
        value.name_hint = name
        self.values[name] = value
        fwd = self.forward.pop(name, None)
        if fwd is not None:
            for use in list(fwd.uses):
                use.operation.set_operand(use.index, value)

    # grammar -------------------------------------------------------------
    def parse_type(self) -> str:
        return self.expect_kind("ident").text

    def parse_attribute(self) -> Attribute:
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            text = tok.text
            is_float = any(c in text for c in ".eEn")  # 'n' covers inf/nan
            type_ = None
            if self.accept(":"):
                type_ = self.parse_type()
            if type_ is None:
                type_ = "f64" if is_float else "i64"
            if type_ in INT_TYPES:
                if is_float:
                    raise self.error(f"float literal for integer type {type_}", tok)
                return IntegerAttr(int(text), INT_TYPES[type_])
            if type_ in FLOAT_TYPES:
                return FloatAttr(float(text), FLOAT_TYPES[type_])
            raise self.error(f"unknown numeric type {type_}", tok)
        if tok.kind == "string":
            self.i += 1
            return StringAttr(json.loads(tok.text))
        if tok.kind == "type":
            self.i += 1
            return TypeAttr(tok.text[1:])
        if self.accept("["):
            items = []
            if not self.at("]"):
                items.append(self.parse_attribute())
                while self.accept(","):
                    items.append(self.parse_attribute())
            self.expect("]")
            return ArrayAttr(tuple(items))
        raise self.error(f"expected attribute, found '{tok.text}'")

    def at_attr_dict(self) -> bool:
        return (
            self.at("{")
            and self.peek().kind in ("ident", "string")
            and self.peek(2).text == "="
        )

    def parse_attr_dict(self) -> dict[str, Attribute]:
        self.expect("{")
        attrs: dict[str, Attribute] = {}
        while True:
            if self.tok.kind == "string":
                key = json.loads(self.expect_kind("string").text)
            else:
                key = self.expect_kind("ident").text
            self.expect("=")
            attrs[key] = self.parse_attribute()
            if not self.accept(","):
                break
        self.expect("}")
        return attrs

    def parse_region(self, kind: RegionKind) -> Region:
        self.expect("{")
        region = Region(kind)
        block: Optional[Block] = None
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated region")
            if self.tok.kind == "label":
                self.i += 1
                block = region.add_block(Block())
                if self.accept("(") and not self.accept(")"):
                    while True:
                        vtok = self.expect_kind("value")
                        self.expect(":")
                        self.define(vtok, block.add_arg(self.parse_type()))
                        if not self.accept(","):
                            break
                    self.expect(")")
                self.expect(":")
                continue
            if block is None:
                block = region.add_block(Block())
            block.append(self.parse_op())
        self.expect("}")
        if not region.blocks:
            region.add_block(Block())
        return region

    def parse_op(self) -> Operation:
        result_toks: list[Token] = []
        if self.tok.kind == "value":
            result_toks.append(self.expect_kind("value"))
            while self.accept(","):
                result_toks.append(self.expect_kind("value"))
            self.expect("=")
        name_tok = self.expect_kind("ident")
        name = name_tok.text
        definition = self.registry.get(name)
        if definition is None and self.strict:
            raise self.error(f"unknown operation '{name}'", name_tok)
        operands: list[Value] = []
        if self.accept("("):
            if not self.at(")"):
                operands.append(self.use(self.expect_kind("value")))
                while self.accept(","):
                    operands.append(self.use(self.expect_kind("value")))
            self.expect(")")
        attrs: dict[str, Attribute] = {}
        if self.at_attr_dict():
            attrs = self.parse_attr_dict()
        regions = []
        kinds = definition.region_kinds if definition else ()
        # Function bodies are isolated: their value names start afresh.
        isolated = name in ISOLATED_OPS and self.at("{")
        if isolated:
            outer = (self.values, self.forward)
            self.values, self.forward = {}, {}
        while self.at("{"):
            idx = len(regions)
            kind = kinds[idx] if idx < len(kinds) else RegionKind.CFG
            regions.append(self.parse_region(kind))
        if isolated:
            if self.forward:
                vname, fwd = next(iter(self.forward.items()))
                raise self.error(f"use of undefined value %{vname}", fwd.token)
            self.values, self.forward = outer
        types: list[str] = []
        if self.accept(":"):
            if self.accept("("):
                if not self.at(")"):
                    types.append(self.parse_type())
                    while self.accept(","):
                        types.append(self.parse_type())
                self.expect(")")
            else:
                types.append(self.parse_type())
        if len(types) != len(result_toks):
            raise self.error(
                f"'{name}' declares {len(result_toks)} result(s) but {len(types)} type(s)", name_tok
            )
        op = Operation(name, operands, types, attrs, regions)
        for tok, res in zip(result_toks, op.results):
            self.define(tok, res)
        return op

    def parse_module(self) -> Operation:
        ops = []
        while self.tok.kind != "eof":
            ops.append(self.parse_op())
        if self.forward:
            name, fwd = next(iter(self.forward.items()))
            raise self.error(f"use of undefined value %{name}", fwd.token)
        if len(ops) == 1 and ops[0].name == "builtin.module":
            return ops[0]
        block = Block()
        for op in ops:
            block.append(op)
        return Operation("builtin.module", regions=[Region(RegionKind.GRAPH, [block])])


ISOLATED_OPS = frozenset({"func.func"})


def parse_ir(text: str, registry: Optional[Registry] = None, strict: bool = True) -> Operation:
    """Parse a module; bare top-level ops are wrapped in a ``builtin.module``."""
    return Parser(text, registry, strict).parse_module()
