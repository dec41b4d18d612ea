"""Immutable, hashable compile-time attributes."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Union

INT_TYPES = {"i1": 1, "i8": 8, "i16": 16, "i32": 32, "i64": 64}
FLOAT_TYPES = {"f32": 32, "f64": 64}


class Attribute:
    """Base class for attributes. Subclasses are frozen dataclasses."""

    __slots__ = ()


@dataclass(frozen=True)
class IntegerAttr(Attribute):
    value: int
    width: int = 64

    @property
    def type(self) -> str:
        return f"i{self.width}"


@dataclass(frozen=True, eq=False)
class FloatAttr(Attribute):
    value: float
    width: int = 64

    # Compared by bit pattern so that 0.0 and -0.0 stay distinct and nan == nan.
    def _bits(self) -> int:
        return struct.unpack("<q", struct.pack("<d", self.value))[0]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FloatAttr)
            and self.width == other.width
            and self._bits() == other._bits()
        )

    def __hash__(self) -> int:
        return hash(("f", self.width, self._bits()))

    @property
    def type(self) -> str:
        return f"f{self.width}"


@dataclass(frozen=True)
class StringAttr(Attribute):
    value: str


@dataclass(frozen=True)
class TypeAttr(Attribute):
    value: str


@dataclass(frozen=True)
class ArrayAttr(Attribute):
    value: tuple[Attribute, ...]


def number_attr(value: Union[int, float], type_: str) -> Attribute:
    """Build the constant attribute for ``value`` interpreted at ``type_``."""
    if type_ in INT_TYPES:
        if isinstance(value, float):
            if not value.is_integer():
                raise ValueError(f"{value} is not an integer")
            value = int(value)
        return IntegerAttr(wrap_int(value, INT_TYPES[type_]), INT_TYPES[type_])
    if type_ in FLOAT_TYPES:
        return FloatAttr(float(value), FLOAT_TYPES[type_])
    raise ValueError(f"no numeric attribute for type {type_}")


def wrap_int(value: int, width: int) -> int:
    """Two's complement wrap to ``width`` bits (i1 stays 0/1)."""
    if width == 1:
        return value & 1
    mask = (1 << width) - 1
    value &= mask
    if value >> (width - 1):
        value -= 1 << width
    return value


def numeric_value(attr: Attribute) -> Union[int, float, None]:
    if isinstance(attr, (IntegerAttr, FloatAttr)):
        return attr.value
    return None


def format_float(value: float) -> str:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)
