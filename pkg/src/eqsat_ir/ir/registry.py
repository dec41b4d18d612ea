"""Operation definitions and the registry that maps names to them."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable, Optional, Sequence

from .attributes import Attribute
from .core import RegionKind

if TYPE_CHECKING:
    from .core import Operation


class Trait(Enum):
    PURE = "Pure"
    TERMINATOR = "Terminator"
    CONSTANT = "Constant"
    COMMUTATIVE = "Commutative"


# Returns a list of diagnostic messages (empty when valid).
Verifier = Callable[["Operation"], list[str]]
# (attributes, operand constants or None) -> folded attribute or None.
FoldHook = Callable[[dict, Sequence[Optional[Attribute]], str], Optional[Attribute]]
# operand types -> result types, or None if the operand types are illegal.
TypeRule = Callable[[Sequence[str]], Optional[list[str]]]


@dataclass(frozen=True)
class OpDefinition:
    name: str
    min_operands: int
    max_operands: Optional[int]
    type_rule: TypeRule
    traits: frozenset[Trait] = frozenset()
    verifier: Optional[Verifier] = None
    fold: Optional[FoldHook] = None
    region_kinds: tuple[RegionKind, ...] = ()
    terminator: Optional[str] = None  # required terminator name for nested blocks
    required_attrs: tuple[str, ...] = ()
    explicit_results: bool = False  # result types are never inferred

    def has(self, trait: Trait) -> bool:
        return trait in self.traits

    def arity_ok(self, n: int) -> bool:
        return n >= self.min_operands and (self.max_operands is None or n <= self.max_operands)


class RegistryError(Exception):
    pass


@dataclass
class Registry:
    ops: dict[str, OpDefinition] = field(default_factory=dict)

    def register(self, definition: OpDefinition) -> None:
        if definition.name in self.ops:
            raise RegistryError(f"operation {definition.name} is already registered")
        self.ops[definition.name] = definition

    def get(self, name: str) -> Optional[OpDefinition]:
        return self.ops.get(name)

    def lookup(self, name: str) -> OpDefinition:
        try:
            return self.ops[name]
        except KeyError:
            raise RegistryError(f"unknown operation {name}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.ops


_default: Optional[Registry] = None


def default_registry() -> Registry:
    """Process-wide registry with every built-in dialect loaded."""
    global _default
    if _default is None:
        from ..dialects import register_builtin_dialects

        reg = Registry()
        register_builtin_dialects(reg)
        _default = reg
    return _default
