"""SSA IR substrate: operations, values, blocks, regions and attributes."""

from .attributes import (
    ArrayAttr, Attribute, FloatAttr, IntegerAttr, StringAttr, TypeAttr, number_attr, wrap_int,
)
from .builder import Builder, build_operation
from .core import (
    Block, BlockArgument, IRError, Operation, OpResult, Region, RegionKind, Use, Value,
    check_use_def, defining_op, erase_operation, replace_all_uses,
)
from .parser import ParseError, parse_ir
from .printer import print_ir
from .registry import OpDefinition, Registry, RegistryError, Trait, default_registry
from .verifier import verify

__all__ = [
    "ArrayAttr", "Attribute", "Block", "BlockArgument", "Builder", "FloatAttr", "IRError",
    "IntegerAttr", "OpDefinition", "OpResult", "Operation", "ParseError", "Region",
    "RegionKind", "Registry", "RegistryError", "StringAttr", "Trait", "TypeAttr", "Use",
    "Value", "build_operation", "check_use_def", "default_registry", "defining_op",
    "erase_operation", "number_attr", "parse_ir", "print_ir", "replace_all_uses", "verify",
    "wrap_int",
]
