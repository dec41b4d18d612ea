"""Built-in dialects and the e-class insertion pass."""

from .ops import EQSAT_CLASS_OPS, constant_value_of, fold, fold_values, register_builtin_dialects
from .insert import InsertionError, insert_eclasses, wrap_unclassed

__all__ = [
    "EQSAT_CLASS_OPS",
    "InsertionError",
    "constant_value_of",
    "fold",
    "fold_values",
    "insert_eclasses",
    "register_builtin_dialects",
    "wrap_unclassed",
]
