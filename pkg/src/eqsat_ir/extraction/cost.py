"""Per-op extraction costs and the cost configuration format.

::

    # comment
    arith.mulf = 1
    cplx.div = inf
    default = inf
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..ir.attributes import FloatAttr, IntegerAttr
from ..ir.core import Operation

COST_ATTR = "eqsat.cost"


class CostConfigError(Exception):
    pass


@dataclass
class CostModel:
    base: dict[str, float] = field(default_factory=dict)
    default: float = 1.0
    leaf: float = 0.0  # block arguments

    def op_cost(self, op: Operation) -> float:
        attr = op.attributes.get(COST_ATTR)
        if isinstance(attr, (IntegerAttr, FloatAttr)):
            return float(attr.value)
        return self.base.get(op.name, self.default)

    def extractable(self, op: Operation) -> bool:
        return math.isfinite(self.op_cost(op))


def _parse_cost(text: str, line_no: int) -> float:
    text = text.strip()
    if text in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        value = float(text)
    except ValueError:
        raise CostConfigError(f"line {line_no}: malformed cost {text!r}") from None
    if math.isnan(value) or value < 0:
        raise CostConfigError(f"line {line_no}: cost must be non-negative, got {text}")
    return value


def load_cost_config(text: str) -> CostModel:
    """Parse ``op = cost`` lines; ``default = ...`` sets the cost of unlisted ops."""
    model = CostModel()
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.count("=") != 1:
            raise CostConfigError(f"line {line_no}: expected 'op = cost', got {raw!r}")
        name, value = (part.strip() for part in line.split("="))
        if not name or " " in name:
            raise CostConfigError(f"line {line_no}: malformed op name {name!r}")
        cost = _parse_cost(value, line_no)
        if name == "default":
            model.default = cost
        elif name == "leaf":
            model.leaf = cost
        else:
            model.base[name] = cost
    return model
