"""Selection of e-class members and replacement of e-classes by them."""

from .cost import COST_ATTR, CostConfigError, CostModel, load_cost_config
from .replace import SELECTED_ATTR, annotate_selection, replace_selected, topo_sort
from .select import (
    ExtractionError, Selection, dag_cost, has_cycle, reachable_classes, select_greedy,
    select_ilp,
)

__all__ = [
    "COST_ATTR", "CostConfigError", "CostModel", "ExtractionError", "SELECTED_ATTR",
    "Selection", "annotate_selection", "dag_cost", "has_cycle", "load_cost_config",
    "reachable_classes", "replace_selected", "select_greedy", "select_ilp", "topo_sort",
]
