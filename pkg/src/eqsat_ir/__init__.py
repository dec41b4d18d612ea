"""E-graphs embedded in an SSA IR, with equality saturation and extraction passes."""

__version__ = "0.1.0"
