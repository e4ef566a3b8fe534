"""
czgrid - Calderón–Zygmund sets and the dyadic grid on the ax+b group
"""

__version__ = "0.1.0"

from .czset import CZSet, DyadicCube
from .errors import CZGridError
from .geometry import GroupPoint, dist
from .grid import DyadicGrid, DyadicSetId, build_grid
from .step_function import StepFunction, Window

__all__ = [
    "CZGridError",
    "CZSet",
    "DyadicCube",
    "DyadicGrid",
    "DyadicSetId",
    "GroupPoint",
    "StepFunction",
    "Window",
    "build_grid",
    "dist",
]
