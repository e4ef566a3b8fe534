"""
Pydantic schemas for records, reports and serialized functions
"""
from .function import LeafValue, StepFunctionModel
from .report import (
    SCHEMA_VERSION,
    AtomReport,
    ChainEntryRecord,
    CounterexampleRecord,
    CounterexampleSummary,
    CZDecompositionRecord,
    DilatedRatio,
    GridReport,
    GrowthFit,
    LocatedIdRecord,
    MaximalRecord,
    MaximalSummary,
    PropertyCheck,
    SandwichFit,
)

__all__ = [
    "SCHEMA_VERSION",
    "AtomReport",
    "ChainEntryRecord",
    "CounterexampleRecord",
    "CounterexampleSummary",
    "CZDecompositionRecord",
    "DilatedRatio",
    "GridReport",
    "GrowthFit",
    "LeafValue",
    "LocatedIdRecord",
    "MaximalRecord",
    "MaximalSummary",
    "PropertyCheck",
    "SandwichFit",
    "StepFunctionModel",
]
