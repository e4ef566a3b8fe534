"""
Pydantic schemas for serialized step functions
"""
from typing import List

from pydantic import BaseModel, Field, field_validator

from .report import Record


class LeafValue(BaseModel):
    """Value of a step function on one leaf of its window"""
    id: str = Field(..., description="grid set id, e.g. omega1:N:0:3:0.1")
    value: float

    @field_validator("value")
    @classmethod
    def validate_value(cls, v: float) -> float:
        if v != v or v in (float("inf"), float("-inf")):
            raise ValueError("Step function values must be finite")
        return v


class StepFunctionModel(Record):
    """A step function on a grid window; zero outside the root"""
    n: int = Field(..., ge=1)
    root: str
    leaves: List[LeafValue]
