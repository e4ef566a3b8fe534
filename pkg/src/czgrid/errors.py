"""
Custom exceptions for czgrid
"""
from typing import Optional


class CZGridError(Exception):
    """Base exception for czgrid operations"""
    pass


class DimensionMismatchError(CZGridError):
    """Raised when points or sets of different horizontal dimension are combined"""
    pass


class InvalidPointError(CZGridError):
    """Raised when a group point has non-finite coordinates"""
    pass


class AdmissibilityError(CZGridError):
    """
    Raised when a Calderón–Zygmund construction is not admissible.

    The message names the inequality that failed.
    """

    def __init__(self, message: str, inequality: str = ""):
        super().__init__(message)
        self.inequality = inequality


class HorizonError(CZGridError):
    """Raised when a query leaves the built range of a grid"""

    def __init__(self, message: str, required_level: Optional[int] = None):
        super().__init__(message)
        self.required_level = required_level


class InvalidFunctionError(CZGridError):
    """Raised when a step function, window or probe is malformed"""
    pass


class InvalidThresholdError(CZGridError):
    """Raised when a level α is not strictly positive"""
    pass


class GridConfigurationError(CZGridError):
    """Raised when a grid lacks a structure an experiment depends on"""
    pass


class ConfigError(CZGridError):
    """Raised when the experiment configuration cannot be parsed or validated"""
    pass


class VerificationError(CZGridError):
    """Raised when a closed form and its numerical counterpart disagree"""
    pass


class InvalidSetIdError(CZGridError):
    """Raised when a dyadic set address does not name a set of the grid"""
    pass
