"""
Unit tests for custom exceptions
"""
import pytest

from czgrid.errors import (
    AdmissibilityError,
    ConfigError,
    CZGridError,
    DimensionMismatchError,
    GridConfigurationError,
    HorizonError,
    InvalidFunctionError,
    InvalidPointError,
    InvalidSetIdError,
    InvalidThresholdError,
    VerificationError,
)


def test_base_exception():
    """Test base exception"""
    exc = CZGridError("test error")
    assert str(exc) == "test error"
    assert isinstance(exc, Exception)


@pytest.mark.parametrize(
    "error_class",
    [
        DimensionMismatchError,
        InvalidPointError,
        InvalidFunctionError,
        InvalidThresholdError,
        GridConfigurationError,
        ConfigError,
        VerificationError,
        InvalidSetIdError,
    ],
)
def test_subclasses_share_base(error_class):
    """Every library error is a CZGridError"""
    exc = error_class("failed")
    assert isinstance(exc, CZGridError)
    assert str(exc) == "failed"


def test_admissibility_error_names_inequality():
    """Test AdmissibilityError keeps the failed inequality"""
    exc = AdmissibilityError("not admissible", "r > 0")
    assert isinstance(exc, CZGridError)
    assert exc.inequality == "r > 0"
    assert str(exc) == "not admissible"


def test_horizon_error_required_level():
    """Test HorizonError reports the level it needed"""
    exc = HorizonError("beyond horizon", required_level=13)
    assert exc.required_level == 13
    assert HorizonError("beyond horizon").required_level is None
