"""Tests for the exception hierarchy and error documents."""
import logging
import warnings
from pathlib import Path

import pytest
from pydantic import ValidationError
from releff.datasets import OutcomeSpec, load_csv
from releff.efficiency.analysis import AnalysisRequest
from releff.exceptions import (
    BadLevel,
    ConfigurationError,
    DataError,
    EmptyRiskSet,
    NumericalError,
    ReleffError,
    SeparationDetected,
    UnsupportedForBootstrap,
    ZeroDenominator,
)
from releff.utils.errors import (
    EXIT_CONFIGURATION,
    EXIT_DATA,
    EXIT_NUMERICAL,
    EXIT_OTHER,
    error_document,
    error_module,
    exit_code,
    group_warnings,
    module_of,
)

from tests.utils import DataFactory


def validation_error() -> ValidationError:
    try:
        AnalysisRequest(estimand="rd", kind="fully_adjusted")
    except ValidationError as e:
        return e
    raise AssertionError("request should not validate")


class TestExitCodes:
    """Test exit_code."""

    @pytest.mark.parametrize(
        "error,code",
        [
            (ConfigurationError("bad flag"), EXIT_CONFIGURATION),
            (UnsupportedForBootstrap("survival"), EXIT_CONFIGURATION),
            (BadLevel("row 2"), EXIT_DATA),
            (EmptyRiskSet(3), EXIT_DATA),
            (ZeroDenominator(2, 5), EXIT_NUMERICAL),
            (SeparationDetected("diverged"), EXIT_NUMERICAL),
            (RuntimeError("boom"), EXIT_OTHER),
        ],
    )
    def test_families(self, error: BaseException, code: int) -> None:
        """Test each family maps to its code."""
        assert exit_code(error) == code

    def test_validation_error_is_configuration(self) -> None:
        """Test pydantic validation failures exit with 2."""
        assert exit_code(validation_error()) == EXIT_CONFIGURATION

    def test_hierarchy(self) -> None:
        """Test every family derives from the package base class."""
        for family in (ConfigurationError, DataError, NumericalError):
            assert issubclass(family, ReleffError)


class TestModuleAttribution:
    """Test module_of and error_module."""

    def test_module_of(self) -> None:
        """Test dotted names inside the package and None outside it."""
        assert module_of("/site-packages/releff/nuisance/logistic.py") == "releff.nuisance.logistic"
        assert module_of("/src/releff/simulation/__init__.py") == "releff.simulation"
        assert module_of("/usr/lib/python3/json/decoder.py") is None

    def test_innermost_package_frame(self, tmp_path: Path) -> None:
        """Test the raising module is named."""
        path = tmp_path / "data.csv"
        path.write_text("y,age\n7,young\n", encoding="utf-8")

        with pytest.raises(BadLevel) as exc_info:
            load_csv(path, DataFactory.schema(continuous=False), OutcomeSpec(kind="ordinal", K=3))

        assert error_module(exc_info.value) == "releff.datasets"

    def test_error_without_traceback(self) -> None:
        """Test an exception that was never raised."""
        assert error_module(ValueError("x")) == "releff"


class TestErrorDocument:
    """Test error_document."""

    def test_fields(self) -> None:
        """Test type, message, module and exit code."""
        document = error_document(EmptyRiskSet(4))["error"]

        assert document["type"] == "EmptyRiskSet"
        assert "grid index 4" in document["message"]
        assert document["exit_code"] == EXIT_DATA
        assert "notes" not in document

    def test_failure_is_logged(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test the log record carries the attributed module and exit code."""
        with caplog.at_level(logging.ERROR, logger="releff.utils.errors"):
            error_document(ZeroDenominator(3, 5))

        (record,) = caplog.records
        assert record.levelno == logging.ERROR
        assert record.error_module == "releff"
        assert record.exit_code == EXIT_NUMERICAL

    def test_notes(self) -> None:
        """Test notes added on the way up are kept."""
        error = ZeroDenominator(1, 2)
        error.add_note("replication 7")

        assert error_document(error)["error"]["notes"] == ["replication 7"]


class TestGroupWarnings:
    """Test group_warnings."""

    def test_grouped_and_deduplicated(self) -> None:
        """Test messages are grouped by module in first-seen order."""
        records = [
            warnings.WarningMessage(UserWarning("floored"), UserWarning, "/x/releff/efficiency/survival.py", 10),
            warnings.WarningMessage(UserWarning("unseen"), UserWarning, "/x/releff/nuisance/regression.py", 20),
            warnings.WarningMessage(UserWarning("floored"), UserWarning, "/x/releff/efficiency/survival.py", 11),
            warnings.WarningMessage(UserWarning("other"), UserWarning, "/x/numpy/core.py", 1),
        ]

        grouped = group_warnings(records)

        assert grouped == {
            "releff.efficiency.survival": ["floored"],
            "releff.nuisance.regression": ["unseen"],
            "releff": ["other"],
        }
