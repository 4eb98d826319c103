"""Tests for error classification and exit codes."""

from pathlib import Path

import pytest

from stimtomo.errors import (
    ConfigError,
    EmptyBasisError,
    ErrorType,
    InputFileError,
    NonConvergenceError,
    RecordSchemaError,
    build_error_context,
    classify_error,
    exit_code_for,
)


class TestClassification:
    """Tests for classify_error and exit_code_for."""

    @pytest.mark.parametrize(
        ("exc", "code"),
        [
            (ConfigError("alpha_sq", "out of range"), 2),
            (InputFileError("missing.json"), 2),
            (FileNotFoundError("x"), 2),
            (ValueError("bad"), 2),
            (RecordSchemaError(4, "missing column"), 3),
            (EmptyBasisError("H/V x D/A"), 3),
            (NonConvergenceError("iteration cap"), 4),
        ],
    )
    def test_exit_codes(self, exc: Exception, code: int) -> None:
        assert exit_code_for(exc) == code

    def test_unclassified_raises(self) -> None:
        """Unexpected exceptions are bugs, not exit codes."""
        with pytest.raises(TypeError):
            classify_error(RuntimeError("boom"))


class TestErrorContext:
    """Tests for build_error_context."""

    def test_carries_row(self) -> None:
        context = build_error_context(RecordSchemaError(7, "not an integer"))
        assert context.error_type is ErrorType.DATA
        assert context.row == 7
        assert "row 7" in context.message

    def test_carries_field_and_path(self) -> None:
        assert build_error_context(ConfigError("settings", "must be 16 or 36")).field == "settings"
        context = build_error_context(InputFileError(Path("a.json")))
        assert context.path == Path("a.json")
        assert context.to_dict()["exit_code"] == 2
