"""Settings, logging setup and exception handling"""

import json
import logging
import pickle

import pytest
import structlog
from pydantic import ValidationError

from shared.config import Settings, get_settings
from shared.exceptions import (
    ConfigError,
    EnergyStabilityError,
    PicardConvergenceError,
    ResidualToleranceError,
    SingularSystemError,
    handle_exception,
)
from shared.logging import setup_logging

pytestmark = pytest.mark.unit


def test_default_settings():
    settings = get_settings()
    assert settings.APP_NAME == "chmhd"
    assert settings.ASSEMBLY_QUADRATURE_DEGREE == 6
    assert settings.ERROR_QUADRATURE_DEGREE == 8
    assert settings.RESIDUAL_TOLERANCE == 1e-10
    assert settings.MAX_WORKERS == 1


def test_settings_are_cached():
    assert get_settings() is get_settings()


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("OUTPUT_DIR", "elsewhere/")
    monkeypatch.setenv("LOG_FORMAT", "json")
    monkeypatch.setenv("max_workers", "3")
    settings = get_settings()
    assert settings.OUTPUT_DIR == "elsewhere/"
    assert settings.LOG_FORMAT == "json"
    assert settings.MAX_WORKERS == 3


@pytest.mark.parametrize(
    "field, value",
    [
        ("ASSEMBLY_QUADRATURE_DEGREE", 11),
        ("ERROR_QUADRATURE_DEGREE", 0),
        ("PIVOT_THRESHOLD", 0.0),
        ("RESIDUAL_TOLERANCE", 2.0),
        ("MAX_WORKERS", 0),
        ("LOG_LEVEL", "LOUD"),
    ],
)
def test_invalid_settings_rejected(field, value):
    with pytest.raises(ValidationError):
        Settings(**{field: value})


@pytest.mark.parametrize(
    "exc, code",
    [
        (ConfigError("bad"), 4),
        (PicardConvergenceError("stuck", increment=1e-3, step=4), 2),
        (EnergyStabilityError("up"), 3),
        (SingularSystemError("zero pivot", row=2), 1),
        (ValueError("plain"), 1),
    ],
)
def test_exit_codes(exc, code):
    assert handle_exception(exc) == code


@pytest.mark.parametrize(
    "exc",
    [
        SingularSystemError("zero pivot", row=3),
        ResidualToleranceError("missed", residual=0.5),
        PicardConvergenceError("stuck", increment=1e-3, step=9),
    ],
)
def test_exceptions_survive_pickling(exc):
    exc.add_note("while running convergence level n=8")
    clone = pickle.loads(pickle.dumps(exc))
    assert type(clone) is type(exc)
    assert str(clone) == str(exc)
    assert clone.__notes__ == ["while running convergence level n=8"]
    assert vars(clone) == vars(exc)


def test_console_logging(monkeypatch, capsys):
    monkeypatch.setenv("LOG_LEVEL", "DEBUG")
    setup_logging()
    structlog.get_logger("probe").info("hello", answer=42)
    err = capsys.readouterr().err
    assert "hello" in err
    assert "answer=42" in err
    assert logging.getLogger().level == logging.DEBUG


def test_json_logging(monkeypatch, capsys):
    monkeypatch.setenv("LOG_FORMAT", "json")
    setup_logging()
    structlog.get_logger("probe").warning("careful", step=3)
    line = capsys.readouterr().err.strip().splitlines()[-1]
    record = json.loads(line)
    assert record["event"] == "careful"
    assert record["step"] == 3
    assert record["level"] == "warning"
