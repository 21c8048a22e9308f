import pytest

from app.config import Config, RunConfig
from app.exceptions import InvalidConfigurationException


@pytest.fixture
def base():
    return Config(
        LOG_LEVEL="INFO",
        OUTPUT_DIR="out",
        PROGRESS_PATH="",
        OUTPUT_FORMAT="json",
        DEFAULT_WINDOW=2000,
        DEFAULT_C_MAX=18432,
        PRECISION_BITS=128,
        MODULUS_T=8,
        WORKERS=2,
    )


def test_defaults_from_environment(monkeypatch):
    monkeypatch.setenv("DEFAULT_WINDOW", "300")
    monkeypatch.setenv("CONVLAB_OUTPUT_DIR", "results")
    monkeypatch.delenv("PROGRESS_PATH", raising=False)
    config = Config()
    assert config.DEFAULT_WINDOW == 300
    assert config.PROGRESS_PATH.endswith("progress")
    assert config.PROGRESS_PATH.startswith("results")


def test_invalid_log_level(monkeypatch):
    monkeypatch.setenv("LOG_LEVEL", "LOUD")
    with pytest.raises(InvalidConfigurationException) as exc:
        Config()
    assert exc.value.details == {"LOG_LEVEL": "LOUD"}


def test_invalid_precision():
    with pytest.raises(InvalidConfigurationException):
        Config(PRECISION_BITS=32)


def test_log_config(base):
    assert base.get_log_config()["level"] == "INFO"


def test_flags_override_file_override_defaults(tmp_path, base):
    path = tmp_path / "run.env"
    path.write_text("WINDOW=500\nc_max=900\nFORMAT=csv\n")
    run = RunConfig.from_sources(
        "density", {"window": 40, "c_max": None, "workers": None}, str(path), base
    )
    assert run.window == 40
    assert run.c_max == 900
    assert run.format == "csv"
    assert run.precision_bits == 128
    assert run.modulus_T == 8
    assert run.workers == 2


def test_extra_flags_are_kept(base):
    run = RunConfig.from_sources("eta", {"spec": "3:8"}, None, base)
    assert run.extra == {"spec": "3:8"}
    assert run.as_dict()["command"] == "eta"


def test_config_file_errors(tmp_path, base):
    with pytest.raises(InvalidConfigurationException):
        RunConfig.from_sources("eta", {}, str(tmp_path / "missing.env"), base)

    unknown = tmp_path / "unknown.env"
    unknown.write_text("COLOR=blue\n")
    with pytest.raises(InvalidConfigurationException) as exc:
        RunConfig.from_sources("eta", {}, str(unknown), base)
    assert exc.value.details["key"] == "COLOR"

    malformed = tmp_path / "malformed.env"
    malformed.write_text("WINDOW=lots\n")
    with pytest.raises(InvalidConfigurationException):
        RunConfig.from_sources("eta", {}, str(malformed), base)


@pytest.mark.parametrize(
    "overrides",
    [
        {"command": "plot"},
        {"window": 1},
        {"precision_bits": 53},
        {"c_max": 0},
        {"modulus_T": 0},
        {"format": "xml"},
        {"workers": 0},
    ],
)
def test_run_config_validation(overrides):
    values = {
        "command": "eta",
        "window": 10,
        "c_max": 90,
        "precision_bits": 128,
        "modulus_T": 8,
    }
    values.update(overrides)
    with pytest.raises(InvalidConfigurationException):
        RunConfig(**values)
