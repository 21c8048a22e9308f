"""
Application Configuration Module
Centralized configuration management for Convolution Lab.
"""

import os
from dataclasses import dataclass, field, fields
from typing import Dict, Mapping, Optional

from dotenv import dotenv_values

from app.exceptions import InvalidConfigurationException

VALID_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
VALID_FORMATS = ["json", "csv"]
VALID_COMMANDS = [
    "eta",
    "kloosterman",
    "poincare",
    "lvalues",
    "congruence",
    "density",
    "reproduce-paper",
]


def _env(name: str, default: str):
    """Read an environment variable at instantiation time."""
    return field(default_factory=lambda: os.environ.get(name, default))


def _env_int(name: str, default: int):
    """Read an integer environment variable at instantiation time."""
    return field(default_factory=lambda: int(os.environ.get(name, str(default))))


@dataclass
class Config:
    """Application configuration with environment variable support."""

    # Logging Configuration
    LOG_LEVEL: str = _env("LOG_LEVEL", "INFO")

    # Output Paths
    OUTPUT_DIR: str = _env("CONVLAB_OUTPUT_DIR", "output")
    PROGRESS_PATH: str = _env("PROGRESS_PATH", "")
    OUTPUT_FORMAT: str = _env("OUTPUT_FORMAT", "json")

    # Series Windows
    DEFAULT_WINDOW: int = _env_int("DEFAULT_WINDOW", 2000)

    # Poincare Sums
    DEFAULT_C_MAX: int = _env_int("DEFAULT_C_MAX", 9 * 2048)
    PRECISION_BITS: int = _env_int("PRECISION_BITS", 128)

    # Residue Arithmetic
    MODULUS_T: int = _env_int("MODULUS_T", 8)

    # Parallelism
    WORKERS: int = _env_int("WORKERS", os.cpu_count() or 1)

    def __post_init__(self):
        """Validate configuration after initialization."""
        if not self.PROGRESS_PATH:
            self.PROGRESS_PATH = os.path.join(self.OUTPUT_DIR, "progress")

        if self.LOG_LEVEL.upper() not in VALID_LOG_LEVELS:
            raise InvalidConfigurationException(
                f"Invalid LOG_LEVEL: {self.LOG_LEVEL}. "
                f"Must be one of: {', '.join(VALID_LOG_LEVELS)}",
                {"LOG_LEVEL": self.LOG_LEVEL},
            )
        if self.PRECISION_BITS < 64:
            raise InvalidConfigurationException(
                f"Invalid PRECISION_BITS: {self.PRECISION_BITS}. Must be at least 64.",
                {"PRECISION_BITS": self.PRECISION_BITS},
            )
        if self.DEFAULT_WINDOW < 2:
            raise InvalidConfigurationException(
                f"Invalid DEFAULT_WINDOW: {self.DEFAULT_WINDOW}. Must be at least 2.",
                {"DEFAULT_WINDOW": self.DEFAULT_WINDOW},
            )
        if self.WORKERS < 1:
            raise InvalidConfigurationException(
                f"Invalid WORKERS: {self.WORKERS}. Must be at least 1.",
                {"WORKERS": self.WORKERS},
            )

    def ensure_directories(self) -> None:
        """Create output directories on demand."""
        os.makedirs(self.OUTPUT_DIR, exist_ok=True)
        os.makedirs(self.PROGRESS_PATH, exist_ok=True)

    def get_log_config(self) -> dict:
        """Get logging configuration."""
        return {
            "level": self.LOG_LEVEL.upper(),
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        }

    def __repr__(self) -> str:
        return f"Config({self.__dict__})"


@dataclass
class RunConfig:
    """Resolved settings for one CLI invocation."""

    command: str
    window: int
    c_max: int
    precision_bits: int
    modulus_T: int
    output_path: Optional[str] = None
    format: str = "json"
    workers: int = 1
    extra: Dict[str, object] = field(default_factory=dict)

    # key=value file keys, matched case-insensitively
    FILE_KEYS = {
        "window": int,
        "c_max": int,
        "precision_bits": int,
        "modulus_t": int,
        "output_path": str,
        "format": str,
        "workers": int,
    }

    def __post_init__(self):
        if self.command not in VALID_COMMANDS:
            raise InvalidConfigurationException(
                f"Unknown command: {self.command}",
                {"command": self.command, "valid_commands": VALID_COMMANDS},
            )
        if self.window < 2:
            raise InvalidConfigurationException(
                f"window must be at least 2, got {self.window}",
                {"window": self.window},
            )
        if self.precision_bits < 64:
            raise InvalidConfigurationException(
                f"precision_bits must be at least 64, got {self.precision_bits}",
                {"precision_bits": self.precision_bits},
            )
        if self.c_max < 1:
            raise InvalidConfigurationException(
                f"c_max must be positive, got {self.c_max}", {"c_max": self.c_max}
            )
        if self.modulus_T < 1:
            raise InvalidConfigurationException(
                f"modulus_T must be positive, got {self.modulus_T}",
                {"modulus_T": self.modulus_T},
            )
        if self.format not in VALID_FORMATS:
            raise InvalidConfigurationException(
                f"Unknown format: {self.format}",
                {"format": self.format, "valid_formats": VALID_FORMATS},
            )
        if self.workers < 1:
            raise InvalidConfigurationException(
                f"workers must be at least 1, got {self.workers}",
                {"workers": self.workers},
            )

    @classmethod
    def from_sources(
        cls,
        command: str,
        flags: Mapping[str, Optional[object]],
        config_file: Optional[str] = None,
        base: Optional[Config] = None,
    ) -> "RunConfig":
        """
        Merge defaults, a key=value file and command-line flags.

        Args:
            command: Subcommand name
            flags: Flag values; None means "not given"
            config_file: Optional path to a key=value file
            base: Defaults (the global config when omitted)

        Returns:
            Validated RunConfig
        """
        base = base or config
        values: Dict[str, object] = {
            "window": base.DEFAULT_WINDOW,
            "c_max": base.DEFAULT_C_MAX,
            "precision_bits": base.PRECISION_BITS,
            "modulus_t": base.MODULUS_T,
            "output_path": None,
            "format": base.OUTPUT_FORMAT,
            "workers": base.WORKERS,
        }

        if config_file:
            if not os.path.exists(config_file):
                raise InvalidConfigurationException(
                    f"Config file not found: {config_file}", {"path": config_file}
                )
            for key, raw in dotenv_values(config_file).items():
                name = key.lower()
                if name not in cls.FILE_KEYS:
                    raise InvalidConfigurationException(
                        f"Unknown config key: {key}",
                        {"key": key, "valid_keys": sorted(cls.FILE_KEYS)},
                    )
                try:
                    values[name] = cls.FILE_KEYS[name](raw)
                except (TypeError, ValueError):
                    raise InvalidConfigurationException(
                        f"Invalid value for {key}: {raw}", {"key": key, "value": raw}
                    )

        extra: Dict[str, object] = {}
        for key, value in flags.items():
            if value is None:
                continue
            name = key.lower()
            if name in values:
                values[name] = value
            else:
                extra[name] = value

        return cls(
            command=command,
            window=int(values["window"]),
            c_max=int(values["c_max"]),
            precision_bits=int(values["precision_bits"]),
            modulus_T=int(values["modulus_t"]),
            output_path=values["output_path"],
            format=str(values["format"]),
            workers=int(values["workers"]),
            extra=extra,
        )

    def as_dict(self) -> dict:
        """Plain dictionary for run manifests."""
        return {f.name: getattr(self, f.name) for f in fields(self)}


# Global configuration instance
config = Config()
