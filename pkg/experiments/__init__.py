"""Command-line experiments package boundary."""

from experiments.commands import (
    COMMANDS,
    EXIT_IO,
    EXIT_NONCONVERGENCE,
    EXIT_OK,
    EXIT_VALIDATION,
    ConfigError,
    RunConfig,
    execute,
)

__all__ = [
    "COMMANDS",
    "EXIT_IO",
    "EXIT_NONCONVERGENCE",
    "EXIT_OK",
    "EXIT_VALIDATION",
    "ConfigError",
    "RunConfig",
    "execute",
]
