"""Shared error vocabulary.

Each category maps to a distinct CLI exit code, see cli.main.
"""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class AlignmentError(ValueError):
    """A mesh or evaluation point does not lie on the grid it must lie on."""


class ContractError(ValueError):
    """Operands are malformed (wrong lengths, wrong shapes, too few points)."""


class ConfigError(ValueError):
    """A run configuration is invalid or inconsistent."""


class ResourceLimitError(RuntimeError):
    """A run would exceed the configured memory/size guard."""
