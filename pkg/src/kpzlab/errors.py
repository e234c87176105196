"""Error type shared by every module.

Each failure carries a stable machine-readable ``code`` so that callers
(and the CLI) can branch on the failure kind without parsing messages.
"""

from __future__ import annotations


class LabError(ValueError):
    """Raised on violated preconditions; ``code`` names the failure."""

    def __init__(self, code: str, message: str = "") -> None:
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class ConfigError(LabError):
    """Invalid experiment configuration (CLI exit code 2)."""

    def __init__(self, message: str) -> None:
        super().__init__("CONFIG_INVALID", message)
