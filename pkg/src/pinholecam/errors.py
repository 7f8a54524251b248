"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration/usage problems exit 64,
everything else below exits 2.
"""

from __future__ import annotations


class PinholecamError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgumentError(PinholecamError, ValueError):
    """A parameter value violates an operation's contract."""


class InvalidInputError(PinholecamError, ValueError):
    """Input data violates an operation's contract."""


class NotFoundError(PinholecamError):
    """A requested feature is absent from the data (e.g. no MTF50 crossing)."""


class IllConditionedError(PinholecamError):
    """A solve would divide by a vanishing transfer-function value."""


class DivergenceError(PinholecamError):
    """An iterative solver blew past its divergence guard."""


class ParseError(PinholecamError):
    """A file could not be parsed; carries the path and, when known, a byte offset."""

    def __init__(self, path, reason: str, offset: int | None = None):
        self.path = str(path)
        self.reason = reason
        self.offset = offset
        where = self.path if offset is None else f"{self.path} at byte {offset}"
        super().__init__(f"{where}: {reason}")


class ConfigError(PinholecamError):
    """A run configuration failed to parse or validate (CLI usage error)."""
