"""Exception types shared across the package.

User-facing input problems raise :class:`InputError` (or a subclass), which
the CLI maps to exit code 2. Contract violations inside operations raise
plain :class:`ValueError`; anything else escaping a command is treated as an
internal invariant failure (exit code 1).
"""


class InputError(Exception):
    """A problem with user-supplied input (files, config, labels)."""


class ParseError(InputError):
    """Malformed input file content, carrying file/line context."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif path is not None:
            where += " "
        super().__init__(f"{where}{message}")


class ValidationError(InputError):
    """Input parsed but violates a closed vocabulary or schema."""
