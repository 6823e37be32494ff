"""Shared diagnostic records for the grammar frontend, analyzer, and CLI."""

from dataclasses import dataclass


@dataclass
class Diagnostic:
    severity: str  # "error" | "warning" | "note"
    message: str
    path: str = "<input>"
    line: int = 0
    col: int = 0
    excerpt: str | None = None

    def format(self) -> str:
        tag = {"error": "#E", "warning": "#W", "note": "#N"}[self.severity]
        if self.line:
            return '%s "%s", line %d/%d: %s' % (tag, self.path, self.line, self.col, self.message)
        return '%s "%s": %s' % (tag, self.path, self.message)


def error(message, path="<input>", line=0, col=0, excerpt=None):
    return Diagnostic("error", message, path, line, col, excerpt)


def warning(message, path="<input>", line=0, col=0, excerpt=None):
    return Diagnostic("warning", message, path, line, col, excerpt)


class GrammarError(Exception):
    """Raised for unrecoverable problems in a grammar file or model."""

    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.format())
        self.diagnostic = diagnostic


class TableError(Exception):
    """Raised when a table file cannot be loaded or fails validation."""


class ParseAbort(Exception):
    """Raised internally by the engine for unrecoverable runtime faults."""
