"""Diagnostics and the exception hierarchy shared by every codec and translator."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    line: int | None = None
    column: int | None = None

    def format(self, path: str = "-") -> str:
        """Render as ``severity code path:line message``."""
        loc = path if self.line is None else f"{path}:{self.line}"
        return f"{self.severity.value} {self.code} {loc} {self.message}"


def error(code, message, line=None, column=None) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, line, column)


def warning(code, message, line=None, column=None) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, message, line, column)


def info(code, message, line=None, column=None) -> Diagnostic:
    return Diagnostic(Severity.INFO, code, message, line, column)


class ConversionError(Exception):
    """Base class for every failure raised by scenebridge.

    Carries one or more error diagnostics; ``code`` is that of the first.
    """

    def __init__(self, code: str, message: str, line=None, column=None, diagnostics=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.code = code
        self.line = line
        self.column = column
        self.diagnostics = list(diagnostics) if diagnostics else [error(code, message, line, column)]

    @classmethod
    def from_diagnostics(cls, diagnostics):
        first = next(d for d in diagnostics if d.severity is Severity.ERROR)
        return cls(first.code, first.message, first.line, first.column, diagnostics=diagnostics)


class X3DError(ConversionError):
    pass


class MeshFormatError(ConversionError):
    pass


class ScriptSyntaxError(ConversionError):
    pass


class ShearNotRepresentable(ConversionError):
    def __init__(self, message="scaleOrientation with non-uniform scale needs a shear component"):
        super().__init__("shear-not-representable", message)


class TranslationError(ConversionError):
    pass


class CompositorError(ConversionError):
    pass


def has_errors(diagnostics, strict=False) -> bool:
    bad = {Severity.ERROR, Severity.WARNING} if strict else {Severity.ERROR}
    return any(d.severity in bad for d in diagnostics)
