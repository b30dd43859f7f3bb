"""Exception hierarchy shared by every module."""

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class SourceSpan:
    line: int
    col_start: int
    col_end: int

    def __str__(self) -> str:
        return f"line {self.line}, columns {self.col_start}-{self.col_end}"


class DLiteError(Exception):
    code = "error"


class ParseError(DLiteError):
    code = "syntax-error"

    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        where = f" at {span}" if span is not None else ""
        super().__init__(message + where)


class UnaConflict(ParseError):
    code = "una-conflict"


class NegationNotAllowed(ParseError):
    code = "negation-not-allowed"


class UnknownName(DLiteError):
    code = "unknown-name"


class FragmentUnsupported(DLiteError):
    code = "fragment-unsupported"


class BudgetExceeded(DLiteError):
    code = "budget-exceeded"


class InconsistentKB(DLiteError):
    code = "inconsistent-kb"
