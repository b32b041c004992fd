"""Findings shared by every checker."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

CATEGORIES = ("style", "unused", "deprecated", "analysis")

# Codes emitted by the pipeline itself when part of an input cannot be analyzed.
ANALYSIS_CODES = {
    "A001": "cell or script could not be parsed; excluded from AST analyses",
    "A002": "tokenization failed; only physical style rules were checked",
    "A003": "input could not be loaded",
    "A004": "cell magic; cell excluded from analysis",
}

UNUSED_CODES = {
    "U001": "unused variable",
    "U002": "dead store",
    "U003": "unused import",
}

DEPRECATED_CODES = {
    "D001": "use of deprecated API",
}


def severity_for(code: str, category: str) -> str:
    if code.startswith("W") or category in ("unused", "deprecated", "analysis"):
        return "warning"
    return "error"


@dataclass(frozen=True)
class Diagnostic:
    """One finding, positioned in notebook coordinates when ``cell`` is set.

    ``line`` and ``column`` are 1-based. ``extra`` holds checker-specific
    payload (matched deprecation target, alias witness, ...).
    """

    code: str
    message: str
    path: str
    line: int
    column: int
    category: str
    cell: int | None = None
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")

    @property
    def severity(self) -> str:
        return severity_for(self.code, self.category)

    def sort_key(self) -> tuple:
        return (self.cell if self.cell is not None else -1, self.line, self.column, self.code)

    def located(self, path: str, cell: int | None, line: int) -> Diagnostic:
        return Diagnostic(self.code, self.message, path, line, self.column,
                          self.category, cell, self.extra)

    def format(self) -> str:
        where = self.path if self.cell is None else f"{self.path}[{self.cell}]"
        return f"{where}:{self.line}:{self.column}: {self.code} {self.message}"

    def to_dict(self) -> dict[str, Any]:
        d = {
            "code": self.code,
            "message": self.message,
            "path": self.path,
            "cell": self.cell,
            "line": self.line,
            "column": self.column,
            "category": self.category,
            "severity": self.severity,
        }
        if self.extra:
            d["extra"] = dict(self.extra)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Diagnostic:
        return cls(d["code"], d["message"], d["path"], d["line"], d["column"],
                   d["category"], d.get("cell"), dict(d.get("extra", {})))
