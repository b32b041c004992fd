"""PEP 8 subset checker."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from ..config import FILE_RULES
from ..diagnostics import Diagnostic
from .catalog import STYLE_CODES, StyleRule, remark, rule_catalog
from .checker import check_lines, check_source


class ZeroLoc(ValueError):
    """Ratio requested over zero lines of code (reported as ``n/a``)."""


def count_style(diags: Iterable[Diagnostic], file_rules: bool = False) -> int:
    return sum(1 for d in diags
               if d.category == "style" and (file_rules or d.code not in FILE_RULES))


def ratio(count: int, loc: int) -> Fraction:
    """Exact ``count / loc``; raises ZeroLoc for ``loc == 0``."""
    if loc <= 0:
        raise ZeroLoc("ratio over zero lines of code")
    return Fraction(count, loc)


def error_ratio(diags: Iterable[Diagnostic], loc: int, file_rules: bool = False) -> Fraction:
    """Style findings per line of code; W292 is left out unless ``file_rules``."""
    return ratio(count_style(diags, file_rules), loc)


def format_ratio(value: Fraction | None, digits: int = 2) -> str:
    """Percentage text, ``n/a`` for a missing ratio (e.g. ``36.26%``)."""
    if value is None:
        return "n/a"
    return f"{float(value) * 100:.{digits}f}%"


__all__ = [
    "STYLE_CODES", "StyleRule", "ZeroLoc", "check_lines", "check_source", "count_style",
    "error_ratio", "format_ratio", "ratio", "remark", "rule_catalog",
]
