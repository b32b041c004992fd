"""The PEP 8 rule subset: the most frequent codes observed in notebooks and scripts."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class StyleRule:
    code: str
    message_template: str
    phase: str  # physical | logical | blank-structure
    enabled: bool = True
    file_related: bool = False


_RULES = (
    StyleRule("E111", "indentation is not a multiple of four", "logical"),
    StyleRule("E128", "continuation line under-indented for visual indent", "logical"),
    StyleRule("E201", "whitespace after (", "logical"),
    StyleRule("E225", "missing whitespace around operator", "logical"),
    StyleRule("E231", "missing whitespace after ,, ;, or :", "logical"),
    StyleRule("E251", "unexpected spaces around keyword / parameter equals", "logical"),
    StyleRule("E261", "at least two spaces before inline comment", "logical"),
    StyleRule("E265", "block comment should start with #", "logical"),
    StyleRule("E302", "expected 2 blank lines, found 0", "blank-structure"),
    StyleRule("E501", "line too long", "physical"),
    StyleRule("E703", "statement ends with a semicolon", "logical"),
    StyleRule("W291", "trailing whitespace", "physical"),
    StyleRule("W293", "blank line contains whitespace", "physical"),
    StyleRule("W292", "no newline at end of file", "physical", enabled=False, file_related=True),
)

STYLE_CODES = frozenset(r.code for r in _RULES)
_BY_CODE = {r.code: r for r in _RULES}


def rule_catalog() -> list[StyleRule]:
    return list(_RULES)


def remark(code: str) -> str:
    rule = _BY_CODE.get(code)
    return rule.message_template if rule else ""
