"""Code selection and run configuration shared by the checkers and the CLI."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

DEFAULT_MAX_LINE_LENGTH = 79
# End-of-file rules: computed per cell, but off unless asked for.
FILE_RULES = frozenset({"W292"})
# Off-by-default unused-variable variants.
OPT_IN_CODES = frozenset({"U002", "U003"})

CONFIG_FILES = (".nbquality.cfg", "setup.cfg", "tox.ini")
CONFIG_SECTION = "nbquality"


def _split_codes(value) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        value = value.replace("\n", ",").split(",")
    return tuple(v.strip().upper() for v in value if v and v.strip())


@dataclass(frozen=True)
class RuleConfig:
    """Which codes run, and rule parameters.

    ``select``/``ignore`` are code prefixes (``E2`` matches ``E225``).
    Without ``select`` every code runs except file rules and opt-in codes;
    ``file_rules`` turns W292 back on and counts it in statistics.
    """

    select: tuple[str, ...] = ()
    ignore: tuple[str, ...] = ()
    max_line_length: int = DEFAULT_MAX_LINE_LENGTH
    file_rules: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "select", _split_codes(self.select))
        object.__setattr__(self, "ignore", _split_codes(self.ignore))
        if self.max_line_length < 1:
            raise ValueError("max_line_length must be positive")

    def enabled(self, code: str) -> bool:
        if any(code.startswith(p) for p in self.ignore):
            # a longer, more specific select wins over a broad ignore
            longest_ignore = max(len(p) for p in self.ignore if code.startswith(p))
            if not any(code.startswith(p) and len(p) > longest_ignore for p in self.select):
                return False
        if self.select:
            return any(code.startswith(p) for p in self.select)
        if code in FILE_RULES:
            return self.file_rules
        return code not in OPT_IN_CODES

    def counted(self, code: str) -> bool:
        """Whether a style code takes part in ratio / top-N statistics."""
        return self.file_rules or code not in FILE_RULES


@dataclass(frozen=True)
class UnusedPolicy:
    """Exclusions applied before a binding is reported as unused.

    ``strict()`` disables all of them, the literal reading of "stored but
    never loaded".
    """

    ignore_underscore: bool = True
    ignore_parameters: bool = True
    ignore_imports: bool = True
    ignore_dunder_all: bool = True

    @classmethod
    def strict(cls) -> UnusedPolicy:
        return cls(False, False, False, False)


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[str, ...] = ()
    rules: RuleConfig = field(default_factory=RuleConfig)
    unused: UnusedPolicy = field(default_factory=UnusedPolicy)
    rulesets: tuple[str, ...] = ()
    output_format: str = "text"
    include_scripts: bool = False
    jobs: int = 1
    allow_non_python: bool = False

    def __post_init__(self) -> None:
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.output_format not in ("text", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")

    def echo(self) -> dict:
        """Settings that shape reported numbers, for report metadata."""
        return {
            "select": list(self.rules.select),
            "ignore": list(self.rules.ignore),
            "max_line_length": self.rules.max_line_length,
            "file_rules_counted": self.rules.file_rules,
            "unused_policy": {
                "ignore_underscore": self.unused.ignore_underscore,
                "ignore_parameters": self.unused.ignore_parameters,
                "ignore_imports": self.unused.ignore_imports,
                "ignore_dunder_all": self.unused.ignore_dunder_all,
            },
            "rulesets": [os.path.basename(p) for p in self.rulesets],
            "include_scripts": self.include_scripts,
        }


def find_repo_root(start: str | os.PathLike) -> Path:
    """Closest ancestor holding ``.git``; ``start`` itself if there is none."""
    start = Path(start).resolve()
    if start.is_file():
        start = start.parent
    for d in (start, *start.parents):
        if (d / ".git").exists():
            return d
    return start


def read_config_file(root: str | os.PathLike) -> dict[str, str]:
    """The ``[nbquality]`` section of the first config file found in ``root``."""
    for name in CONFIG_FILES:
        path = Path(root) / name
        if not path.is_file():
            continue
        parser = configparser.ConfigParser()
        parser.read(path, encoding="utf-8")
        if parser.has_section(CONFIG_SECTION):
            return {k.replace("_", "-"): v for k, v in parser.items(CONFIG_SECTION)}
    return {}


def with_rules(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, rules=replace(cfg.rules, **changes))
