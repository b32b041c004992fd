"""Per-file analysis: one notebook or script in, metrics and diagnostics out.

Nothing here raises for a bad input file. Problems become analysis
diagnostics (A001-A004) so a corpus run always completes.
"""

from __future__ import annotations

import ast
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .config import RunConfig
from .dataflow import build_access_table, unused_diagnostics
from .deprecation import DeprecationRuleset, check_deprecations, imports_library
from .diagnostics import ANALYSIS_CODES, Diagnostic
from .frontend import ParseError, parse_ast
from .notebook import (NOTEBOOK_SUFFIX, CellChain, ChainCounts, ChainEntry, NotebookError,
                       PythonSource, build_cell_chain, count_loc, load_notebook,
                       read_python_file)
from .style import check_source


@dataclass(frozen=True)
class NotebookMetrics:
    path: str
    loc: int
    n_code_cells: int
    n_markdown_cells: int
    markdown_loc: int
    diagnostics_by_code: dict[str, int]
    n_unused: int
    n_deprecated: int
    deprecated_targets: tuple[str, ...] = ()
    imports_library: bool = False

    @property
    def text_code_ratio(self) -> Fraction | None:
        """Markdown non-blank lines per code LOC; None (n/a) without code."""
        return Fraction(self.markdown_loc, self.loc) if self.loc else None

    def to_dict(self) -> dict:
        return {
            "path": self.path, "loc": self.loc, "n_code_cells": self.n_code_cells,
            "n_markdown_cells": self.n_markdown_cells, "markdown_loc": self.markdown_loc,
            "diagnostics_by_code": dict(sorted(self.diagnostics_by_code.items())),
            "n_unused": self.n_unused, "n_deprecated": self.n_deprecated,
            "deprecated_targets": list(self.deprecated_targets),
            "imports_library": self.imports_library,
        }

    @classmethod
    def from_dict(cls, d: dict) -> NotebookMetrics:
        return cls(d["path"], d["loc"], d["n_code_cells"], d["n_markdown_cells"], d["markdown_loc"],
                   dict(d["diagnostics_by_code"]), d["n_unused"], d["n_deprecated"],
                   tuple(d.get("deprecated_targets", ())), bool(d.get("imports_library", False)))


@dataclass(frozen=True)
class ScriptMetrics:
    path: str
    loc: int
    diagnostics_by_code: dict[str, int]

    def to_dict(self) -> dict:
        return {"path": self.path, "loc": self.loc,
                "diagnostics_by_code": dict(sorted(self.diagnostics_by_code.items()))}

    @classmethod
    def from_dict(cls, d: dict) -> ScriptMetrics:
        return cls(d["path"], d["loc"], dict(d["diagnostics_by_code"]))


@dataclass(frozen=True)
class Failure:
    """An input that produced no metrics at all."""

    path: str
    code: str
    message: str

    def to_dict(self) -> dict:
        return {"path": self.path, "code": self.code, "message": self.message}

    @classmethod
    def from_dict(cls, d: dict) -> Failure:
        return cls(d["path"], d["code"], d["message"])


@dataclass(frozen=True)
class FileResult:
    path: str
    diagnostics: tuple[Diagnostic, ...] = ()
    notebook: NotebookMetrics | None = None
    script: ScriptMetrics | None = None
    failure: Failure | None = None
    extra: dict = field(default_factory=dict, compare=False)


def _analysis(code: str, path: str, cell: int | None, line: int, column: int = 1,
              detail: str = "") -> Diagnostic:
    message = ANALYSIS_CODES[code] + (f": {detail}" if detail else "")
    return Diagnostic(code, message, path, line, column, "analysis", cell)


def _is_cell_magic(entry: ChainEntry) -> bool:
    cell = entry.code_cell
    return bool(cell and cell.source_lines and cell.source_lines[0].lstrip().startswith("%%"))


def analyze_sources(sources: Sequence[PythonSource], path: str, cfg: RunConfig,
                    ruleset: DeprecationRuleset | None,
                    cell_magic: Sequence[bool] | None = None) -> tuple[list[Diagnostic], list]:
    """All checks over a chain of sources; returns (diagnostics, asts)."""
    rules = cfg.rules
    diags: list[Diagnostic] = []
    asts: list[ast.Module | None] = []
    for i, src in enumerate(sources):
        cell = src.line_map[0][0] if src.line_map else None
        if cell_magic is not None and cell_magic[i]:
            if rules.enabled("A004"):
                diags.append(_analysis("A004", path, cell, 1))
            asts.append(None)
            continue
        diags.extend(check_source(src, rules, path))
        try:
            asts.append(parse_ast(src))
        except ParseError as exc:
            asts.append(None)
            c, line = src.origin(exc.line) if src.line_map else (cell, exc.line)
            if rules.enabled("A001"):
                diags.append(_analysis("A001", path, c, line, exc.column + 1, exc.msg))
    table = build_access_table(list(sources), asts)
    diags.extend(unused_diagnostics(table, path, cfg.unused, rules))
    if ruleset is not None and rules.enabled("D001"):
        diags.extend(check_deprecations(list(sources), asts, ruleset, path))
    diags.sort(key=Diagnostic.sort_key)
    return diags, asts


def analyze_chain(chain: CellChain, cfg: RunConfig, ruleset: DeprecationRuleset | None) -> FileResult:
    path = chain.notebook_path
    entries = [e for e in chain.entries if e.code_cell is not None]
    diags, asts = analyze_sources([e.source for e in entries], path, cfg, ruleset,
                                  [_is_cell_magic(e) for e in entries])
    metrics = _notebook_metrics(path, chain.counts, diags, asts, ruleset)
    return FileResult(path, tuple(diags), notebook=metrics)


def _notebook_metrics(path: str, counts: ChainCounts, diags: Sequence[Diagnostic], asts,
                      ruleset: DeprecationRuleset | None) -> NotebookMetrics:
    by_code = Counter(d.code for d in diags)
    targets = sorted({d.extra.get("target") for d in diags if d.code == "D001"} - {None})
    return NotebookMetrics(
        path=path, loc=counts.total_loc, n_code_cells=counts.n_code_cells,
        n_markdown_cells=counts.n_markdown_cells, markdown_loc=counts.markdown_loc,
        diagnostics_by_code=dict(sorted(by_code.items())),
        n_unused=by_code.get("U001", 0), n_deprecated=by_code.get("D001", 0),
        deprecated_targets=tuple(targets),
        imports_library=bool(ruleset and imports_library(asts, ruleset.root_packages)),
    )


def analyze_notebook(path: str, cfg: RunConfig, ruleset: DeprecationRuleset | None) -> FileResult:
    """Load, normalize and check one notebook; load failures become an A003 failure."""
    try:
        nb = load_notebook(path, allow_non_python=cfg.allow_non_python)
    except (OSError, NotebookError) as exc:
        detail = exc.strerror if isinstance(exc, OSError) and exc.strerror else str(exc)
        return _load_failure(path, f"{type(exc).__name__}: {detail}")
    return analyze_chain(build_cell_chain(nb), cfg, ruleset)


def _load_failure(path: str, detail: str) -> FileResult:
    diag = _analysis("A003", path, None, 1, 1, detail)
    return FileResult(path, (diag,), failure=Failure(path, "A003", diag.message))


def analyze_python_file(path: str, cfg: RunConfig, ruleset: DeprecationRuleset | None) -> FileResult:
    """A standalone script under every check (used by ``lint``)."""
    try:
        text = read_python_file(path)
    except OSError as exc:
        return _load_failure(path, f"{type(exc).__name__}: {exc.strerror or exc}")
    diags, _ = analyze_sources([PythonSource.from_script(text)], path, cfg, ruleset)
    by_code = Counter(d.code for d in diags)
    return FileResult(path, tuple(diags),
                      script=ScriptMetrics(path, count_loc(text), dict(sorted(by_code.items()))))


def analyze_script(path: str, cfg: RunConfig) -> FileResult:
    """External script for the comparison group: style rules only."""
    try:
        text = read_python_file(path)
    except OSError as exc:
        return _load_failure(path, f"{type(exc).__name__}: {exc.strerror or exc}")
    diags = check_source(PythonSource.from_script(text), cfg.rules, path)
    by_code = Counter(d.code for d in diags)
    return FileResult(path, tuple(diags),
                      script=ScriptMetrics(path, count_loc(text), dict(sorted(by_code.items()))))


def analyze_path(job: tuple[str, str, RunConfig, DeprecationRuleset | None]) -> FileResult:
    """Process-pool entry point: ``(kind, path, cfg, ruleset)``."""
    kind, path, cfg, ruleset = job
    if kind == "script":
        return analyze_script(path, cfg)
    if kind == "notebook" or Path(path).suffix == NOTEBOOK_SUFFIX:
        return analyze_notebook(path, cfg, ruleset)
    return analyze_python_file(path, cfg, ruleset)


def run_jobs(jobs: Sequence[tuple], workers: int) -> list[FileResult]:
    """Run analyses, in a process pool when ``workers > 1``; results keep job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [analyze_path(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        chunk = max(1, len(jobs) // (workers * 4))
        return list(pool.map(analyze_path, jobs, chunksize=chunk))
