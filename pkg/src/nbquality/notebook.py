"""Notebook documents, the cell chain, and sibling script discovery."""

from __future__ import annotations

import io
import json
import logging
import os
import re
import tokenize
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

log = logging.getLogger(__name__)

SCRIPT_SUFFIXES = frozenset({".py"})
NOTEBOOK_SUFFIX = ".ipynb"
SKIP_DIRS = frozenset({"__pycache__"})


class NotebookError(Exception):
    """Base class for documents that cannot become a Notebook."""


class MalformedDocument(NotebookError):
    pass


class UnsupportedVersion(NotebookError):
    pass


class NonPythonNotebook(NotebookError):
    pass


@dataclass(frozen=True)
class Cell:
    kind: str  # code | markdown | raw
    source_lines: tuple[str, ...]
    index_in_document: int
    execution_count: int | None = None
    n_outputs: int = 0
    trailing_newline: bool = False

    @property
    def source(self) -> str:
        text = "\n".join(self.source_lines)
        return text + "\n" if self.trailing_newline else text


@dataclass(frozen=True)
class Notebook:
    path: str
    format_version: tuple[int, int]
    cells: tuple[Cell, ...]
    metadata_language: str = "python"

    def cells_of(self, kind: str) -> list[Cell]:
        return [c for c in self.cells if c.kind == kind]


@dataclass(frozen=True)
class PythonSource:
    """Analyzable Python text plus the map back to where each line came from.

    ``line_map[i]`` is the origin of line ``i + 1`` as ``(cell_index,
    original_line)``; ``cell_index`` is None for standalone scripts.
    Normalization blanks lines instead of deleting them, so the map is
    positional.
    """

    text: str
    line_map: tuple[tuple[int | None, int], ...]
    suppressed_lines: frozenset[int] = frozenset()

    @classmethod
    def from_script(cls, text: str) -> PythonSource:
        n = len(split_lines(text))
        return cls(text, tuple((None, i) for i in range(1, n + 1)))

    @property
    def lines(self) -> list[str]:
        return split_lines(self.text)

    def origin(self, line: int) -> tuple[int | None, int]:
        if 1 <= line <= len(self.line_map):
            return self.line_map[line - 1]
        # W292-style findings may sit one past the end of an empty source.
        cell = self.line_map[-1][0] if self.line_map else None
        return cell, line


def split_lines(text: str) -> list[str]:
    """Split on newlines only; a trailing newline does not start a new line."""
    if not text:
        return []
    parts = text.split("\n")
    if parts[-1] == "":
        parts.pop()
    return parts


def _normalize_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


@dataclass(frozen=True)
class ChainEntry:
    code_cell: Cell | None  # None only for the synthetic entry of a code-less notebook
    preceding_markdown: tuple[Cell, ...]
    source: PythonSource

    @property
    def cell_index(self) -> int | None:
        return self.code_cell.index_in_document if self.code_cell else None


@dataclass(frozen=True)
class ChainCounts:
    n_code_cells: int
    n_markdown_cells: int
    n_raw_cells: int
    total_loc: int
    markdown_loc: int
    n_outputs: int


@dataclass(frozen=True)
class CellChain:
    notebook_path: str
    entries: tuple[ChainEntry, ...]
    counts: ChainCounts


@dataclass(frozen=True)
class NormalizationConfig:
    strip_magics: bool = True


@dataclass(frozen=True)
class ExternalScript:
    path: str
    source: PythonSource
    loc: int


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

def _join_source(value: Any, where: str) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, list) and all(isinstance(s, str) for s in value):
        return "".join(value)
    raise MalformedDocument(f"{where}: source must be a string or list of strings")


def _make_cell(kind: str, raw_source: str, index: int,
               execution_count: Any = None, outputs: Any = None) -> Cell:
    text = _normalize_newlines(raw_source)
    if execution_count is not None and (
            not isinstance(execution_count, int) or execution_count < 0):
        execution_count = None
    return Cell(
        kind=kind,
        source_lines=tuple(split_lines(text)),
        index_in_document=index,
        execution_count=execution_count if kind == "code" else None,
        n_outputs=len(outputs) if isinstance(outputs, list) else 0,
        trailing_newline=text.endswith("\n"),
    )


def _cells_v4(doc: dict) -> list[Cell]:
    raw_cells = doc.get("cells")
    if not isinstance(raw_cells, list):
        raise MalformedDocument("v4 document without a 'cells' list")
    cells = []
    for i, c in enumerate(raw_cells):
        if not isinstance(c, dict):
            raise MalformedDocument(f"cell {i} is not an object")
        kind = c.get("cell_type")
        if kind not in ("code", "markdown", "raw"):
            raise MalformedDocument(f"cell {i}: unknown cell_type {kind!r}")
        src = _join_source(c.get("source", ""), f"cell {i}")
        cells.append(_make_cell(kind, src, i, c.get("execution_count"), c.get("outputs")))
    return cells


def _cells_v3(doc: dict) -> list[Cell]:
    worksheets = doc.get("worksheets", [])
    if not isinstance(worksheets, list):
        raise MalformedDocument("v3 document with non-list 'worksheets'")
    cells: list[Cell] = []
    for w, sheet in enumerate(worksheets):
        if not isinstance(sheet, dict) or not isinstance(sheet.get("cells", []), list):
            raise MalformedDocument(f"worksheet {w} is malformed")
        for c in sheet.get("cells", []):
            i = len(cells)
            if not isinstance(c, dict):
                raise MalformedDocument(f"cell {i} is not an object")
            kind = c.get("cell_type")
            if kind == "code":
                src = _join_source(c.get("input", ""), f"cell {i}")
                cells.append(_make_cell("code", src, i, c.get("prompt_number"), c.get("outputs")))
            elif kind == "heading":
                src = _join_source(c.get("source", ""), f"cell {i}")
                level = c.get("level", 1)
                level = level if isinstance(level, int) and level > 0 else 1
                cells.append(_make_cell("markdown", "#" * level + " " + src, i))
            elif kind in ("markdown", "raw"):
                cells.append(_make_cell(kind, _join_source(c.get("source", ""), f"cell {i}"), i))
            else:
                raise MalformedDocument(f"cell {i}: unknown cell_type {kind!r}")
    return cells


def _declared_language(doc: dict, cells_v3: bool) -> str | None:
    meta = doc.get("metadata")
    if not isinstance(meta, dict):
        return None
    for key in ("kernelspec", "language_info"):
        section = meta.get(key)
        if isinstance(section, dict):
            lang = section.get("language") if key == "kernelspec" else section.get("name")
            if isinstance(lang, str) and lang:
                return lang
    if cells_v3 and isinstance(meta.get("language"), str):
        return meta["language"]
    return None


def _is_python(lang: str) -> bool:
    return lang.lower().startswith(("python", "ipython"))


def parse_notebook(data: bytes, path: str = "<notebook>", *,
                   allow_non_python: bool = False) -> Notebook:
    """Parse a v3 or v4 notebook document into cells in document order."""
    try:
        doc = json.loads(data.decode("utf-8-sig") if isinstance(data, bytes) else data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"not a JSON document: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDocument("top level is not an object")
    major, minor = doc.get("nbformat"), doc.get("nbformat_minor", 0)
    if not isinstance(major, int) or isinstance(major, bool):
        raise MalformedDocument("missing integer 'nbformat'")
    if major not in (3, 4):
        raise UnsupportedVersion(f"nbformat {major} is not supported")
    if not isinstance(minor, int):
        minor = 0
    cells = _cells_v4(doc) if major == 4 else _cells_v3(doc)
    lang = _declared_language(doc, major == 3)
    if lang is not None and not _is_python(lang) and not allow_non_python:
        raise NonPythonNotebook(f"notebook declares language {lang!r}")
    return Notebook(path, (major, minor), tuple(cells), lang or "python")


def load_notebook(path: str | os.PathLike, *, allow_non_python: bool = False) -> Notebook:
    p = Path(path)
    return parse_notebook(p.read_bytes(), str(path), allow_non_python=allow_non_python)


# --------------------------------------------------------------------------
# normalization
# --------------------------------------------------------------------------

_HELP_QUERY = re.compile(r"^\s*(\?{1,2}[\w.]+(\(\))?|[\w.]+(\(\))?\?{1,2})\s*$")


def _magic_kind(line: str) -> bool:
    stripped = line.lstrip()
    if not stripped:
        return False
    if stripped[0] in "%!":
        return True
    return bool(_HELP_QUERY.match(line))


def _statement_boundary(lines: list[str]) -> bool:
    """True if ``lines`` form complete statements (no open bracket/string/backslash)."""
    text = "".join(line + "\n" for line in lines)
    try:
        for _ in tokenize.generate_tokens(io.StringIO(text).readline):
            pass
    except tokenize.TokenError:
        return False
    except (SyntaxError, ValueError):
        # Indentation problems do not make the next line a continuation.
        return True
    return True


def normalize_cell_source(cell: Cell, cfg: NormalizationConfig | None = None) -> PythonSource:
    """Blank out IPython-only lines, keeping the line count unchanged.

    A leading ``%%`` line suppresses the whole cell. Other candidate lines
    are only suppressed at statement boundaries, so a ``%`` inside a
    multi-line string or an open bracket is left alone.
    """
    cfg = cfg or NormalizationConfig()
    lines = list(cell.source_lines)
    idx = cell.index_in_document
    line_map = tuple((idx, i) for i in range(1, len(lines) + 1))
    suppressed: set[int] = set()
    if cfg.strip_magics and lines:
        if lines[0].lstrip().startswith("%%"):
            suppressed = set(range(1, len(lines) + 1))
        else:
            for i, line in enumerate(lines):
                if _magic_kind(line) and _statement_boundary(
                        [ln for j, ln in enumerate(lines[:i]) if j + 1 not in suppressed]):
                    suppressed.add(i + 1)
    out = ["" if i + 1 in suppressed else line for i, line in enumerate(lines)]
    text = "\n".join(out)
    if cell.trailing_newline and lines:
        text += "\n"
    return PythonSource(text, line_map, frozenset(suppressed))


def count_loc(text_or_lines: str | Iterable[str]) -> int:
    lines = split_lines(text_or_lines) if isinstance(text_or_lines, str) else text_or_lines
    return sum(1 for line in lines if line.strip())


def build_cell_chain(nb: Notebook, cfg: NormalizationConfig | None = None) -> CellChain:
    """Group markdown with the next code cell; trailing markdown goes to the last entry."""
    cfg = cfg or NormalizationConfig()
    entries: list[ChainEntry] = []
    pending: list[Cell] = []
    for cell in nb.cells:
        if cell.kind == "markdown":
            pending.append(cell)
        elif cell.kind == "code":
            entries.append(ChainEntry(cell, tuple(pending), normalize_cell_source(cell, cfg)))
            pending = []
    if pending:
        if entries:
            last = entries[-1]
            entries[-1] = ChainEntry(last.code_cell, last.preceding_markdown + tuple(pending),
                                     last.source)
        else:
            entries.append(ChainEntry(None, tuple(pending), PythonSource("", ())))
    markdown = nb.cells_of("markdown")
    counts = ChainCounts(
        n_code_cells=sum(1 for e in entries if e.code_cell is not None),
        n_markdown_cells=len(markdown),
        n_raw_cells=len(nb.cells_of("raw")),
        total_loc=sum(count_loc(e.source.text) for e in entries),
        markdown_loc=sum(count_loc(c.source_lines) for c in markdown),
        n_outputs=sum(c.n_outputs for c in nb.cells),
    )
    return CellChain(nb.path, tuple(entries), counts)


# --------------------------------------------------------------------------
# external scripts
# --------------------------------------------------------------------------

def read_python_file(path: str | os.PathLike) -> str:
    """Decode a script honouring its coding cookie; newlines normalized."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        encoding, _ = tokenize.detect_encoding(io.BytesIO(raw).readline)
        text = raw.decode(encoding)
    except (SyntaxError, LookupError, UnicodeDecodeError):
        text = raw.decode("latin-1")
    if text.startswith("\ufeff"):
        text = text[1:]
    return _normalize_newlines(text)


def _walk_files(root: Path, suffixes: Iterable[str]) -> list[Path]:
    suffixes = frozenset(suffixes)
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames
                             if not d.startswith(".") and d not in SKIP_DIRS)
        for name in sorted(filenames):
            if name.startswith("."):
                continue
            if Path(name).suffix in suffixes:
                found.append(Path(dirpath) / name)
    return found


def find_notebooks(root: str | os.PathLike) -> list[Path]:
    return _walk_files(Path(root), {NOTEBOOK_SUFFIX})


def find_scripts(root: str | os.PathLike) -> list[Path]:
    return _walk_files(Path(root), SCRIPT_SUFFIXES)


def discover_external_scripts(root: str | os.PathLike,
                              errors: list | None = None) -> list[ExternalScript]:
    """Collect ``*.py`` files under ``root``, skipping hidden dirs and checkpoints.

    Unreadable files are logged and, if ``errors`` is given, appended to it as
    ``(path, message)`` pairs.
    """
    scripts = []
    for path in find_scripts(root):
        try:
            text = read_python_file(path)
        except OSError as exc:
            log.warning("cannot read %s: %s", path, exc)
            if errors is not None:
                errors.append((str(path), str(exc)))
            continue
        scripts.append(ExternalScript(str(path), PythonSource.from_script(text), count_loc(text)))
    return scripts
