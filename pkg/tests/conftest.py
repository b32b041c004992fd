from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
sys.path.insert(0, str(TESTS))


def notebook_json(cells, *, nbformat=4, language="python") -> dict:
    """Minimal v4 notebook; ``cells`` are (kind, source) pairs or code strings."""
    out = []
    for c in cells:
        kind, source = c if isinstance(c, tuple) else ("code", c)
        cell = {"cell_type": kind, "metadata": {}, "source": source}
        if kind == "code":
            cell.update(execution_count=None, outputs=[])
        out.append(cell)
    return {
        "nbformat": nbformat, "nbformat_minor": 4,
        "metadata": {"kernelspec": {"name": "python3", "language": language,
                                    "display_name": "Python 3"},
                     "language_info": {"name": language}},
        "cells": out,
    }


def write_notebook(path: Path, cells, **kw) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(notebook_json(cells, **kw)), encoding="utf-8")
    return path


@pytest.fixture
def make_notebook(tmp_path):
    def make(name, cells, **kw):
        return write_notebook(tmp_path / name, cells, **kw)
    return make


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
