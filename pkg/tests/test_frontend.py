from __future__ import annotations

import ast
import warnings
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from nbquality.frontend import (ParseError, TokenizeError, logical_lines, name_contexts,
                                parse_ast, tokenize)

EXAMPLES = Path(__file__).resolve().parents[1] / "examples"


def test_tokens_of_simple_assignment():
    toks = tokenize("x = 1")
    assert [(t.kind, t.text) for t in toks] == [
        ("name", "x"), ("operator", "="), ("number", "1"), ("newline", ""), ("end", "")]


def test_empty_source_tokens():
    assert [t.kind for t in tokenize("")] == ["end"]


def test_unterminated_string():
    with pytest.raises(TokenizeError) as info:
        tokenize("s = 'abc")
    assert info.value.line == 1


def test_bracket_continuation_is_one_logical_line():
    lines = logical_lines([], "f(1,\n 2)\n")
    assert len(lines) == 1
    assert lines[0].physical_span == (1, 2)


def test_two_statements_two_logical_lines():
    assert len(logical_lines([], "x = 1\ny = 2\n")) == 2


def test_bracket_depth_at_break():
    (line,) = logical_lines([], "x = (1 +\n2)\n")
    depth_at_break = [d for t, d in zip(line.tokens, line.bracket_depth_profile) if t.kind == "nl"]
    assert depth_at_break == [1]


def test_comment_and_blank_lines_yield_nothing():
    assert logical_lines([], "# only a comment\n\n") == []


def test_logical_line_positions_map_back():
    (line,) = logical_lines([], "y = [1,\n     2]\n")
    offset = line.joined_text.index("2")
    assert line.position(offset) == (2, 5)


def test_ast_contexts_for_last_expression_use():
    assert [(n, c) for n, c, *_ in name_contexts(parse_ast("x = f(); x"))] == [
        ("x", "Store"), ("f", "Load"), ("x", "Load")]


def test_for_target_is_store():
    assert ("i", "Store") in [(n, c) for n, c, *_ in name_contexts(parse_ast("for i in r: pass"))]


def test_del_context():
    assert [(n, c) for n, c, *_ in name_contexts(parse_ast("del y"))] == [("y", "Del")]


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        parse_ast("x = 1\ndef broken(:\n")
    assert info.value.line == 2


def test_walrus_is_accepted():
    parse_ast("if (n := 3) > 2:\n    pass\n")


SNIPPETS = st.sampled_from([
    "x = 1\n", "a, *b = c\n", "def f(p=1, *a, k, **kw):\n    return p\n", "class C(B):\n    z: int = 0\n",
    "for i, j in pairs:\n    total += i\n", "with open(p) as fh, ctx() as (u, v):\n    pass\n",
    "try:\n    go()\nexcept E as err:\n    raise\n", "import a.b as c\nfrom d import e as f, g\n",
    "y = [k for k in range(3) if k]\n", "z = lambda q: q + 1\n", "del m[0], n\n",
    "s = f'{a!r:>{w}}'\n", "while x:\n    x -= 1\nelse:\n    pass\n", "q = {k: v for k, v in d.items()}\n",
    "x = (1 +\n     2)\n", "print('a', \\\n      'b')\n", "# comment\n\n", "if a:\n\tpass\n",
])


@settings(max_examples=150, deadline=None)
@given(st.lists(SNIPPETS, min_size=1, max_size=6))
def test_detokenization_reconstructs_source(parts):
    text = "".join(parts)
    toks = tokenize(text)
    lines = text.splitlines(keepends=True)
    rebuilt, row, col = [], 1, 0
    for t in toks:
        if t.kind in ("dedent", "end"):
            continue
        (srow, scol), (erow, ecol) = t.start, t.end
        while row < srow:
            rebuilt.append(lines[row - 1][col:])
            row, col = row + 1, 0
        rebuilt.append(lines[row - 1][col:scol])
        rebuilt.append(t.text)
        row, col = erow, ecol
    while row <= len(lines):
        rebuilt.append(lines[row - 1][col:])
        row, col = row + 1, 0
    assert "".join(rebuilt) == text
    spans = [(t.start, t.end) for t in toks if t.kind not in ("dedent", "end", "indent")]
    for (_, end), (start, _) in zip(spans, spans[1:]):
        assert end <= start


@settings(max_examples=150, deadline=None)
@given(st.lists(SNIPPETS, min_size=1, max_size=6))
def test_every_name_has_one_context(parts):
    tree = parse_ast("".join(parts))
    for node in ast.walk(tree):
        if isinstance(node, ast.Name):
            assert type(node.ctx).__name__ in ("Load", "Store", "Del")


def test_examples_parse_like_reference_parser():
    files = sorted(EXAMPLES.glob("**/*.py"))
    if not files:
        pytest.skip("no example scripts")
    for f in files:
        text = f.read_text(encoding="utf-8", errors="replace")
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                reference = ast.parse(text)
        except SyntaxError:
            with pytest.raises(ParseError):
                parse_ast(text)
            continue
        try:
            ours = parse_ast(text)
        except ParseError:
            continue  # newer-than-3.8 syntax, outside the supported grammar
        assert name_contexts(ours) == name_contexts(reference), f
