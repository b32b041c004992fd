"""Token stream, logical lines and ctx-annotated ASTs for analyzed Python.

Backed by the standard library's ``tokenize`` and ``ast`` modules. The
grammar is pinned to Python 3.8 (walrus yes, ``match`` no) through
``feature_version``.
"""

from __future__ import annotations

import ast
import io
import tokenize as _tk
import warnings
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from .notebook import PythonSource

GRAMMAR_VERSION = (3, 8)

_KIND = {
    _tk.NAME: "name",
    _tk.NUMBER: "number",
    _tk.STRING: "string",
    _tk.OP: "operator",
    _tk.COMMENT: "comment",
    _tk.INDENT: "indent",
    _tk.DEDENT: "dedent",
    _tk.NEWLINE: "newline",
    _tk.NL: "nl",
    _tk.ENDMARKER: "end",
    _tk.ERRORTOKEN: "error",
}
NEWLINE_TYPES = frozenset({_tk.NL, _tk.NEWLINE})
SKIP_TYPES = NEWLINE_TYPES | {_tk.INDENT, _tk.DEDENT}


class TokenizeError(Exception):
    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.msg = message
        self.line = line
        self.column = column


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.msg = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: tuple[int, int]
    end: tuple[int, int]

    @property
    def span(self) -> tuple[int, int, int]:
        return (self.start[0], self.start[1], self.end[1])


@dataclass(frozen=True)
class LogicalLine:
    tokens: tuple[Token, ...]
    physical_span: tuple[int, int]
    bracket_depth_profile: tuple[int, ...]
    joined_text: str
    mapping: tuple[tuple[int, tuple[int, int]], ...]

    def position(self, offset: int) -> tuple[int, int]:
        """Physical (line, column) of a character offset into ``joined_text``."""
        return offset_to_position(self.mapping, offset)


def physical_lines(text: str) -> list[str]:
    """Lines with their endings, split on ``\\n`` only (like ``file.readlines``)."""
    return io.StringIO(text, newline="\n").readlines() if text else []


def raw_tokens(lines: Sequence[str]) -> tuple[list[_tk.TokenInfo], _tk.TokenError | SyntaxError | None]:
    """Tokenize ``lines``; returns the tokens produced so far and any error."""
    it = iter(lines)
    out: list[_tk.TokenInfo] = []
    try:
        for tok in _tk.generate_tokens(lambda: next(it, "")):
            out.append(tok)
    except (_tk.TokenError, SyntaxError) as exc:
        return out, exc
    return out, None


def _error_position(exc: BaseException, fallback: int) -> tuple[int, int]:
    if isinstance(exc, _tk.TokenError) and len(exc.args) > 1:
        line, col = exc.args[1]
        return line, col
    if isinstance(exc, SyntaxError):
        return exc.lineno or fallback, (exc.offset or 1) - 1
    return fallback, 0


def tokenize(src: PythonSource | str) -> list[Token]:
    """Full token stream, comments and blank-line tokens included.

    Stray characters come back as ``error`` tokens; unterminated strings,
    unclosed brackets at EOF and inconsistent dedents raise TokenizeError.
    """
    text = src.text if isinstance(src, PythonSource) else src
    toks, err = raw_tokens(physical_lines(text))
    if err is not None:
        line, col = _error_position(err, len(toks) and toks[-1].start[0])
        raise TokenizeError(str(err.args[0]) if err.args else "tokenize error", line, col)
    for t in toks:
        if t.type == _tk.ERRORTOKEN and t.string[:1] in ("'", '"'):
            raise TokenizeError("unterminated string literal", t.start[0], t.start[1])
    return [Token(_KIND.get(t.type, "operator"), t.string, t.start, t.end) for t in toks]


def mute_string(text: str) -> str:
    """Replace string contents with ``x`` so punctuation inside cannot match."""
    start = text.index(text[-1]) + 1
    end = len(text) - 1
    if text[-3:] in ('"""', "'''"):
        start += 2
        end -= 2
    return text[:start] + "x" * (end - start) + text[end:]


def expand_indent(line: str) -> int:
    """Indentation width with tabs expanded to multiples of 8."""
    line = line.rstrip("\n\r")
    if "\t" not in line:
        return len(line) - len(line.lstrip())
    width = 0
    for ch in line:
        if ch == "\t":
            width = width // 8 * 8 + 8
        elif ch == " ":
            width += 1
        else:
            break
    return width


def join_tokens(tokens: Sequence[_tk.TokenInfo], lines: Sequence[str]):
    """Build the logical text of a token group.

    Comments are dropped, strings muted, and line breaks collapse to at most
    one space. Returns ``(text, comments, mapping)`` where ``mapping`` pairs
    text offsets with physical end positions (first entry: start position).
    """
    logical: list[str] = []
    comments: list[str] = []
    length = 0
    prev_row = prev_col = None
    mapping: list[tuple[int, tuple[int, int]]] = []
    for tok in tokens:
        if tok.type in SKIP_TYPES:
            continue
        if not mapping:
            mapping = [(0, tok.start)]
        if tok.type == _tk.COMMENT:
            comments.append(tok.string)
            continue
        text = mute_string(tok.string) if tok.type == _tk.STRING else tok.string
        if prev_row:
            start_row, start_col = tok.start
            if prev_row != start_row:
                prev_text = lines[prev_row - 1][prev_col - 1]
                if prev_text == "," or (prev_text not in "{[(" and text not in "}])"):
                    text = " " + text
            elif prev_col != start_col:
                text = tok.line[prev_col:start_col] + text
        logical.append(text)
        length += len(text)
        mapping.append((length, tok.end))
        prev_row, prev_col = tok.end
    return "".join(logical), comments, mapping


def offset_to_position(mapping, offset: int) -> tuple[int, int]:
    # first mapping entry whose text offset is >= offset
    lo, hi = 0, len(mapping)
    while lo < hi:
        mid = (lo + hi) // 2
        if mapping[mid][0] < offset:
            lo = mid + 1
        else:
            hi = mid
    token_offset, pos = mapping[lo]
    return pos[0], pos[1] + offset - token_offset


@dataclass
class TokenGroup:
    """Tokens ending at a NEWLINE (statement) or NL (comment-only line).

    ``blank_lines`` counts fully blank physical lines just before the group.
    """

    tokens: list[_tk.TokenInfo]
    blank_lines: int
    statement: bool
    final: bool = False


def iter_token_groups(tokens: Sequence[_tk.TokenInfo], total_lines: int,
                      on_token: Callable[[_tk.TokenInfo], None] | None = None,
                      ) -> Iterator[TokenGroup]:
    """Split a token stream into logical-line groups.

    Bracket depth is tracked so NL tokens inside brackets do not end a group.
    Tokens past the last physical line (trailing DEDENT/ENDMARKER) are
    dropped. A group holding only indentation/newline tokens is carried into
    the next one. Unterminated leftovers (normally only after a tokenize
    error) come out as a last group with ``final=True``, even if they hold
    no significant token. ``on_token`` sees every kept
    token before the group containing it is yielded.
    """
    group: list[_tk.TokenInfo] = []
    blank = 0
    parens = 0
    for tok in tokens:
        if tok.start[0] > total_lines:
            break
        if on_token is not None:
            on_token(tok)
        group.append(tok)
        if tok.type == _tk.OP:
            if tok.string in "([{":
                parens += 1
            elif tok.string in ")]}":
                parens -= 1
        elif not parens and tok.type in NEWLINE_TYPES:
            if tok.type == _tk.NL and len(group) == 1:
                blank += 1
                group = []
            elif any(t.type not in SKIP_TYPES for t in group):
                yield TokenGroup(group, blank, tok.type == _tk.NEWLINE)
                group, blank = [], 0
    if group:
        yield TokenGroup(group, blank, True, final=True)


def _wrap(t: _tk.TokenInfo) -> Token:
    return Token(_KIND.get(t.type, "operator"), t.string, t.start, t.end)


def logical_lines(tokens: Sequence[Token] | Sequence[_tk.TokenInfo],
                  text: str | None = None) -> list[LogicalLine]:
    """Join physical lines across brackets and backslashes.

    Accepts either the raw stdlib tokens or, with the source ``text``,
    re-tokenizes so the physical-line context is available. Comment-only
    and blank lines produce no LogicalLine.
    """
    if text is None:
        raw = list(tokens)
        if raw and not isinstance(raw[0], _tk.TokenInfo):
            raise TypeError("pass the source text along with wrapped tokens")
        lines = _lines_from_tokens(raw)
    else:
        lines = physical_lines(text)
        raw, _ = raw_tokens(lines)
    out = []
    for group in iter_token_groups(raw, len(lines)):
        if not group.statement:
            continue
        joined, _, mapping = join_tokens(group.tokens, lines)
        if not mapping:
            continue
        depth, profile = 0, []
        for t in group.tokens:
            if t.type == _tk.OP and t.string in ")]}":
                depth -= 1
            profile.append(depth)
            if t.type == _tk.OP and t.string in "([{":
                depth += 1
        significant = [t for t in group.tokens if t.type not in SKIP_TYPES]
        out.append(LogicalLine(
            tokens=tuple(_wrap(t) for t in group.tokens),
            physical_span=(significant[0].start[0], group.tokens[-1].start[0]),
            bracket_depth_profile=tuple(profile),
            joined_text=joined,
            mapping=tuple(mapping),
        ))
    return out


def _lines_from_tokens(raw: Sequence[_tk.TokenInfo]) -> list[str]:
    lines: dict[int, str] = {}
    for t in raw:
        if not t.line:
            continue
        chunk = t.line.splitlines(keepends=True)
        for i, line in enumerate(chunk):
            lines.setdefault(t.start[0] + i, line)
    n = max(lines) if lines else 0
    return [lines.get(i, "\n") for i in range(1, n + 1)]


def parse_ast(src: PythonSource | str, filename: str = "<cell>") -> ast.Module:
    """Module AST whose Name nodes carry Store/Load/Del contexts."""
    text = src.text if isinstance(src, PythonSource) else src
    try:
        with warnings.catch_warnings():
            # invalid escapes and the like in analyzed code are not our warnings
            warnings.simplefilter("ignore")
            return ast.parse(text, filename=filename, feature_version=GRAMMAR_VERSION)
    except SyntaxError as exc:
        raise ParseError(exc.msg, exc.lineno or 1, (exc.offset or 1) - 1) from None
    except (ValueError, MemoryError, RecursionError) as exc:
        raise ParseError(str(exc), 1, 0) from None


def name_contexts(tree: ast.AST) -> list[tuple[str, str, int, int]]:
    """``(name, ctx, line, col)`` for every Name node, in source order."""
    names = [n for n in ast.walk(tree) if isinstance(n, ast.Name)]
    names.sort(key=lambda n: (n.lineno, n.col_offset))
    return [(n.id, type(n.ctx).__name__, n.lineno, n.col_offset) for n in names]
