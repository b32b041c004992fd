"""Line-level PEP 8 checks over a PythonSource.

The driver walks the token stream once. Physical-line rules fire at each
end-of-line token (and on every inner line of a multi-line string), and
logical-line rules fire once per token group. Rule semantics follow the
reference ``pycodestyle`` checker closely enough that the two agree on
(code, line, column) for the implemented codes, so a lot of seemingly
arbitrary state below (``indent_chances``, ``blank_before``) exists only to
reproduce its edge cases.
"""

from __future__ import annotations

import keyword
import re
import tokenize
from typing import Iterator, Sequence

from ..config import RuleConfig
from ..diagnostics import Diagnostic
from ..frontend import (NEWLINE_TYPES, SKIP_TYPES, expand_indent, iter_token_groups,
                        join_tokens, offset_to_position, physical_lines, raw_tokens)
from ..notebook import PythonSource
from .catalog import STYLE_CODES

INDENT_SIZE = 4
TOP_LEVEL_LINES = 2
METHOD_LINES = 1

SINGLETONS = frozenset(["False", "None", "True"])
KEYWORDS = frozenset(keyword.kwlist + ["print"]) - SINGLETONS
UNARY_OPERATORS = frozenset([">>", "**", "*", "+", "-"])
ARITHMETIC_OP = frozenset(["**", "*", "/", "//", "+", "-", "@"])
WS_OPTIONAL_OPERATORS = ARITHMETIC_OP.union(["^", "&", "|", "<<", ">>", "%"])
WS_NEEDED_OPERATORS = frozenset([
    "**=", "*=", "/=", "//=", "+=", "-=", "!=", "<", ">",
    "%=", "^=", "&=", "|=", "==", "<=", ">=", "<<=", ">>=", "=",
    "and", "in", "is", "or", "->", ":="])
WHITESPACE = frozenset(" \t\xa0")
SKIP_COMMENTS = SKIP_TYPES | {tokenize.COMMENT, tokenize.ERRORTOKEN}

INDENT_RE = re.compile(r"([ \t]*)")
EXTRANEOUS_WS_RE = re.compile(r"[\[({][ \t]|[ \t][\]}),;:](?!=)")
DOCSTRING_RE = re.compile(r'u?r?["\']')
STARTSWITH_DEF_RE = re.compile(r"^(async\s+def|def)\b")
STARTSWITH_GENERIC_RE = re.compile(r"^(async\s+def|def|class|type)\s+\w+\[")
STARTSWITH_TOP_LEVEL_RE = re.compile(r"^(async\s+def\s+|def\s+|class\s+|@)")
NOQA_RE = re.compile(r"# no(?:qa|pep8)\b", re.I)


def _noqa(text: str) -> bool:
    return bool(text) and NOQA_RE.search(text) is not None


# --------------------------------------------------------------------------
# physical-line rules
# --------------------------------------------------------------------------

def trailing_whitespace(line: str):
    line = line.rstrip("\n\r\x0c")
    stripped = line.rstrip(" \t\v")
    if line != stripped:
        if stripped:
            return len(stripped), "W291", "trailing whitespace"
        return 0, "W293", "blank line contains whitespace"
    return None


def missing_final_newline(line: str, lines: Sequence[str], line_number: int):
    if line_number == len(lines) and line.rstrip("\r\n") == line:
        return len(lines[-1]), "W292", "no newline at end of file"
    return None


def line_too_long(line: str, max_length: int, multiline: bool, line_number: int, noqa: bool):
    text = line.rstrip()
    length = len(text)
    if length <= max_length or noqa:
        return None
    if line_number == 1 and text.startswith("#!"):
        return None
    # long URLs alone in a comment or docstring line are tolerated
    chunks = text.split()
    if ((len(chunks) == 1 and multiline) or
            (len(chunks) == 2 and chunks[0] == "#")) and \
            len(text) - len(chunks[-1]) < max_length - 7:
        return None
    return max_length, "E501", f"line too long ({length} > {max_length} characters)"


# --------------------------------------------------------------------------
# logical-line rules; each yields (offset, code, message)
# offset is an int into the logical text or a (row, col) tuple
# --------------------------------------------------------------------------

def indentation(logical_line: str, indent_level: int):
    if logical_line and indent_level % INDENT_SIZE:
        yield 0, "E111", "indentation is not a multiple of 4"


def whitespace_after_open_bracket(logical_line: str):
    for match in EXTRANEOUS_WS_RE.finditer(logical_line):
        text = match.group()
        if text[-1].isspace():
            yield match.start() + 1, "E201", f"whitespace after '{text.strip()}'"


def trailing_semicolon(logical_line: str):
    last = len(logical_line) - 1
    found = logical_line.find(";")
    while found > -1:
        if found >= last:
            yield found, "E703", "statement ends with a semicolon"
        found = logical_line.find(";", found + 1)


def operator_and_comma_spacing(tokens):
    """E225 (operator spacing) and E231 (comma/semicolon/colon spacing)."""
    need_space = False
    prev_type = tokenize.OP
    prev_text = prev_end = None
    brace_stack: list[str] = []
    for tok_type, text, start, end, line in tokens:
        if tok_type == tokenize.OP and text in {"[", "(", "{"}:
            brace_stack.append(text)
        elif tok_type == tokenize.NAME and text == "lambda":
            brace_stack.append("l")
        elif brace_stack:
            if tok_type == tokenize.OP and text in {"]", ")", "}"}:
                brace_stack.pop()
            elif brace_stack[-1] == "l" and tok_type == tokenize.OP and text == ":":
                brace_stack.pop()

        if tok_type in SKIP_COMMENTS:
            continue

        if tok_type == tokenize.OP and text in {",", ";", ":"}:
            next_char = line[end[1]:end[1] + 1]
            if next_char not in WHITESPACE and next_char not in "\r\n":
                if text == ":" and brace_stack[-1:] == ["["]:
                    pass  # slice
                elif text == "," and next_char in ")]":
                    pass  # one-tuple / trailing comma
                else:
                    yield start, "E231", f"missing whitespace after {text!r}"

        if need_space:
            if start != prev_end:
                if need_space is not True and not need_space[1]:
                    yield need_space[0], "E225", "missing whitespace around operator"
                need_space = False
            elif (prev_text == "/" and text in {",", ")", ":"}
                  or prev_text == ")" and text == ":"):
                pass  # positional-only marker in a signature
            else:
                if need_space is True or need_space[1]:
                    yield prev_end, "E225", "missing whitespace around operator"
                need_space = False
        elif tok_type in (tokenize.OP, tokenize.NAME) and prev_end is not None:
            if text == "=" and brace_stack[-1:] in (["l"], ["("]):
                pass  # keyword argument or default
            elif text in WS_NEEDED_OPERATORS:
                need_space = True
            elif text in UNARY_OPERATORS:
                if prev_type == tokenize.OP and prev_text in "}])" or (
                        prev_type != tokenize.OP and
                        prev_text not in KEYWORDS and
                        not keyword.issoftkeyword(prev_text)):
                    need_space = None
            elif text in WS_OPTIONAL_OPERATORS:
                need_space = None

            if need_space is None:
                # optional spacing must at least be symmetric
                need_space = (prev_end, start != prev_end)
            elif need_space and start == prev_end:
                yield prev_end, "E225", "missing whitespace around operator"
                need_space = False
        prev_type = tok_type
        prev_text = text
        prev_end = end


def keyword_equals_spacing(logical_line: str, tokens):
    """E251: no spaces around ``=`` of keyword arguments and plain defaults."""
    parens: list[str] = []
    no_space = False
    require_space = False
    prev_end = None
    annotated_arg = False
    in_def = bool(STARTSWITH_DEF_RE.match(logical_line))
    in_generic = bool(STARTSWITH_GENERIC_RE.match(logical_line))
    message = "unexpected spaces around keyword / parameter equals"

    for tok_type, text, start, end, _line in tokens:
        if tok_type == tokenize.NL:
            continue
        if no_space:
            no_space = False
            if start != prev_end:
                yield prev_end, "E251", message
        if require_space:
            require_space = False
        if tok_type == tokenize.OP:
            if text in "([":
                parens.append(text)
            elif text in ")]" and parens:
                parens.pop()
            elif text == ":" and in_def and parens == ["("]:
                annotated_arg = True
            elif len(parens) == 1 and text == ",":
                annotated_arg = False
            elif parens and text == "=":
                if (in_generic and parens == ["["]) or (annotated_arg and parens == ["("]):
                    require_space = True
                else:
                    no_space = True
                    if start != prev_end:
                        yield prev_end, "E251", message
            if not parens:
                annotated_arg = False
        prev_end = end


def comment_spacing(tokens):
    """E261 (inline comment too close) and E265 (block comment prefix)."""
    prev_end = (0, 0)
    for tok_type, text, start, end, line in tokens:
        if tok_type == tokenize.COMMENT:
            inline = line[:start[1]].strip()
            if inline and prev_end[0] == start[0] and start[1] < prev_end[1] + 2:
                yield prev_end, "E261", "at least two spaces before inline comment"
            symbol, _sp, _comment = text.partition(" ")
            bad_prefix = symbol not in "#:" and (symbol.lstrip("#")[:1] or "#")
            if not inline and bad_prefix and (bad_prefix != "!" or start[0] > 1):
                if bad_prefix != "#":
                    yield start, "E265", "block comment should start with '# '"
        elif tok_type != tokenize.NL:
            prev_end = end


def _is_one_liner(logical_line, indent_level, lines, line_number) -> bool:
    if not STARTSWITH_TOP_LEVEL_RE.match(logical_line):
        return False
    idx = line_number - 1
    prev_indent = 0 if idx < 1 else expand_indent(lines[idx - 1])
    if prev_indent > indent_level:
        return False
    while idx < len(lines):
        line = lines[idx].strip()
        if not line.startswith("@") and STARTSWITH_TOP_LEVEL_RE.match(line):
            break
        idx += 1
    else:
        return False
    nxt = idx + 1
    while nxt < len(lines):
        if lines[nxt].strip():
            break
        nxt += 1
    else:
        return True
    return expand_indent(lines[nxt]) <= indent_level


def blank_line_structure(state: _Run, logical_line: str):
    """E302; the other blank-line branches are kept because they pre-empt it."""
    if not state.previous_logical and state.blank_before < TOP_LEVEL_LINES:
        return
    if state.previous_logical.startswith("@"):
        return
    if (state.blank_lines > TOP_LEVEL_LINES or
            (state.indent_level and state.blank_lines == METHOD_LINES + 1)):
        return
    if STARTSWITH_TOP_LEVEL_RE.match(logical_line):
        if (_is_one_liner(logical_line, state.indent_level, state.lines, state.line_number)
                and state.blank_before == 0):
            return
        if state.indent_level:
            return
        if state.blank_before != TOP_LEVEL_LINES:
            yield 0, "E302", f"expected {TOP_LEVEL_LINES} blank lines, found {state.blank_before}"


def continuation_indent(logical_line, tokens, indent_level, indent_char, noqa):
    """E128, with the full visual/hanging indent bookkeeping it depends on."""
    first_row = tokens[0][2][0]
    nrows = 1 + tokens[-1][2][0] - first_row
    if noqa or nrows == 1:
        return

    indent_next = logical_line.endswith(":")
    row = depth = 0
    valid_hangs = (INDENT_SIZE,) if indent_char != "\t" else (INDENT_SIZE, INDENT_SIZE * 2)
    parens = [0] * nrows
    rel_indent = [0] * nrows
    open_rows = [[0]]
    hangs: list = [None]
    indent_chances: dict = {}
    last_indent = tokens[0][2]
    visual_indent = None
    last_token_multiline = False
    indent = [last_indent[1]]
    hang = 0
    hanging_indent = False

    for tok_type, text, start, end, line in tokens:
        newline = row < start[0] - first_row
        if newline:
            row = start[0] - first_row
            newline = not last_token_multiline and tok_type not in NEWLINE_TYPES

        if newline:
            last_indent = start
            rel_indent[row] = expand_indent(line) - indent_level
            close_bracket = tok_type == tokenize.OP and text in "]})"
            for open_row in reversed(open_rows[depth]):
                hang = rel_indent[row] - rel_indent[open_row]
                hanging_indent = hang in valid_hangs
                if hanging_indent:
                    break
            if hangs[depth]:
                hanging_indent = hang == hangs[depth]
            visual_indent = (not close_bracket and hang > 0 and
                             indent_chances.get(start[1]))

            if close_bracket and indent[depth]:
                pass  # E124 territory
            elif close_bracket and not hang:
                pass
            elif indent[depth] and start[1] < indent[depth]:
                if visual_indent is not True:
                    yield start, "E128", "continuation line under-indented for visual indent"
            elif hanging_indent or (indent_next and rel_indent[row] == 2 * INDENT_SIZE):
                hangs[depth] = hang
            elif visual_indent is True:
                indent[depth] = start[1]
            elif visual_indent in (text, str):
                pass
            else:
                if hang <= 0 or indent[depth]:
                    pass
                elif not close_bracket and hangs[depth]:
                    pass
                else:
                    hangs[depth] = hang

        # look for visual indenting
        if (parens[row] and tok_type not in (tokenize.NL, tokenize.COMMENT)
                and not indent[depth]):
            indent[depth] = start[1]
            indent_chances[start[1]] = True
        elif tok_type in (tokenize.STRING, tokenize.COMMENT):
            # implicit string concatenation and comments may line up
            indent_chances[start[1]] = str
        elif not row and not depth and text in ("assert", "raise", "with"):
            indent_chances[end[1] + 1] = True
        elif not indent_chances and not row and not depth and text == "if":
            indent_chances[end[1] + 1] = True
        elif text == ":" and line[end[1]:].isspace():
            open_rows[depth].append(row)

        if tok_type == tokenize.OP:
            if text in "([{":
                depth += 1
                indent.append(0)
                hangs.append(None)
                if len(open_rows) == depth:
                    open_rows.append([])
                open_rows[depth].append(row)
                parens[row] += 1
            elif text in ")]}" and depth > 0:
                prev_indent = indent.pop() or last_indent[1]
                hangs.pop()
                for d in range(depth):
                    if indent[d] > prev_indent:
                        indent[d] = 0
                for ind in list(indent_chances):
                    if ind >= prev_indent:
                        del indent_chances[ind]
                del open_rows[depth + 1:]
                depth -= 1
                if depth:
                    indent_chances[indent[depth]] = True
                for idx in range(row, -1, -1):
                    if parens[idx]:
                        parens[idx] -= 1
                        break
            if start[1] not in indent_chances:
                indent_chances[start[1]] = text

        last_token_multiline = start[0] != end[0]
        if last_token_multiline:
            rel_indent[end[0] - first_row] = rel_indent[row]


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

class _Run:
    """Mutable state of one pass over one source."""

    def __init__(self, lines: list[str], max_line_length: int):
        self.lines = lines
        self.max_line_length = max_line_length
        self.findings: list[tuple[int, int, str, str]] = []
        self.rows_read = 0
        self.line_number = 0
        self.indent_char: str | None = None
        self.noqa = False
        self.multiline = False
        self.indent_level = self.previous_indent_level = 0
        self.previous_logical = ""
        self.previous_unindented_logical_line = ""
        self.blank_lines = self.blank_before = 0
        self.checked_rows: set[int] = set()
        self._prev_physical = ""

    # ---- physical ---------------------------------------------------------
    def _read_through(self, row: int) -> None:
        while self.rows_read < min(row, len(self.lines)):
            line = self.lines[self.rows_read]
            self.rows_read += 1
            if self.indent_char is None and line[:1] in WHITESPACE:
                self.indent_char = line[0]
        self.line_number = self.rows_read

    def check_physical(self, line: str) -> None:
        self.checked_rows.add(self.line_number)
        indent = INDENT_RE.match(line).group(1)
        for ch in indent:
            if ch != self.indent_char:
                # mixed indentation re-seeds the indent char (E101 side effect)
                self.indent_char = line[0]
                break
        for result in (
            trailing_whitespace(line),
            missing_final_newline(line, self.lines, self.line_number),
            line_too_long(line, self.max_line_length, self.multiline,
                          self.line_number, self.noqa),
        ):
            if result is not None:
                col, code, msg = result
                self.findings.append((self.line_number, col, code, msg))

    def on_token(self, tok: tokenize.TokenInfo) -> None:
        self._read_through(tok.end[0])
        self.noqa = _noqa(tok.line)
        if tok.type in NEWLINE_TYPES or tok.line[tok.end[1]:].lstrip() == "\\\n":
            self.check_physical(tok.line if tok.line != "" else self._prev_physical)
        elif tok.type == tokenize.STRING and "\n" in tok.string:
            if not _noqa(tok.line):
                self.multiline = True
                self.line_number = tok.start[0]
                for row in range(tok.start[0], tok.end[0]):
                    self.check_physical(self.lines[row - 1] + "\n")
                    self.line_number += 1
                self.multiline = False
        self._prev_physical = tok.line

    # ---- logical ----------------------------------------------------------
    def check_logical(self, tokens: list, blank_lines: int) -> None:
        logical_line, comments, mapping = join_tokens(tokens, self.lines)
        if not mapping:
            return
        self.blank_lines = blank_lines
        noqa = bool(comments) and _noqa("".join(comments))
        start_row, start_col = mapping[0][1]
        self.indent_level = expand_indent(self.lines[start_row - 1][:start_col])
        if self.blank_before < self.blank_lines:
            self.blank_before = self.blank_lines

        results: list[Iterator] = [
            indentation(logical_line, self.indent_level),
            continuation_indent(logical_line, tokens, self.indent_level,
                                self.indent_char, noqa),
            whitespace_after_open_bracket(logical_line),
            trailing_semicolon(logical_line),
            operator_and_comma_spacing(tokens),
            keyword_equals_spacing(logical_line, tokens),
            comment_spacing(tokens),
            blank_line_structure(self, logical_line),
        ]
        for gen in results:
            for offset, code, msg in gen or ():
                if not isinstance(offset, tuple):
                    offset = offset_to_position(mapping, offset)
                self.findings.append((offset[0], offset[1], code, msg))

        if logical_line:
            self.previous_indent_level = self.indent_level
            self.previous_logical = logical_line
            if not self.indent_level:
                self.previous_unindented_logical_line = logical_line
        self.blank_lines = 0

    def run(self) -> bool:
        """Check everything; returns False if tokenization failed part-way."""
        tokens, error = raw_tokens(self.lines)
        for group in iter_token_groups(tokens, len(self.lines), on_token=self.on_token):
            if group.final and error is None:
                self.check_physical(self.lines[-1])
            self.check_logical(group.tokens, group.blank_lines)
            if group.statement:
                self.blank_before = 0
        if error is not None:
            # physical rules still cover every line the tokenizer never reached
            for row in range(1, len(self.lines) + 1):
                if row not in self.checked_rows:
                    self.line_number = row
                    self.noqa = _noqa(self.lines[row - 1])
                    self.check_physical(self.lines[row - 1])
        return error is None


def check_lines(lines: list[str], max_line_length: int = 79) -> tuple[list[tuple[int, int, str, str]], bool]:
    """Raw findings ``(row, col0, code, message)`` for physical ``lines``."""
    run = _Run(lines, max_line_length)
    ok = run.run()
    return run.findings, ok


def check_source(src: PythonSource | str, rules: RuleConfig | None = None,
                 path: str = "<source>") -> list[Diagnostic]:
    """Style diagnostics for one source, in notebook coordinates.

    Suppressed (magic) lines are removed before checking, so they neither
    get findings nor disturb blank-line counting around them.
    """
    rules = rules or RuleConfig()
    if isinstance(src, str):
        src = PythonSource.from_script(src)
    all_lines = physical_lines(src.text)
    kept = [i for i in range(1, len(all_lines) + 1) if i not in src.suppressed_lines]
    lines = [all_lines[i - 1] for i in kept]
    if not lines:
        return []
    findings, ok = check_lines(lines, rules.max_line_length)
    out = []
    seen = set()
    for row, col, code, msg in findings:
        if code not in STYLE_CODES or not rules.enabled(code):
            continue
        cell, line = src.origin(kept[row - 1])
        key = (code, row, col)
        if code == "W292" and key in seen:
            continue
        seen.add(key)
        out.append(Diagnostic(code, msg, path, line, col + 1, "style", cell))
    if not ok and rules.enabled("A002"):
        cell, line = src.origin(kept[-1])
        out.append(Diagnostic("A002", "tokenization failed; only physical style rules "
                              "were checked past this point", path, line, 1, "analysis", cell))
    out.sort(key=Diagnostic.sort_key)
    return out
