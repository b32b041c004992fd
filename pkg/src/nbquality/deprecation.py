"""Deprecated-API detection against declarative rulesets.

Matching is syntactic: import statements and attribute chains are expanded
through the import bindings visible at their position, and the resulting
dotted path is compared with each rule target. Nothing is imported.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .diagnostics import Diagnostic
from .frontend import ParseError, parse_ast
from .notebook import CellChain, PythonSource

RULESET_FORMAT = 1
BUNDLED_RULESET = "sklearn_deprecations.yaml"
_DOTTED = re.compile(r"^[A-Za-z_]\w*(\.[A-Za-z_]\w*)*$")
_RULE_FIELDS = {"target", "kind", "deprecated_since", "removed_in", "replacement", "note"}
_TOP_FIELDS = {"format", "library", "package", "source", "rules"}

Key = tuple  # (cell or -1, line, column0)


class MalformedRuleset(ValueError):
    def __init__(self, message: str, path: str = "", line: int | None = None, field_name: str = ""):
        where = path + (f":{line}" if line else "")
        detail = f" [{field_name}]" if field_name else ""
        super().__init__(f"{where}: {message}{detail}" if where else message + detail)
        self.path = path
        self.line = line
        self.field = field_name


class DuplicateTarget(MalformedRuleset):
    pass


@dataclass(frozen=True)
class DeprecationRule:
    target: str
    kind: str  # module | symbol
    deprecated_since: str | None = None
    removed_in: str | None = None
    replacement: str | None = None
    note: str = ""

    def matches_module(self, path: str) -> bool:
        return self.kind == "module" and (path == self.target or path.startswith(self.target + "."))

    def matches_symbol(self, path: str) -> bool:
        return self.kind == "symbol" and path == self.target


@dataclass(frozen=True)
class DeprecationRuleset:
    library: str
    source: str
    rules: tuple[DeprecationRule, ...]
    package: str = ""
    name: str = ""

    def module_rule(self, path: str) -> DeprecationRule | None:
        for rule in self.rules:
            if rule.matches_module(path):
                return rule
        return None

    def symbol_rule(self, path: str) -> DeprecationRule | None:
        for rule in self.rules:
            if rule.matches_symbol(path):
                return rule
        return None

    @property
    def root_packages(self) -> frozenset[str]:
        roots = {r.target.split(".")[0] for r in self.rules}
        if self.package:
            roots.add(self.package)
        return frozenset(roots)

    def merged(self, other: DeprecationRuleset) -> DeprecationRuleset:
        seen = {r.target for r in self.rules}
        for r in other.rules:
            if r.target in seen:
                raise DuplicateTarget(f"target {r.target!r} defined by two rulesets",
                                      other.name, None, "target")
        return DeprecationRuleset(f"{self.library}+{other.library}", f"{self.source}; {other.source}",
                                  self.rules + other.rules, "", f"{self.name}+{other.name}")


# --------------------------------------------------------------------------
# ruleset files
# --------------------------------------------------------------------------

def _version(value, path: str, line: int, name: str) -> str | None:
    if value is None:
        return None
    if not isinstance(value, str):
        # 0.20 read as a float would silently become "0.2"
        raise MalformedRuleset("version must be a quoted string", path, line, name)
    return value


def _parse_ruleset(text: str, path: str) -> DeprecationRuleset:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise MalformedRuleset(f"not valid YAML: {getattr(exc, 'problem', exc)}", path,
                               mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise MalformedRuleset("top level must be a mapping", path, 1)

    def line_of(key: str, node=root) -> int:
        if isinstance(node, yaml.MappingNode):
            for k, _ in node.value:
                if k.value == key:
                    return k.start_mark.line + 1
        return node.start_mark.line + 1 if node is not None else 1

    unknown = set(data) - _TOP_FIELDS
    if unknown:
        name = sorted(unknown)[0]
        raise MalformedRuleset("unknown field", path, line_of(name), name)
    if data.get("format") != RULESET_FORMAT:
        raise MalformedRuleset(f"unsupported format (expected {RULESET_FORMAT})", path,
                               line_of("format"), "format")
    library = data.get("library")
    if not isinstance(library, str) or not library:
        raise MalformedRuleset("library must be a non-empty string", path, line_of("library"), "library")
    rules_data = data.get("rules")
    if rules_data is None:
        rules_data = []
    if not isinstance(rules_data, list):
        raise MalformedRuleset("rules must be a list", path, line_of("rules"), "rules")
    rule_nodes = []
    for k, v in root.value:
        if k.value == "rules" and isinstance(v, yaml.SequenceNode):
            rule_nodes = v.value

    rules = []
    seen: dict[str, int] = {}
    for i, item in enumerate(rules_data):
        node = rule_nodes[i] if i < len(rule_nodes) else None
        line = node.start_mark.line + 1 if node is not None else None
        if not isinstance(item, dict):
            raise MalformedRuleset("rule must be a mapping", path, line)
        extra = set(item) - _RULE_FIELDS
        if extra:
            name = sorted(extra)[0]
            raise MalformedRuleset("unknown rule field", path, line_of(name, node), name)
        target = item.get("target")
        if not isinstance(target, str) or not _DOTTED.match(target):
            raise MalformedRuleset("target must be a dotted identifier path", path,
                                   line_of("target", node), "target")
        kind = item.get("kind")
        if kind not in ("module", "symbol"):
            raise MalformedRuleset("kind must be 'module' or 'symbol'", path, line_of("kind", node), "kind")
        replacement = item.get("replacement")
        if replacement is not None and (not isinstance(replacement, str) or not _DOTTED.match(replacement)):
            raise MalformedRuleset("replacement must be a dotted identifier path", path,
                                   line_of("replacement", node), "replacement")
        if target in seen:
            raise DuplicateTarget(f"duplicate target {target!r} (first on line {seen[target]})",
                                  path, line_of("target", node), "target")
        seen[target] = line or 0
        rules.append(DeprecationRule(
            target=target, kind=kind,
            deprecated_since=_version(item.get("deprecated_since"), path,
                                      line_of("deprecated_since", node), "deprecated_since"),
            removed_in=_version(item.get("removed_in"), path, line_of("removed_in", node), "removed_in"),
            replacement=replacement,
            note=str(item.get("note") or ""),
        ))
    return DeprecationRuleset(library, str(data.get("source") or ""), tuple(rules),
                              str(data.get("package") or ""), Path(path).name)


def load_ruleset(path: str | Path) -> DeprecationRuleset:
    """Parse and validate a ruleset file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedRuleset(f"cannot read ruleset: {exc.strerror}", str(path)) from None
    return _parse_ruleset(text, str(path))


def bundled_ruleset() -> DeprecationRuleset:
    text = resources.files("nbquality.data").joinpath(BUNDLED_RULESET).read_text(encoding="utf-8")
    return _parse_ruleset(text, BUNDLED_RULESET)


def load_rulesets(paths: Sequence[str | Path]) -> DeprecationRuleset:
    """Bundled ruleset when ``paths`` is empty, otherwise the union of the given files.

    A directory contributes every ``*.yaml``/``*.yml`` file in it.
    """
    if not paths:
        return bundled_ruleset()
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(q for q in p.iterdir() if q.suffix in (".yaml", ".yml")))
        else:
            files.append(p)
    if not files:
        raise MalformedRuleset("no ruleset files found", ", ".join(map(str, paths)))
    merged = load_ruleset(files[0])
    for f in files[1:]:
        merged = merged.merged(load_ruleset(f))
    return merged


# --------------------------------------------------------------------------
# import bindings
# --------------------------------------------------------------------------

@dataclass
class ImportBindings:
    """Local name -> dotted path, with history so lookups honour chain order.

    ``history[name]`` holds ``(key, path)`` pairs in chain order; a None path
    records a rebinding by something other than an import.
    """

    history: dict[str, list[tuple[Key, str | None]]] = field(default_factory=dict)
    wildcards: list[tuple[Key, str]] = field(default_factory=list)

    def bound_before(self, name: str, key: Key) -> bool:
        history = self.history.get(name)
        return bool(history) and history[0][0] < key

    def bind(self, name: str, key: Key, path: str | None) -> None:
        self.history.setdefault(name, []).append((key, path))

    def lookup(self, name: str, key: Key | None = None) -> str | None:
        """Binding of ``name`` just before position ``key`` (latest if None)."""
        current = None
        for k, path in self.history.get(name, ()):
            if key is not None and k >= key:
                break
            current = path
        return current

    def wildcard_for(self, key: Key) -> list[str]:
        """Modules star-imported before ``key``, latest first."""
        return [m for k, m in reversed(self.wildcards) if k < key]

    def as_dict(self) -> dict[str, str]:
        out = {}
        for name in self.history:
            path = self.lookup(name)
            if path is not None:
                out[name] = path
        return out

    def __getitem__(self, name: str) -> str:
        path = self.lookup(name)
        if path is None:
            raise KeyError(name)
        return path

    def __contains__(self, name: object) -> bool:
        return isinstance(name, str) and self.lookup(name) is not None


def _cell_of(src: PythonSource | None, fallback: int) -> int:
    if src is not None and src.line_map and src.line_map[0][0] is not None:
        return src.line_map[0][0]
    return fallback


def _key(cell: int, node) -> Key:
    return (cell, node.lineno, node.col_offset)


def _effect_position(stmt: ast.stmt, name: ast.Name) -> tuple[int, int]:
    """Where a notebook-level Store takes effect: after the value it binds."""
    value = None
    if isinstance(stmt, (ast.Assign, ast.AugAssign, ast.AnnAssign)):
        value = stmt.value
    elif isinstance(stmt, (ast.For, ast.AsyncFor)):
        value = stmt.iter
    elif isinstance(stmt, (ast.With, ast.AsyncWith)):
        value = stmt.items[-1].context_expr
    if value is not None and (value.end_lineno, value.end_col_offset) > (name.lineno, name.col_offset):
        return value.end_lineno, value.end_col_offset
    return name.lineno, name.col_offset


def _module_stores(tree: ast.Module) -> list[tuple[ast.Name, tuple[int, int]]]:
    """Name Stores at notebook level (not inside def/class/lambda/comprehension bodies)."""
    out = []
    stack: list[tuple[ast.AST, ast.stmt | None]] = [(s, s) for s in tree.body]
    while stack:
        node, stmt = stack.pop()
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef, ast.Lambda,
                             ast.ListComp, ast.SetComp, ast.DictComp, ast.GeneratorExp)):
            continue
        if isinstance(node, ast.Name) and isinstance(node.ctx, ast.Store):
            out.append((node, _effect_position(stmt, node)))
        for child in ast.iter_child_nodes(node):
            stack.append((child, child if isinstance(child, ast.stmt) else stmt))
    return out


def _resolve_into(bindings: ImportBindings, tree: ast.Module, cell: int) -> None:
    events: list[tuple[Key, int, str, str | None]] = []
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for alias in node.names:
                key = _key(cell, alias)
                if alias.asname:
                    events.append((key, 0, alias.asname, alias.name))
                else:
                    root = alias.name.split(".")[0]
                    events.append((key, 0, root, root))
        elif isinstance(node, ast.ImportFrom):
            if node.level or not node.module:
                continue  # relative imports cannot be resolved statically
            for alias in node.names:
                key = _key(cell, alias)
                if alias.name == "*":
                    bindings.wildcards.append((key, node.module))
                else:
                    events.append((key, 0, alias.asname or alias.name, f"{node.module}.{alias.name}"))
    for name, (line, col) in _module_stores(tree):
        events.append(((cell, line, col), 1, name.id, None))
    for key, _, name, path in sorted(events, key=lambda e: (e[0], e[1])):
        bindings.bind(name, key, path)
    bindings.wildcards.sort()


def resolve_imports(asts: Sequence[ast.Module | None],
                    sources: Sequence[PythonSource] | None = None) -> ImportBindings:
    """Import bindings over parsed cells in chain order (None entries are skipped)."""
    bindings = ImportBindings()
    for i, tree in enumerate(asts):
        if tree is None:
            continue
        src = sources[i] if sources is not None else None
        _resolve_into(bindings, tree, _cell_of(src, i))
    return bindings


# --------------------------------------------------------------------------
# matching
# --------------------------------------------------------------------------

def _attribute_chain(node: ast.Attribute) -> tuple[ast.Name, list[str]] | None:
    attrs = []
    cur: ast.expr = node
    while isinstance(cur, ast.Attribute):
        attrs.append(cur.attr)
        cur = cur.value
    if not isinstance(cur, ast.Name):
        return None
    return cur, list(reversed(attrs))


def _function_locals(fn) -> set[str]:
    args = fn.args
    names = {a.arg for a in args.posonlyargs + args.args + args.kwonlyargs}
    if args.vararg:
        names.add(args.vararg.arg)
    if args.kwarg:
        names.add(args.kwarg.arg)
    body = fn.body if isinstance(fn.body, list) else [fn.body]
    glob: set[str] = set()
    stack = list(body)
    while stack:
        node = stack.pop()
        if isinstance(node, ast.Global):
            glob.update(node.names)
        if isinstance(node, ast.Name) and isinstance(node.ctx, ast.Store):
            names.add(node.id)
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef, ast.Lambda)):
            continue
        stack.extend(ast.iter_child_nodes(node))
    return names - glob


class _Matcher(ast.NodeVisitor):
    def __init__(self, ruleset: DeprecationRuleset, bindings: ImportBindings, path: str,
                 src: PythonSource | None, cell: int):
        self.ruleset = ruleset
        self.bindings = bindings
        self.path = path
        self.src = src
        self.cell = cell
        self.shadowed: list[set[str]] = []
        self.found: list[Diagnostic] = []

    def _emit(self, node, rule: DeprecationRule, used: str, witness: dict) -> None:
        line = node.lineno
        cell = self.cell
        if self.src is not None and self.src.line_map:
            cell, line = self.src.origin(line)
        message = f"'{used}' is deprecated"
        if rule.deprecated_since:
            message += f" since {self.ruleset.library} {rule.deprecated_since}"
        if rule.removed_in:
            message += f" (removed in {rule.removed_in})"
        if rule.replacement:
            message += f"; use {rule.replacement}"
        extra = {"target": rule.target, "kind": rule.kind, "replacement": rule.replacement,
                 "note": rule.note, "witness": witness}
        self.found.append(Diagnostic("D001", message, self.path, line, node.col_offset + 1,
                                     "deprecated", cell, extra))

    def _is_shadowed(self, name: str) -> bool:
        return any(name in s for s in self.shadowed)

    # imports
    def visit_Import(self, node: ast.Import) -> None:
        for alias in node.names:
            rule = self.ruleset.module_rule(alias.name)
            if rule:
                self._emit(alias, rule, alias.name, {"import": alias.name, "expanded": alias.name})

    def visit_ImportFrom(self, node: ast.ImportFrom) -> None:
        if node.level or not node.module:
            return
        rule = self.ruleset.module_rule(node.module)
        if rule:
            self._emit(node, rule, node.module, {"import": node.module, "expanded": node.module})
            return
        for alias in node.names:
            if alias.name == "*":
                continue
            full = f"{node.module}.{alias.name}"
            rule = self.ruleset.module_rule(full) or self.ruleset.symbol_rule(full)
            if rule:
                self._emit(alias, rule, full, {"import": full, "expanded": full})

    # uses
    def visit_Attribute(self, node: ast.Attribute) -> None:
        chain = _attribute_chain(node)
        if chain is not None:
            root, attrs = chain
            if not self._is_shadowed(root.id):
                key = _key(self.cell, root)
                candidates: list[tuple[str, dict]] = []
                bound = self.bindings.lookup(root.id, key)
                if bound is not None:
                    candidates.append((bound, {"alias": root.id, "bound_to": bound}))
                elif not self.bindings.bound_before(root.id, key):
                    for module in self.bindings.wildcard_for(key):
                        candidates.append((f"{module}.{root.id}",
                                           {"alias": root.id, "bound_to": f"{module}.{root.id}",
                                            "wildcard": module}))
                for base, witness in candidates:
                    expanded = ".".join([base] + attrs)
                    rule = self.ruleset.symbol_rule(expanded)
                    if rule:
                        self._emit(node, rule, expanded, dict(witness, attrs=attrs, expanded=expanded))
                        break
        self.generic_visit(node)

    def visit_Name(self, node: ast.Name) -> None:
        # a bare name can only reach a deprecated symbol through a star import
        if not isinstance(node.ctx, ast.Load) or self._is_shadowed(node.id):
            return
        key = _key(self.cell, node)
        if self.bindings.bound_before(node.id, key):
            return  # explicitly bound (import or assignment) before this use
        for module in self.bindings.wildcard_for(key):
            full = f"{module}.{node.id}"
            rule = self.ruleset.symbol_rule(full)
            if rule:
                self._emit(node, rule, full, {"alias": node.id, "bound_to": full, "wildcard": module,
                                              "attrs": [], "expanded": full})
                return

    def _scoped(self, node, visit_body) -> None:
        self.shadowed.append(_function_locals(node))
        visit_body()
        self.shadowed.pop()

    def visit_FunctionDef(self, node) -> None:
        for d in node.decorator_list:
            self.visit(d)
        for d in node.args.defaults + [d for d in node.args.kw_defaults if d is not None]:
            self.visit(d)
        self._scoped(node, lambda: [self.visit(s) for s in node.body])

    visit_AsyncFunctionDef = visit_FunctionDef

    def visit_Lambda(self, node: ast.Lambda) -> None:
        for d in node.args.defaults + [d for d in node.args.kw_defaults if d is not None]:
            self.visit(d)
        self._scoped(node, lambda: self.visit(node.body))


def check_deprecations(chain: CellChain | Sequence[PythonSource],
                       asts: Sequence[ast.Module | None] | None,
                       ruleset: DeprecationRuleset, path: str | None = None) -> list[Diagnostic]:
    """D001 findings, one per matching occurrence, in chain order."""
    if isinstance(chain, CellChain):
        sources = [e.source for e in chain.entries]
        path = path or chain.notebook_path
    else:
        sources = list(chain)
    path = path or "<chain>"
    if asts is None:
        asts = []
        for src in sources:
            try:
                asts.append(parse_ast(src))
            except ParseError:
                asts.append(None)
    if not ruleset.rules:
        return []
    bindings = resolve_imports(asts, sources)
    found: list[Diagnostic] = []
    for i, (src, tree) in enumerate(zip(sources, asts)):
        if tree is None:
            continue
        matcher = _Matcher(ruleset, bindings, path, src, _cell_of(src, i))
        matcher.visit(tree)
        found.extend(matcher.found)
    found.sort(key=Diagnostic.sort_key)
    return found


def imports_library(asts: Sequence[ast.Module | None], packages: frozenset[str] | set[str]) -> bool:
    """Whether any parsed cell imports one of ``packages`` (or a submodule)."""
    for tree in asts:
        if tree is None:
            continue
        for node in ast.walk(tree):
            if isinstance(node, ast.Import):
                mods = [a.name for a in node.names]
            elif isinstance(node, ast.ImportFrom) and not node.level and node.module:
                mods = [node.module]
            else:
                continue
            if any(m.split(".")[0] in packages for m in mods):
                return True
    return False


# --------------------------------------------------------------------------
# summary
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DeprecationSummary:
    rows: tuple[tuple[str, int], ...]  # (target, notebooks), most frequent first
    n_affected: int
    n_importing: int | None = None

    @property
    def affected_fraction(self) -> float | None:
        if not self.n_importing:
            return None
        return self.n_affected / self.n_importing

    def to_dict(self) -> dict:
        return {"rows": [list(r) for r in self.rows], "n_affected": self.n_affected,
                "n_importing": self.n_importing}

    @classmethod
    def from_dict(cls, d: Mapping) -> DeprecationSummary:
        return cls(tuple((t, n) for t, n in d["rows"]), d["n_affected"], d.get("n_importing"))


def deprecation_summary(findings: Mapping[str, Sequence[Diagnostic]],
                        ruleset: DeprecationRuleset | None = None,
                        importing: int | None = None) -> DeprecationSummary:
    """Per target, the number of distinct notebooks with at least one match."""
    counts: dict[str, set[str]] = {}
    affected = set()
    known = {r.target for r in ruleset.rules} if ruleset is not None else None
    for nb, diags in findings.items():
        for d in diags:
            if d.code != "D001":
                continue
            target = d.extra.get("target")
            if target is None or (known is not None and target not in known):
                continue
            counts.setdefault(target, set()).add(nb)
            affected.add(nb)
    rows = sorted(((t, len(nbs)) for t, nbs in counts.items()), key=lambda r: (-r[1], r[0]))
    return DeprecationSummary(tuple(rows), len(affected), importing)
