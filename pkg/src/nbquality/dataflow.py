"""Variable access table and unused-variable detection over a cell chain.

Each parsed cell is walked in evaluation order (right-hand side before the
targets it binds), appending one entry per Name access. Cells share the
notebook scope, so a Load in a later cell can use a Store from an earlier
one. A binding counts as used when some non-augmented Load resolving to it
comes after its first Store.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .config import RuleConfig, UnusedPolicy
from .diagnostics import Diagnostic
from .frontend import ParseError, parse_ast
from .notebook import CellChain, PythonSource

SCOPE_KINDS = ("notebook", "function", "class", "comprehension", "lambda")

Location = tuple  # (cell_index | None, line, column0)


@dataclass(frozen=True)
class AccessEntry:
    """One Name access.

    ``scope_id`` is the scope the access appears in; ``binding_scope`` is the
    scope whose variable it refers to after global/nonlocal declarations
    and lexical lookup (None for an unresolved Load, e.g. a builtin).
    """

    name: str
    ctx: str  # Store | Load | Del
    location: Location
    scope_id: int
    ordinal: int
    origin: str = "name"  # name | import | param | def | class | handler | annotation
    augmented: bool = False
    binding_scope: int | None = None


@dataclass(frozen=True)
class Scope:
    scope_id: int
    kind: str
    parent: int | None
    name: str = ""
    globals: frozenset[str] = frozenset()
    nonlocals: frozenset[str] = frozenset()


@dataclass(frozen=True)
class VariableAccessTable:
    entries: tuple[AccessEntry, ...]
    scopes: tuple[Scope, ...]
    # (ordinal, module) of each ``from m import *``
    wildcards: tuple[tuple[int, str], ...] = ()
    # names listed in a notebook-level __all__
    exported: frozenset[str] = frozenset()

    def scope(self, scope_id: int) -> Scope:
        return self.scopes[scope_id]

    def stores(self, name: str, scope_id: int) -> list[AccessEntry]:
        return [e for e in self.entries
                if e.ctx == "Store" and e.name == name and e.binding_scope == scope_id]


@dataclass(frozen=True)
class UnusedVariable:
    name: str
    defining_location: Location
    n_stores: int
    scope_id: int
    origin: str = "name"


@dataclass(frozen=True)
class Witness:
    """Why a binding is not reported: a Load entry or a policy exclusion."""

    load: AccessEntry | None = None
    exclusion: str | None = None


# --------------------------------------------------------------------------
# table construction
# --------------------------------------------------------------------------

def _declarations(body: Sequence[ast.stmt]) -> tuple[set[str], set[str]]:
    """global/nonlocal names declared directly in a scope body."""
    glob: set[str] = set()
    nonloc: set[str] = set()
    stack = list(body)
    while stack:
        node = stack.pop()
        if isinstance(node, ast.Global):
            glob.update(node.names)
        elif isinstance(node, ast.Nonlocal):
            nonloc.update(node.names)
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef, ast.Lambda,
                             ast.ListComp, ast.SetComp, ast.DictComp, ast.GeneratorExp)):
            continue
        stack.extend(ast.iter_child_nodes(node))
    return glob, nonloc


@dataclass
class _RawEntry:
    name: str
    ctx: str
    location: Location
    scope_id: int
    origin: str
    augmented: bool


@dataclass
class _MutableScope:
    kind: str
    parent: int | None
    name: str = ""
    globals: set[str] = field(default_factory=set)
    nonlocals: set[str] = field(default_factory=set)


class _Builder(ast.NodeVisitor):
    def __init__(self) -> None:
        self.raw: list[_RawEntry] = []
        self.scopes: list[_MutableScope] = [_MutableScope("notebook", None)]
        self.current = 0
        self.cell: int | None = None
        self.src: PythonSource | None = None
        self.wildcards: list[tuple[int, str]] = []
        self.exported: set[str] = set()

    # ---- helpers ----------------------------------------------------------
    def _loc(self, node) -> Location:
        line = node.lineno
        if self.src is not None and self.src.line_map:
            cell, line = self.src.origin(line)
            return (cell, line, node.col_offset)
        return (self.cell, line, node.col_offset)

    def _add(self, name: str, ctx: str, node, origin: str = "name",
             augmented: bool = False, scope: int | None = None) -> None:
        self.raw.append(_RawEntry(name, ctx, self._loc(node), self.current if scope is None else scope,
                                  origin, augmented))

    def _push(self, kind: str, name: str = "", body: Sequence[ast.stmt] = ()) -> int:
        glob, nonloc = _declarations(body)
        self.scopes.append(_MutableScope(kind, self.current, name, glob, nonloc))
        previous, self.current = self.current, len(self.scopes) - 1
        return previous

    def _visit_all(self, nodes) -> None:
        for n in nodes:
            if n is not None:
                self.visit(n)

    # ---- names and bindings -----------------------------------------------
    def visit_Name(self, node: ast.Name) -> None:
        self._add(node.id, type(node.ctx).__name__, node)

    def visit_Assign(self, node: ast.Assign) -> None:
        self.visit(node.value)
        self._visit_all(node.targets)
        if self.current == 0:
            self._note_dunder_all(node.targets, node.value)

    def _note_dunder_all(self, targets, value) -> None:
        if any(isinstance(t, ast.Name) and t.id == "__all__" for t in targets) and \
                isinstance(value, (ast.List, ast.Tuple)):
            for elt in value.elts:
                if isinstance(elt, ast.Constant) and isinstance(elt.value, str):
                    self.exported.add(elt.value)

    def visit_AugAssign(self, node: ast.AugAssign) -> None:
        if isinstance(node.target, ast.Name):
            self._add(node.target.id, "Load", node.target, augmented=True)
            self.visit(node.value)
            self._add(node.target.id, "Store", node.target)
        else:
            # x.attr += v / x[i] += v: only the inner expressions are Names
            self.visit(node.target)
            self.visit(node.value)

    def visit_AnnAssign(self, node: ast.AnnAssign) -> None:
        self.visit(node.annotation)
        if node.value is not None:
            self.visit(node.value)
        if isinstance(node.target, ast.Name):
            self._add(node.target.id, "Store", node.target,
                      origin="name" if node.value is not None else "annotation")
        else:
            self.visit(node.target)

    def visit_NamedExpr(self, node: ast.NamedExpr) -> None:
        self.visit(node.value)
        scope = self.current
        while self.scopes[scope].kind == "comprehension":
            scope = self.scopes[scope].parent
        self._add(node.target.id, "Store", node.target, scope=scope)

    def visit_For(self, node) -> None:
        self.visit(node.iter)
        self.visit(node.target)
        self._visit_all(node.body)
        self._visit_all(node.orelse)

    visit_AsyncFor = visit_For

    def visit_With(self, node) -> None:
        for item in node.items:
            self.visit(item.context_expr)
            if item.optional_vars is not None:
                self.visit(item.optional_vars)
        self._visit_all(node.body)

    visit_AsyncWith = visit_With

    def visit_ExceptHandler(self, node: ast.ExceptHandler) -> None:
        if node.type is not None:
            self.visit(node.type)
        if node.name:
            self._add(node.name, "Store", node, origin="handler")
        self._visit_all(node.body)

    def visit_Import(self, node: ast.Import) -> None:
        for alias in node.names:
            bound = alias.asname or alias.name.split(".")[0]
            self._add(bound, "Store", node, origin="import")

    def visit_ImportFrom(self, node: ast.ImportFrom) -> None:
        module = "." * (node.level or 0) + (node.module or "")
        for alias in node.names:
            if alias.name == "*":
                self.wildcards.append((len(self.raw), module))
                continue
            self._add(alias.asname or alias.name, "Store", node, origin="import")

    def visit_Dict(self, node: ast.Dict) -> None:
        for key, value in zip(node.keys, node.values):
            if key is not None:
                self.visit(key)
            self.visit(value)

    def visit_IfExp(self, node: ast.IfExp) -> None:
        self.visit(node.test)
        self.visit(node.body)
        self.visit(node.orelse)

    # ---- scopes -----------------------------------------------------------
    def _arguments_outer(self, args: ast.arguments, with_annotations: bool) -> None:
        self._visit_all(args.defaults)
        self._visit_all(args.kw_defaults)
        if with_annotations:
            for a in self._params(args):
                if a.annotation is not None:
                    self.visit(a.annotation)

    @staticmethod
    def _params(args: ast.arguments) -> list[ast.arg]:
        params = list(args.posonlyargs) + list(args.args)
        if args.vararg:
            params.append(args.vararg)
        params.extend(args.kwonlyargs)
        if args.kwarg:
            params.append(args.kwarg)
        return params

    def visit_FunctionDef(self, node) -> None:
        self._visit_all(node.decorator_list)
        self._arguments_outer(node.args, with_annotations=True)
        if node.returns is not None:
            self.visit(node.returns)
        self._add(node.name, "Store", node, origin="def")
        previous = self._push("function", node.name, node.body)
        for a in self._params(node.args):
            self._add(a.arg, "Store", a, origin="param")
        self._visit_all(node.body)
        self.current = previous

    visit_AsyncFunctionDef = visit_FunctionDef

    def visit_Lambda(self, node: ast.Lambda) -> None:
        self._arguments_outer(node.args, with_annotations=False)
        previous = self._push("lambda", "<lambda>")
        for a in self._params(node.args):
            self._add(a.arg, "Store", a, origin="param")
        self.visit(node.body)
        self.current = previous

    def visit_ClassDef(self, node: ast.ClassDef) -> None:
        self._visit_all(node.decorator_list)
        self._visit_all(node.bases)
        self._visit_all(node.keywords)
        self._add(node.name, "Store", node, origin="class")
        previous = self._push("class", node.name, node.body)
        self._visit_all(node.body)
        self.current = previous

    def _comprehension(self, node, elts: Sequence[ast.expr]) -> None:
        generators = node.generators
        # the first iterable is evaluated in the enclosing scope
        self.visit(generators[0].iter)
        previous = self._push("comprehension", type(node).__name__)
        for i, gen in enumerate(generators):
            if i:
                self.visit(gen.iter)
            self.visit(gen.target)
            self._visit_all(gen.ifs)
        self._visit_all(elts)
        self.current = previous

    def visit_ListComp(self, node) -> None:
        self._comprehension(node, [node.elt])

    visit_SetComp = visit_GeneratorExp = visit_ListComp

    def visit_DictComp(self, node: ast.DictComp) -> None:
        self._comprehension(node, [node.key, node.value])

    # ---- finalization -----------------------------------------------------
    def _is_local(self, name: str, scope_id: int, local_names: dict[int, set[str]]) -> bool:
        scope = self.scopes[scope_id]
        if name in scope.globals or name in scope.nonlocals:
            return False
        return scope_id == 0 or name in local_names.get(scope_id, ())

    def _enclosing_binding(self, name: str, scope_id: int, local_names) -> int | None:
        """Nearest enclosing non-class scope (excluding ``scope_id``) binding ``name``."""
        parent = self.scopes[scope_id].parent
        while parent is not None:
            scope = self.scopes[parent]
            if scope.kind != "class":
                if name in scope.globals:
                    return 0
                if parent == 0 or (name in local_names.get(parent, ()) and name not in scope.nonlocals):
                    return parent
            parent = scope.parent
        return None

    def _resolve(self, name: str, scope_id: int, local_names) -> int | None:
        scope = self.scopes[scope_id]
        if name in scope.globals:
            return 0
        if name in scope.nonlocals:
            return self._enclosing_binding(name, scope_id, local_names)
        if self._is_local(name, scope_id, local_names):
            return scope_id
        return self._enclosing_binding(name, scope_id, local_names)

    def finish(self) -> VariableAccessTable:
        local_names: dict[int, set[str]] = {}
        for r in self.raw:
            if r.ctx in ("Store", "Del"):
                local_names.setdefault(r.scope_id, set()).add(r.name)
        targets = [self._resolve(r.name, r.scope_id, local_names) for r in self.raw]
        # module names include those stored from functions via ``global``
        module_names = {r.name for r, t in zip(self.raw, targets) if t == 0 and r.ctx in ("Store", "Del")}
        entries = []
        for i, (r, target) in enumerate(zip(self.raw, targets)):
            if r.ctx == "Load" and target == 0 and r.name not in module_names:
                target = None  # builtin or undefined
            entries.append(AccessEntry(r.name, r.ctx, r.location, r.scope_id, i, r.origin,
                                       r.augmented, target))
        scopes = tuple(Scope(i, s.kind, s.parent, s.name, frozenset(s.globals), frozenset(s.nonlocals))
                       for i, s in enumerate(self.scopes))
        return VariableAccessTable(tuple(entries), scopes, tuple(self.wildcards),
                                   frozenset(self.exported))


def build_access_table(chain: CellChain | Sequence[PythonSource],
                       asts: Sequence[ast.Module | None] | None = None) -> VariableAccessTable:
    """Access table for a cell chain; ``asts[i]`` parses entry ``i`` (None if it did not parse).

    When ``asts`` is omitted each entry is parsed here and unparseable
    entries are skipped.
    """
    sources = [e.source for e in chain.entries] if isinstance(chain, CellChain) else list(chain)
    if asts is None:
        asts = []
        for src in sources:
            try:
                asts.append(parse_ast(src))
            except ParseError:
                asts.append(None)
    builder = _Builder()
    for src, tree in zip(sources, asts):
        if tree is None:
            continue
        builder.src = src
        builder.cell = src.line_map[0][0] if src.line_map else None
        for stmt in tree.body:
            builder.visit(stmt)
    return builder.finish()


def table_from_cells(cells: Iterable[str]) -> VariableAccessTable:
    """Convenience: table for raw cell texts, cells numbered from 0."""
    sources = []
    for i, text in enumerate(cells):
        n = max(1, len(text.split("\n")))
        sources.append(PythonSource(text, tuple((i, k) for k in range(1, n + 1))))
    return build_access_table(sources)


# --------------------------------------------------------------------------
# queries
# --------------------------------------------------------------------------

def _bindings(table: VariableAccessTable) -> dict[tuple[str, int], list[AccessEntry]]:
    out: dict[tuple[str, int], list[AccessEntry]] = {}
    for e in table.entries:
        if e.ctx == "Store" and e.binding_scope is not None:
            out.setdefault((e.name, e.binding_scope), []).append(e)
    return out


def _loads(table: VariableAccessTable) -> dict[tuple[str, int], list[AccessEntry]]:
    out: dict[tuple[str, int], list[AccessEntry]] = {}
    for e in table.entries:
        if e.ctx == "Load" and not e.augmented and e.binding_scope is not None:
            out.setdefault((e.name, e.binding_scope), []).append(e)
    return out


def _exclusion(table: VariableAccessTable, name: str, scope_id: int, first: AccessEntry,
               policy: UnusedPolicy) -> str | None:
    if policy.ignore_underscore and name.startswith("_"):
        return "underscore"
    if policy.ignore_parameters and first.origin == "param":
        return "parameter"
    if policy.ignore_imports and first.origin == "import":
        return "import"
    if policy.ignore_dunder_all and scope_id == 0 and name in table.exported:
        return "__all__"
    return None


def _first_use(loads: list[AccessEntry], after: int) -> AccessEntry | None:
    for e in loads:
        if e.ordinal > after:
            return e
    return None


def _stored_never_loaded(table: VariableAccessTable):
    loads = _loads(table)
    for (name, scope_id), stores in _bindings(table).items():
        if table.scope(scope_id).kind == "class":
            continue  # class attributes are not variables
        first = stores[0]
        yield name, scope_id, stores, _first_use(loads.get((name, scope_id), []), first.ordinal)


def find_unused(table: VariableAccessTable, policy: UnusedPolicy | None = None) -> list[UnusedVariable]:
    """Bindings with no Load after their first Store, minus policy exclusions."""
    policy = policy or UnusedPolicy()
    out = []
    for name, scope_id, stores, use in _stored_never_loaded(table):
        if use is not None or _exclusion(table, name, scope_id, stores[0], policy):
            continue
        out.append(UnusedVariable(name, stores[0].location, len(stores), scope_id, stores[0].origin))
    out.sort(key=lambda u: (_loc_key(u.defining_location), u.name))
    return out


def find_unused_imports(table: VariableAccessTable) -> list[UnusedVariable]:
    """Import bindings never loaded afterwards (reported separately from variables)."""
    out = []
    for name, scope_id, stores, use in _stored_never_loaded(table):
        if use is None and stores[0].origin == "import":
            out.append(UnusedVariable(name, stores[0].location, len(stores), scope_id, "import"))
    out.sort(key=lambda u: (_loc_key(u.defining_location), u.name))
    return out


def find_dead_stores(table: VariableAccessTable) -> list[AccessEntry]:
    """Stores overwritten by a later Store of the same binding with no read in between.

    Flow-insensitive: stores on alternative branches look like overwrites.
    Augmented reads count here, since ``x += 1`` does read the old value.
    """
    reads: dict[tuple[str, int], list[int]] = {}
    for e in table.entries:
        if e.ctx == "Load" and e.binding_scope is not None:
            reads.setdefault((e.name, e.binding_scope), []).append(e.ordinal)
    out = []
    for key, stores in _bindings(table).items():
        if table.scope(key[1]).kind == "class":
            continue
        ords = reads.get(key, [])
        for a, b in zip(stores, stores[1:]):
            if a.origin in ("param", "annotation"):
                continue
            if not any(a.ordinal < r < b.ordinal for r in ords):
                out.append(a)
    out.sort(key=lambda e: e.ordinal)
    return out


def witness(table: VariableAccessTable, name: str, scope_id: int,
            policy: UnusedPolicy | None = None) -> Witness | None:
    """Evidence that (name, scope) is not reported; None if it is (or is not a binding)."""
    policy = policy or UnusedPolicy()
    stores = _bindings(table).get((name, scope_id))
    if not stores:
        return None
    if table.scope(scope_id).kind == "class":
        return Witness(exclusion="class attribute")
    use = _first_use(_loads(table).get((name, scope_id), []), stores[0].ordinal)
    if use is not None:
        return Witness(load=use)
    reason = _exclusion(table, name, scope_id, stores[0], policy)
    return Witness(exclusion=reason) if reason else None


def _loc_key(loc: Location) -> tuple:
    cell, line, col = loc
    return (-1 if cell is None else cell, line, col)


# --------------------------------------------------------------------------
# diagnostics and summaries
# --------------------------------------------------------------------------

def unused_diagnostics(table: VariableAccessTable, path: str, policy: UnusedPolicy | None = None,
                       rules: RuleConfig | None = None) -> list[Diagnostic]:
    rules = rules or RuleConfig()
    out = []
    if rules.enabled("U001"):
        for u in find_unused(table, policy):
            cell, line, col = u.defining_location
            kind = "import" if u.origin == "import" else "variable"
            out.append(Diagnostic("U001", f"{kind} '{u.name}' is assigned but never used",
                                  path, line, col + 1, "unused", cell,
                                  {"name": u.name, "scope": u.scope_id, "n_stores": u.n_stores}))
    if rules.enabled("U003") and (policy or UnusedPolicy()).ignore_imports:
        for u in find_unused_imports(table):
            cell, line, col = u.defining_location
            out.append(Diagnostic("U003", f"'{u.name}' imported but never used",
                                  path, line, col + 1, "unused", cell, {"name": u.name}))
    if rules.enabled("U002"):
        for e in find_dead_stores(table):
            cell, line, col = e.location
            out.append(Diagnostic("U002", f"value stored to '{e.name}' is overwritten before use",
                                  path, line, col + 1, "unused", cell, {"name": e.name}))
    out.sort(key=Diagnostic.sort_key)
    return out


def unused_summary(results: Mapping[str, Sequence]) -> tuple[int, int]:
    """(notebooks with at least one finding, total findings)."""
    with_any = sum(1 for found in results.values() if len(found) > 0)
    return with_any, sum(len(found) for found in results.values())
