from __future__ import annotations

import textwrap

import pytest
from hypothesis import given, settings, strategies as st

from nbquality.deprecation import (DeprecationRuleset, DuplicateTarget, MalformedRuleset,
                                   bundled_ruleset, check_deprecations, deprecation_summary,
                                   load_ruleset, load_rulesets, resolve_imports)
from nbquality.diagnostics import Diagnostic
from nbquality.frontend import parse_ast
from nbquality.notebook import PythonSource

TABLE = {
    "sklearn.cross_validation": "module",
    "sklearn.grid_search": "module",
    "sklearn.datasets.fetch_mldata": "symbol",
    "sklearn.preprocessing.Imputer": "symbol",
    "sklearn.mixture.GMM": "symbol",
}


def sources(cells):
    return [PythonSource(text, tuple((i, k) for k in range(1, text.count("\n") + 2)))
            for i, text in enumerate(cells)]


def check(cells, ruleset=None):
    return check_deprecations(sources(cells), None, ruleset or bundled_ruleset(), "nb.ipynb")


def targets(cells, ruleset=None):
    return [d.extra["target"] for d in check(cells, ruleset)]


def test_bundled_ruleset_has_the_five_targets():
    rs = bundled_ruleset()
    assert {r.target: r.kind for r in rs.rules} == TABLE
    assert len(rs.rules) == 5
    assert all(r.replacement for r in rs.rules)


@pytest.mark.parametrize("cells, target", [
    (["import sklearn.cross_validation"], "sklearn.cross_validation"),
    (["from sklearn.cross_validation import train_test_split", "train_test_split(X, y)"],
     "sklearn.cross_validation"),
    (["from sklearn import cross_validation", "cross_validation.KFold(3)"], "sklearn.cross_validation"),
    (["import sklearn.preprocessing as pp", "pp.Imputer()"], "sklearn.preprocessing.Imputer"),
])
def test_import_forms_and_alias_give_one_finding(cells, target):
    found = check(cells)
    assert len(found) == 1
    (d,) = found
    assert d.code == "D001" and d.category == "deprecated" and d.severity == "warning"
    assert d.extra["target"] == target


def test_model_selection_only_gives_nothing():
    assert check(["import sklearn.model_selection",
                  "from sklearn.model_selection import GridSearchCV", "GridSearchCV()"]) == []


def test_descendant_module_matches():
    assert targets(["import sklearn.cross_validation.foo"]) == ["sklearn.cross_validation"]


def test_symbol_imports_and_uses():
    assert targets(["from sklearn.mixture import GMM", "GMM(2)"]) == ["sklearn.mixture.GMM"]
    assert targets(["import sklearn", "sklearn.datasets.fetch_mldata('x')"]) == [
        "sklearn.datasets.fetch_mldata"]
    assert targets(["from sklearn import preprocessing as P", "P.Imputer"]) == [
        "sklearn.preprocessing.Imputer"]


def test_one_finding_per_occurrence():
    assert len(check(["import sklearn.preprocessing as pp", "pp.Imputer()\npp.Imputer()"])) == 2


def test_star_import_reaches_bare_names():
    assert targets(["from sklearn.preprocessing import *", "Imputer()"]) == [
        "sklearn.preprocessing.Imputer"]


def test_rebound_alias_uses_binding_at_use_site():
    cells = ["import sklearn.preprocessing as pp", "pp.Imputer()",
             "import sklearn.impute as pp", "pp.Imputer()"]
    found = check(cells)
    assert [(d.cell, d.extra["target"]) for d in found] == [(1, "sklearn.preprocessing.Imputer")]


def test_use_before_import_is_not_matched():
    assert check(["pp.Imputer()", "import sklearn.preprocessing as pp"]) == []


def test_assignment_rebinding_breaks_alias():
    assert check(["import sklearn.preprocessing as pp", "pp = object()", "pp.Imputer()"]) == []


def test_function_local_shadows_alias():
    assert check(["import sklearn.preprocessing as pp",
                  "def f(pp):\n    return pp.Imputer()"]) == []


def test_resolve_imports():
    trees = [parse_ast(t) for t in ["import sklearn.cross_validation",
                                    "from sklearn import grid_search as gs",
                                    "import a as x", "import b as x",
                                    "from a.b import *"]]
    b = resolve_imports(trees)
    assert b["sklearn"] == "sklearn"
    assert b["gs"] == "sklearn.grid_search"
    assert b["x"] == "b"
    assert [m for _, m in b.wildcards] == ["a.b"]


# ---- ruleset files -------------------------------------------------------

def _write(tmp_path, text, name="rules.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def test_duplicate_target(tmp_path):
    p = _write(tmp_path, """\
        format: 1
        library: demo
        rules:
          - target: a.b
            kind: module
          - target: a.b
            kind: symbol
        """)
    with pytest.raises(DuplicateTarget) as info:
        load_ruleset(p)
    assert info.value.line == 6


@pytest.mark.parametrize("body, line, field", [
    ("format: 2\nlibrary: x\n", 1, "format"),
    ("format: 1\nlibrary: x\nrules:\n  - target: 'a..b'\n    kind: module\n", 4, "target"),
    ("format: 1\nlibrary: x\nrules:\n  - target: a.b\n    kind: function\n", 5, "kind"),
    ("format: 1\nlibrary: x\nrules:\n  - target: a.b\n    kind: module\n    removed_in: 0.20\n", 6,
     "removed_in"),
    ("format: 1\nlibrary: x\nextra: 1\n", 3, "extra"),
])
def test_malformed_ruleset_reports_position(tmp_path, body, line, field):
    with pytest.raises(MalformedRuleset) as info:
        load_ruleset(_write(tmp_path, body))
    assert (info.value.line, info.value.field) == (line, field)


def test_invalid_yaml(tmp_path):
    with pytest.raises(MalformedRuleset):
        load_ruleset(_write(tmp_path, "format: [1\n"))


def test_empty_ruleset_finds_nothing(tmp_path):
    rs = load_ruleset(_write(tmp_path, "format: 1\nlibrary: none\nrules: []\n"))
    assert rs.rules == ()
    assert check(["import sklearn.cross_validation"], rs) == []


def test_rulesets_merge_and_directories(tmp_path):
    _write(tmp_path, "format: 1\nlibrary: a\nrules:\n  - {target: pandas.ix, kind: symbol}\n", "a.yaml")
    _write(tmp_path, "format: 1\nlibrary: b\nrules:\n  - {target: np.asscalar, kind: symbol}\n", "b.yml")
    rs = load_rulesets([tmp_path])
    assert [r.target for r in rs.rules] == ["pandas.ix", "np.asscalar"]
    merged = bundled_ruleset().merged(rs)
    assert len(merged.rules) == 7
    with pytest.raises(DuplicateTarget):
        merged.merged(rs)


# ---- summary -------------------------------------------------------------

def _d001(target):
    return Diagnostic("D001", "", "nb", 1, 1, "deprecated", extra={"target": target})


def test_summary_counts_notebooks_not_occurrences():
    s = deprecation_summary({"a": [_d001("t"), _d001("t")], "b": [_d001("t")], "c": []},
                            importing=4)
    assert s.rows == (("t", 2),)
    assert s.n_affected == 2 and s.affected_fraction == 0.5


def test_summary_ordering_and_empty():
    s = deprecation_summary({"a": [_d001("x"), _d001("y")], "b": [_d001("y")]})
    assert s.rows == (("y", 2), ("x", 1))
    assert deprecation_summary({}).rows == ()


# ---- properties ----------------------------------------------------------

STATEMENTS = st.sampled_from([
    "import sklearn.preprocessing as pp", "import sklearn.impute as pp", "pp.Imputer()",
    "from sklearn import mixture", "mixture.GMM(1)", "mixture = None", "import sklearn",
    "sklearn.datasets.fetch_mldata('m')", "from sklearn.grid_search import GridSearchCV",
    "from sklearn import cross_validation as cv", "cv.train_test_split()",
    "from sklearn.preprocessing import *", "Imputer()", "import sklearn.mixture as mixture",
    "def f(pp):\n    return pp.Imputer()", "sklearn = 3",
])
CHAINS = st.lists(st.lists(STATEMENTS, min_size=1, max_size=4).map("\n".join), min_size=1, max_size=4)


@settings(max_examples=200, deadline=None)
@given(CHAINS)
def test_alias_soundness(cells):
    srcs = sources(cells)
    for d in check_deprecations(srcs, None, bundled_ruleset(), "nb"):
        w = d.extra["witness"]
        if "bound_to" in w:
            assert ".".join([w["bound_to"]] + w["attrs"]) == w["expanded"]
            assert w["expanded"] == d.extra["target"]
        else:
            assert w["expanded"] == d.extra["target"] or w["expanded"].startswith(d.extra["target"] + ".")


@settings(max_examples=200, deadline=None)
@given(CHAINS, st.sets(st.sampled_from(sorted(TABLE))), st.sets(st.sampled_from(sorted(TABLE))))
def test_ruleset_monotonicity(cells, some, more):
    full = bundled_ruleset()

    def subset(keep):
        return DeprecationRuleset(full.library, full.source,
                                  tuple(r for r in full.rules if r.target in keep))

    srcs = sources(cells)
    small = {(d.cell, d.line, d.column, d.extra["target"])
             for d in check_deprecations(srcs, None, subset(some), "nb")}
    large = {(d.cell, d.line, d.column, d.extra["target"])
             for d in check_deprecations(srcs, None, subset(some | more), "nb")}
    assert small <= large
    assert check_deprecations(srcs, None, subset(set()), "nb") == []
