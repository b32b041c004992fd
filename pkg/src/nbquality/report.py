"""Corpus-level aggregation and report rendering.

A CorpusReport stores only per-file metrics plus run metadata. Every
aggregate (distributions, ratios, rankings, summaries) is derived from those
items, written alongside them in the JSON form, and re-derived and compared
when a report is parsed back.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .config import FILE_RULES, RunConfig, find_repo_root
from .deprecation import DeprecationRuleset, DeprecationSummary
from .notebook import NOTEBOOK_SUFFIX, find_notebooks, find_scripts
from .pipeline import Failure, FileResult, NotebookMetrics, ScriptMetrics, run_jobs
from .style import STYLE_CODES, ZeroLoc, format_ratio, ratio, remark

SCHEMA = "nbquality.corpus-report"
SCHEMA_VERSION = 1
TOP_N = 10

LOC_DEFINITION = "non-blank lines of code-cell source after IPython magics are blanked"
PERCENTILE_METHOD = ("median: midpoint of the two central values for even n; "
                     "quartiles: linear interpolation between closest ranks (inclusive)")
RATIO_NOTE = ("error ratio = style findings / LOC; file-related codes (W292) are left out "
              "unless file rules are enabled")


class NoInputs(ValueError):
    """No notebook could be resolved from the given paths."""


class ReportInconsistent(ValueError):
    """A stored aggregate differs from its recomputation from per-item data."""


# --------------------------------------------------------------------------
# statistics
# --------------------------------------------------------------------------

def median(values: Sequence[float]) -> float:
    """Middle value; the mean of the two middle values for an even count."""
    if not values:
        raise ValueError("median of empty data")
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2


@dataclass(frozen=True)
class Distribution:
    n: int
    min: float | None = None
    q1: float | None = None
    median: float | None = None
    q3: float | None = None
    max: float | None = None
    mean: float | None = None

    def to_dict(self) -> dict:
        return {"n": self.n, "min": self.min, "q1": self.q1, "median": self.median,
                "q3": self.q3, "max": self.max, "mean": self.mean}


def distribution(values: Iterable[float]) -> Distribution:
    data = list(values)
    if not data:
        return Distribution(0)
    if len(data) == 1:
        q1 = q3 = float(data[0])
    else:
        q1, _, q3 = statistics.quantiles(data, n=4, method="inclusive")
    return Distribution(len(data), float(min(data)), float(q1), median(data), float(q3),
                        float(max(data)), float(statistics.fmean(data)))


# --------------------------------------------------------------------------
# the report
# --------------------------------------------------------------------------

def _style_count(by_code: Mapping[str, int], file_rules: bool) -> int:
    return sum(n for code, n in by_code.items()
               if code in STYLE_CODES and (file_rules or code not in FILE_RULES))


def _ratio_or_none(count: int, loc: int) -> Fraction | None:
    try:
        return ratio(count, loc)
    except ZeroLoc:
        return None


def _as_float(value: Fraction | None) -> float | None:
    return None if value is None else float(value)


@dataclass(frozen=True)
class GroupComparison:
    notebook_ratio: Fraction | None
    script_ratio: Fraction | None
    difference: Fraction | None
    top_overlap: float
    partial: bool

    def to_dict(self) -> dict:
        return {"notebook_ratio": _as_float(self.notebook_ratio),
                "script_ratio": _as_float(self.script_ratio),
                "difference": _as_float(self.difference),
                "top_overlap": self.top_overlap, "partial": self.partial}


@dataclass(frozen=True)
class CorpusReport:
    notebooks: tuple[NotebookMetrics, ...] = ()
    scripts: tuple[ScriptMetrics, ...] = ()
    failures: tuple[Failure, ...] = ()
    metadata: dict = field(default_factory=dict)

    @property
    def file_rules(self) -> bool:
        return bool(self.metadata.get("file_rules_counted", False))

    # ---- notebook group ----------------------------------------------------
    @property
    def loc_distribution(self) -> Distribution:
        return distribution(m.loc for m in self.notebooks)

    @property
    def cell_distribution(self) -> Distribution:
        return distribution(m.n_code_cells for m in self.notebooks)

    @property
    def text_code_distribution(self) -> Distribution:
        return distribution(float(r) for r in (m.text_code_ratio for m in self.notebooks) if r is not None)

    def group_totals(self, group: str) -> tuple[int, int]:
        """(style findings, LOC) of ``group`` ('notebooks' or 'scripts')."""
        items = self.notebooks if group == "notebooks" else self.scripts
        return (sum(_style_count(m.diagnostics_by_code, self.file_rules) for m in items),
                sum(m.loc for m in items))

    def error_ratio(self, group: str) -> Fraction | None:
        return _ratio_or_none(*self.group_totals(group))

    def code_counts(self, group: str) -> dict[str, int]:
        items = self.notebooks if group == "notebooks" else self.scripts
        counts: dict[str, int] = {}
        for m in items:
            for code, n in m.diagnostics_by_code.items():
                if code in STYLE_CODES and (self.file_rules or code not in FILE_RULES):
                    counts[code] = counts.get(code, 0) + n
        return counts

    @property
    def unused_summary(self) -> tuple[int, int]:
        return (sum(1 for m in self.notebooks if m.n_unused > 0),
                sum(m.n_unused for m in self.notebooks))

    @property
    def deprecation_summary(self) -> DeprecationSummary:
        counts: dict[str, int] = {}
        for m in self.notebooks:
            for t in m.deprecated_targets:
                counts[t] = counts.get(t, 0) + 1
        rows = tuple(sorted(counts.items(), key=lambda r: (-r[1], r[0])))
        importing = sum(1 for m in self.notebooks if m.imports_library)
        return DeprecationSummary(rows, sum(1 for m in self.notebooks if m.deprecated_targets), importing)


def top_codes(report: CorpusReport, n: int = TOP_N) -> dict[str, list[tuple[str, int]]]:
    """Per group, style codes by descending count (ties by code), at most ``n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = {}
    for group in ("notebooks", "scripts"):
        ranked = sorted(report.code_counts(group).items(), key=lambda kv: (-kv[1], kv[0]))
        out[group] = ranked[:n]
    return out


def compare_groups(report: CorpusReport) -> GroupComparison:
    nb_ratio = report.error_ratio("notebooks")
    sc_ratio = report.error_ratio("scripts")
    diff = nb_ratio - sc_ratio if nb_ratio is not None and sc_ratio is not None else None
    tops = top_codes(report, TOP_N)
    a = {c for c, _ in tops["notebooks"]}
    b = {c for c, _ in tops["scripts"]}
    overlap = len(a & b) / len(a | b) if a | b else 1.0
    partial = not report.notebooks or not report.scripts
    return GroupComparison(nb_ratio, sc_ratio, diff, overlap, partial)


def aggregates(report: CorpusReport) -> dict:
    """Every derived number of the report, as JSON-ready values."""
    tops = top_codes(report, TOP_N)
    groups = {}
    for group, items in (("notebooks", report.notebooks), ("scripts", report.scripts)):
        findings, loc = report.group_totals(group)
        groups[group] = {
            "count": len(items),
            "total_loc": loc,
            "style_findings": findings,
            "error_ratio": _as_float(report.error_ratio(group)),
            "loc": distribution(m.loc for m in items).to_dict(),
            "top_codes": [[c, k] for c, k in tops[group]],
        }
    groups["notebooks"]["n_code_cells"] = report.cell_distribution.to_dict()
    groups["notebooks"]["text_code_ratio"] = report.text_code_distribution.to_dict()
    with_unused, total_unused = report.unused_summary
    return {
        "groups": groups,
        "comparison": compare_groups(report).to_dict(),
        "unused": {"notebooks_with_unused": with_unused, "total": total_unused},
        "deprecation": report.deprecation_summary.to_dict(),
        "failures": len(report.failures),
    }


def _naive_aggregates(report: CorpusReport) -> dict:
    """Independent recomputation of the headline numbers with plain loops."""
    out = {}
    for group, items in (("notebooks", report.notebooks), ("scripts", report.scripts)):
        findings = 0
        loc = 0
        for m in items:
            loc += m.loc
            for code, n in m.diagnostics_by_code.items():
                if code in STYLE_CODES and (report.file_rules or code != "W292"):
                    findings += n
        out[group] = (findings, loc, findings / loc if loc else None)
    return out


def check_consistency(report: CorpusReport, stored: Mapping | None = None) -> None:
    """Raise ReportInconsistent if aggregates disagree with per-item data."""
    naive = _naive_aggregates(report)
    for group in ("notebooks", "scripts"):
        findings, loc, value = naive[group]
        if report.group_totals(group) != (findings, loc):
            raise ReportInconsistent(f"{group}: totals disagree with per-item metrics")
        mine = _as_float(report.error_ratio(group))
        if (mine is None) != (value is None) or (value is not None and not math.isclose(mine, value)):
            raise ReportInconsistent(f"{group}: error ratio disagrees with per-item metrics")
    if stored is not None:
        recomputed = json.loads(json.dumps(aggregates(report)))
        if recomputed != json.loads(json.dumps(dict(stored))):
            diff = sorted(k for k in set(recomputed) | set(stored) if recomputed.get(k) != stored.get(k))
            raise ReportInconsistent(f"stored aggregates differ from recomputation: {', '.join(diff)}")


# --------------------------------------------------------------------------
# building
# --------------------------------------------------------------------------

def build_report(results: Iterable[FileResult], metadata: Mapping | None = None) -> CorpusReport:
    notebooks, scripts, failures = [], [], []
    for r in results:
        if r.failure is not None:
            failures.append(r.failure)
        elif r.notebook is not None:
            notebooks.append(r.notebook)
        elif r.script is not None:
            scripts.append(r.script)
    return CorpusReport(
        tuple(sorted(notebooks, key=lambda m: m.path)),
        tuple(sorted(scripts, key=lambda m: m.path)),
        tuple(sorted(failures, key=lambda f: (f.path, f.code))),
        dict(metadata or {}),
    )


def resolve_inputs(paths: Sequence[str]) -> tuple[list[tuple[str, str]], list[Failure]]:
    """Notebook files named by ``paths`` (directories are searched) with their input root."""
    found: dict[str, str] = {}
    failures = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            for nb in find_notebooks(p):
                found.setdefault(str(nb), str(p))
        elif p.is_file() and p.suffix == NOTEBOOK_SUFFIX:
            found.setdefault(str(p), str(p.parent))
        elif not p.exists():
            failures.append(Failure(str(p), "A003", "input could not be loaded: no such file or directory"))
        else:
            failures.append(Failure(str(p), "A003", "input could not be loaded: not a notebook"))
    return sorted(found.items()), failures


def _script_roots(notebooks: Sequence[tuple[str, str]]) -> list[Path]:
    roots = set()
    for nb, input_root in notebooks:
        root = find_repo_root(nb)
        roots.add(root if (root / ".git").exists() else Path(input_root).resolve())
    return sorted(roots)


def discover_scripts(notebooks: Sequence[tuple[str, str]]) -> list[str]:
    seen: dict[str, str] = {}
    for root in _script_roots(notebooks):
        for path in find_scripts(root):
            seen.setdefault(str(path.resolve()), str(path))
    return sorted(seen.values())


def run_metadata(cfg: RunConfig, ruleset: DeprecationRuleset | None) -> dict:
    meta = cfg.echo()
    meta.update({
        "loc_definition": LOC_DEFINITION,
        "percentile_method": PERCENTILE_METHOD,
        "ratio_definition": RATIO_NOTE,
        "deprecation_matching": "module targets match the module and its descendants; "
                                "symbol targets match exactly",
        "deprecation_targets": [r.target for r in ruleset.rules] if ruleset else [],
        "style_codes": sorted(STYLE_CODES),
    })
    return meta


def analyze_corpus(paths: Sequence[str], cfg: RunConfig | None = None,
                   ruleset: DeprecationRuleset | None = None) -> CorpusReport:
    """Analyze every notebook under ``paths`` (and sibling scripts if configured)."""
    cfg = cfg or RunConfig(inputs=tuple(paths))
    notebooks, failures = resolve_inputs(paths)
    if not notebooks:
        raise NoInputs("no notebooks found in: " + ", ".join(map(str, paths)))
    jobs = [("notebook", nb, cfg, ruleset) for nb, _ in notebooks]
    if cfg.include_scripts:
        jobs += [("script", s, cfg, None) for s in discover_scripts(notebooks)]
    results = run_jobs(jobs, cfg.jobs)
    results += [FileResult(f.path, failure=f) for f in failures]
    report = build_report(results, run_metadata(cfg, ruleset))
    check_consistency(report)
    return report


# --------------------------------------------------------------------------
# rendering and parsing
# --------------------------------------------------------------------------

def to_dict(report: CorpusReport) -> dict:
    return {
        "schema": SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "metadata": report.metadata,
        "notebooks": [m.to_dict() for m in report.notebooks],
        "scripts": [m.to_dict() for m in report.scripts],
        "failures": [f.to_dict() for f in report.failures],
        "aggregates": aggregates(report),
    }


def _fmt(value: float | None, digits: int = 2) -> str:
    if value is None:
        return "n/a"
    if float(value).is_integer():
        return str(int(value))
    return f"{value:.{digits}f}"


def _render_text(report: CorpusReport) -> str:
    out: list[str] = []
    add = out.append
    add(f"Notebook quality report (schema {SCHEMA_VERSION})")
    add(f"notebooks analyzed: {len(report.notebooks)}   scripts: {len(report.scripts)}   "
        f"failed inputs: {len(report.failures)}")
    add(f"LOC: {LOC_DEFINITION}")
    add("")
    header = f"{'':<22}{'n':>6}{'min':>9}{'q1':>9}{'median':>9}{'q3':>9}{'max':>9}{'mean':>9}"
    add(header)
    rows = [("notebook LOC", report.loc_distribution), ("code cells", report.cell_distribution),
            ("script LOC", distribution(m.loc for m in report.scripts)),
            ("markdown/code lines", report.text_code_distribution)]
    for label, d in rows:
        add(f"{label:<22}{d.n:>6}" + "".join(f"{_fmt(v):>9}" for v in
                                              (d.min, d.q1, d.median, d.q3, d.max, d.mean)))
    add("")
    cmp = compare_groups(report)
    for group, value in (("notebooks", cmp.notebook_ratio), ("scripts", cmp.script_ratio)):
        findings, loc = report.group_totals(group)
        add(f"error ratio ({group}): {format_ratio(value)}  ({findings} findings / {loc} LOC)")
    if cmp.difference is not None:
        add(f"difference: {float(cmp.difference) * 100:.2f} points")
    add(f"top-{TOP_N} overlap: {cmp.top_overlap * 100:.0f}%" + ("  (partial comparison)" if cmp.partial else ""))
    for group, ranked in top_codes(report).items():
        add("")
        add(f"top codes ({group}):")
        if not ranked:
            add("  none")
        for i, (code, n) in enumerate(ranked, 1):
            add(f"  {i:>2}. {code}  {n:>7}  {remark(code)}")
    add("")
    with_unused, total = report.unused_summary
    add(f"unused variables: {total} in {with_unused} notebooks")
    dep = report.deprecation_summary
    frac = dep.affected_fraction
    add(f"deprecated API uses: {dep.n_affected} notebooks affected"
        + (f" of {dep.n_importing} importing the library ({frac * 100:.2f}%)" if frac is not None else ""))
    for target, n in dep.rows:
        add(f"  {target:<40} {n:>5}")
    if report.failures:
        add("")
        add("failed inputs:")
        for f in report.failures:
            add(f"  {f.path}: {f.code} {f.message}")
    return "\n".join(out) + "\n"


def render(report: CorpusReport, fmt: str = "text") -> bytes:
    """Report as UTF-8 bytes; aggregates are re-checked before writing."""
    check_consistency(report)
    if fmt == "json":
        return (json.dumps(to_dict(report), indent=2, sort_keys=True) + "\n").encode("utf-8")
    if fmt == "text":
        return _render_text(report).encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")


def parse_report(data: bytes | str) -> CorpusReport:
    """Inverse of ``render(..., 'json')``; verifies schema and aggregates."""
    doc = json.loads(data)
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise ValueError("not a corpus report")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema version {doc.get('schema_version')!r}")
    report = CorpusReport(
        tuple(NotebookMetrics.from_dict(d) for d in doc["notebooks"]),
        tuple(ScriptMetrics.from_dict(d) for d in doc["scripts"]),
        tuple(Failure.from_dict(d) for d in doc["failures"]),
        dict(doc.get("metadata") or {}),
    )
    check_consistency(report, doc.get("aggregates"))
    return report
