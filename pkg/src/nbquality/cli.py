"""Command-line interface: ``lint``, ``report`` and ``rules``.

Exit codes: 0 clean, 1 findings (lint only), 2 usage or operational error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import (DEFAULT_MAX_LINE_LENGTH, RuleConfig, RunConfig, UnusedPolicy,
                     find_repo_root, read_config_file)
from .deprecation import DeprecationRuleset, MalformedRuleset, load_rulesets
from .notebook import NOTEBOOK_SUFFIX, SCRIPT_SUFFIXES, find_notebooks
from .pipeline import FileResult, run_jobs
from .report import NoInputs, analyze_corpus, render
from .style import rule_catalog

EXIT_OK, EXIT_FINDINGS, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _truthy(value: str) -> bool:
    return value.strip().lower() in ("1", "true", "yes", "on")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default=None)
    common.add_argument("--max-line-length", type=int, default=None, metavar="N")
    common.add_argument("--select", default=None, metavar="CODES",
                        help="comma-separated code prefixes to enable")
    common.add_argument("--ignore", default=None, metavar="CODES",
                        help="comma-separated code prefixes to disable")
    common.add_argument("--strict-unused", action="store_true", default=None,
                        help="report parameters, imports, underscore names and __all__ names too")
    common.add_argument("--ruleset", action="append", default=None, metavar="PATH",
                        help="deprecation ruleset file or directory (repeatable)")
    common.add_argument("--include-scripts", action="store_true", default=None,
                        help="also check .py files in each notebook's repository")
    common.add_argument("--file-rules", action="store_true", default=None,
                        help="enable end-of-file rules (W292) and count them")
    common.add_argument("--jobs", type=int, default=None, metavar="N")
    common.add_argument("--config", default=None, metavar="FILE",
                        help="config file with an [nbquality] section")

    parser = argparse.ArgumentParser(prog="nbquality", description="Code-quality checks for notebooks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("lint", parents=[common], help="print diagnostics per notebook")
    p.add_argument("paths", nargs="*")
    p = sub.add_parser("report", parents=[common], help="corpus-level report")
    p.add_argument("paths", nargs="*")
    sub.add_parser("rules", parents=[common], help="list style rules and deprecation rules")
    return parser


def _file_settings(args: argparse.Namespace) -> dict[str, str]:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        parser.read(path, encoding="utf-8")
        if not parser.has_section("nbquality"):
            return {}
        return {k.replace("_", "-"): v for k, v in parser.items("nbquality")}
    paths = getattr(args, "paths", None) or ["."]
    return read_config_file(find_repo_root(paths[0]))


def make_config(args: argparse.Namespace) -> RunConfig:
    """Flags over config-file settings over defaults."""
    try:
        settings = _file_settings(args)
    except Exception as exc:  # configparser errors are varied
        raise UsageError(f"bad config file: {exc}") from None

    def pick(flag, key, convert=str, default=None):
        if flag is not None:
            return flag
        if key in settings:
            try:
                return convert(settings[key])
            except ValueError:
                raise UsageError(f"bad value for {key!r} in config: {settings[key]!r}") from None
        return default

    strict = pick(args.strict_unused, "strict-unused", _truthy, False)
    rulesets = args.ruleset if args.ruleset is not None else [
        r.strip() for r in settings.get("ruleset", "").replace("\n", ",").split(",") if r.strip()]
    try:
        rules = RuleConfig(
            select=pick(args.select, "select", str, ""),
            ignore=pick(args.ignore, "ignore", str, ""),
            max_line_length=pick(args.max_line_length, "max-line-length", int, DEFAULT_MAX_LINE_LENGTH),
            file_rules=pick(args.file_rules, "file-rules", _truthy, False),
        )
        return RunConfig(
            inputs=tuple(getattr(args, "paths", ()) or ()),
            rules=rules,
            unused=UnusedPolicy.strict() if strict else UnusedPolicy(),
            rulesets=tuple(rulesets),
            output_format=pick(args.format, "format", str, "text"),
            include_scripts=pick(args.include_scripts, "include-scripts", _truthy, False),
            jobs=pick(args.jobs, "jobs", int, 1),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_rules(cfg: RunConfig) -> DeprecationRuleset:
    """The bundled ruleset with any ``--ruleset`` files appended."""
    ruleset = load_rulesets([])
    if cfg.rulesets:
        ruleset = ruleset.merged(load_rulesets(list(cfg.rulesets)))
    return ruleset


def _lint_targets(paths: Sequence[str]) -> tuple[list[str], list[str]]:
    """Files to lint, in input order (directories expand sorted), plus missing paths."""
    files: list[str] = []
    missing: list[str] = []
    seen = set()
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found = [str(f) for f in find_notebooks(p)]
        elif p.is_file():
            found = [str(p)]
        else:
            missing.append(raw)
            continue
        for f in found:
            if f not in seen:
                seen.add(f)
                files.append(f)
    return files, missing


def _emit_lint(results: Sequence[FileResult], fmt: str, out) -> None:
    if fmt == "json":
        doc = [{"path": r.path, "diagnostics": [d.to_dict() for d in r.diagnostics]}
               for r in results if r.failure is None]
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return
    for r in results:
        if r.failure is None:
            for d in r.diagnostics:
                out.write(d.format() + "\n")


def cmd_lint(args: argparse.Namespace, out=sys.stdout, err=sys.stderr) -> int:
    if not args.paths:
        raise UsageError("lint needs at least one path")
    cfg = make_config(args)
    ruleset = _load_rules(cfg)
    files, missing = _lint_targets(args.paths)
    status = EXIT_OK
    for m in missing:
        err.write(f"nbquality: {m}: no such file or directory\n")
        status = EXIT_ERROR
    unsupported = [f for f in files if Path(f).suffix not in SCRIPT_SUFFIXES | {NOTEBOOK_SUFFIX}]
    for f in unsupported:
        err.write(f"nbquality: {f}: not a notebook or Python file\n")
        status = EXIT_ERROR
    files = [f for f in files if f not in unsupported]
    results = run_jobs([("auto", f, cfg, ruleset) for f in files], cfg.jobs)
    _emit_lint(results, cfg.output_format, out)
    findings = False
    for r in results:
        if r.failure is not None:
            err.write(f"nbquality: {r.path}: {r.failure.message}\n")
            status = EXIT_ERROR
        elif r.diagnostics:
            findings = True
    if status == EXIT_OK and findings:
        status = EXIT_FINDINGS
    return status


def cmd_report(args: argparse.Namespace, out=sys.stdout, err=sys.stderr) -> int:
    if not args.paths:
        raise UsageError("report needs at least one path")
    cfg = make_config(args)
    ruleset = _load_rules(cfg)
    try:
        report = analyze_corpus(args.paths, cfg, ruleset)
    except NoInputs as exc:
        err.write(f"nbquality: {exc}\n")
        return EXIT_ERROR
    data = render(report, cfg.output_format)
    out.write(data.decode("utf-8"))
    return EXIT_OK


def cmd_rules(args: argparse.Namespace, out=sys.stdout, err=sys.stderr) -> int:
    cfg = make_config(args)
    ruleset = _load_rules(cfg)
    catalog = rule_catalog()
    if cfg.output_format == "json":
        doc = {
            "style": [{"code": r.code, "remark": r.message_template, "phase": r.phase,
                       "enabled": cfg.rules.enabled(r.code)} for r in catalog],
            "deprecations": [{"target": r.target, "kind": r.kind, "deprecated_since": r.deprecated_since,
                              "removed_in": r.removed_in, "replacement": r.replacement, "note": r.note}
                             for r in ruleset.rules],
        }
        out.write(json.dumps(doc, indent=2) + "\n")
        return EXIT_OK
    out.write("style rules:\n")
    for r in catalog:
        flag = "" if cfg.rules.enabled(r.code) else "  (off)"
        out.write(f"  {r.code}  {r.message_template}{flag}\n")
    out.write(f"deprecation rules ({ruleset.library}):\n")
    for r in ruleset.rules:
        since = f"deprecated {r.deprecated_since}" if r.deprecated_since else ""
        repl = f" -> {r.replacement}" if r.replacement else ""
        out.write(f"  {r.target} [{r.kind}] {since}{repl}\n")
    return EXIT_OK


COMMANDS = {"lint": cmd_lint, "report": cmd_report, "rules": cmd_rules}


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out, err)
    except (UsageError, MalformedRuleset) as exc:
        err.write(f"nbquality: {exc}\n")
        return EXIT_ERROR
