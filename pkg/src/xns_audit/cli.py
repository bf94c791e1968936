"""Command-line entry point."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import yaml

from . import __version__
from .impact import Finding, Severity
from .knowledge import KbConflict, KbParseError, KnowledgeBase, derive_builtins, derived_fragment, load_kb
from .model.callgraph import build_call_graph  # noqa: F401  (re-exported for scripting)
from .model.corpus import DEFAULT_EXCLUDES, CorpusEmpty, load_corpus
from .model.program import build_model
from .report import (
    Format,
    RenderError,
    ScanReport,
    aggregate_corpus,
    dumps,
    render,
    render_sarif,
    write_output,
)
from .resources import dump_catalog
from .scan import ScanArtifacts, ScanOptions, scan_tree
from .taint import DEFAULT_MAX_DEPTH

EXIT_CLEAN = 0
EXIT_FINDINGS = 1
EXIT_FATAL = 2
KB_ENV = "XNS_AUDIT_KB"


@dataclass
class CliConfig:
    format: Format = Format.TEXT
    output: Optional[str] = None
    kb_path: Optional[str] = None
    max_depth: int = DEFAULT_MAX_DEPTH
    fail_on: Optional[Severity] = Severity.LOW
    excludes: Optional[List[str]] = None
    jobs: int = 1
    timing: bool = False
    color: bool = False
    explain: Optional[str] = None
    dump_resources: bool = False
    manifest: Optional[str] = None
    out_dir: Optional[str] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "CliConfig":
        fmt = Format(getattr(args, "format", "text"))
        output = getattr(args, "output", None)
        fail_on = getattr(args, "fail_on", "low")
        return cls(
            format=fmt,
            output=output,
            kb_path=getattr(args, "kb", None) or os.environ.get(KB_ENV) or None,
            max_depth=getattr(args, "max_depth", DEFAULT_MAX_DEPTH),
            fail_on=None if fail_on == "none" else Severity.parse(fail_on),
            excludes=_excludes(args),
            jobs=max(1, getattr(args, "jobs", 1)),
            timing=getattr(args, "timing", False),
            color=fmt is Format.TEXT and output in (None, "-") and sys.stdout.isatty(),
            explain=getattr(args, "explain", None),
            dump_resources=getattr(args, "dump_resources", False),
            manifest=getattr(args, "manifest", None),
            out_dir=getattr(args, "out_dir", None),
        )

    def options(self, kb: KnowledgeBase, jobs: Optional[int] = None) -> ScanOptions:
        return ScanOptions(kb=kb, max_depth=self.max_depth, jobs=jobs or self.jobs,
                           excludes=self.excludes, timing=self.timing)


def _excludes(args: argparse.Namespace) -> List[str]:
    base = [] if getattr(args, "include_vendored", False) else list(DEFAULT_EXCLUDES)
    return base + list(getattr(args, "exclude", None) or [])


def _err(msg: str) -> None:
    print(f"xns-audit: {msg}", file=sys.stderr)


def _exit_for(findings: Sequence[Finding], fail_on: Optional[Severity]) -> int:
    if fail_on is None:
        return EXIT_CLEAN
    return EXIT_FINDINGS if any(f.severity.rank >= fail_on.rank for f in findings) else EXIT_CLEAN


# -- explain ---------------------------------------------------------------

def explain(art: ScanArtifacts, finding_id: str) -> str:
    f = next((x for x in art.findings if x.id == finding_id), None)
    if f is None:
        raise KeyError(finding_id)
    texts = {u.path: u.text.decode("utf-8", errors="replace").splitlines() for u in art.model.units}

    def excerpt(path: str, line: int) -> str:
        lines = texts.get(path, [])
        return lines[line - 1].strip() if 0 < line <= len(lines) else ""

    ref = f.referenced.kind if f.referenced else "<unattributed>"
    out = [
        f"{f.id}  {f.finding_class.value}  severity={f.severity.value}",
        f"  trigger:    {f.trigger.kind} ({f.trigger.scope.value}, {f.trigger.origin.value})",
        f"  referenced: {ref}",
        f"  verbs:      {', '.join(f.verbs.sorted_verbs()) or '-'}",
        f"  sink:       {f.locations.sink} [{f.sink_kind}]",
        "  trace:",
    ]
    for n, s in enumerate(f.trace, 1):
        out.append(f"   {n:>2}. {s.src_function}: {s.src} -> {s.dst_function}: {s.dst}  ({s.rule})")
        out.append(f"       {s.location}  | {excerpt(s.location.path, s.location.line)}")
    if f.verbs.evidence:
        out.append("  verb uses:")
        for e in f.verbs.evidence:
            out.append(f"       {e.verb:<7} {e.location}  | {excerpt(e.location.path, e.location.line)}")
    return "\n".join(out) + "\n"


# -- commands --------------------------------------------------------------

def cmd_scan(cfg: CliConfig, target: str) -> int:
    kb = load_kb(cfg.kb_path)
    art = scan_tree(target, cfg.options(kb))
    if cfg.dump_resources:
        _write_catalog(cfg, art)
        return EXIT_CLEAN
    if cfg.explain:
        try:
            data = explain(art, cfg.explain).encode("utf-8")
        except KeyError:
            _err(f"no finding with id {cfg.explain}")
            return EXIT_FATAL
    else:
        data = render(art.report, cfg.format, cfg.color)
    write_output(data, cfg.output)
    return _exit_for(art.findings, cfg.fail_on)


def operator_dirs(target: Path, manifest: Optional[str]) -> List[Path]:
    if manifest is None:
        return sorted(p for p in target.iterdir() if p.is_dir())
    with open(manifest, encoding="utf-8") as fh:
        listed = yaml.safe_load(fh) or []
    if isinstance(listed, dict):
        listed = listed.get("operators", [])
    if not isinstance(listed, list) or not all(isinstance(x, str) for x in listed):
        raise ValueError(f"{manifest}: expected a list of operator directories")
    return [target / x for x in listed]


def run_corpus(cfg: CliConfig, target: Path, kb: KnowledgeBase) -> Tuple[List[ScanReport], List[Tuple[str, str]]]:
    dirs = operator_dirs(target, cfg.manifest)
    if not dirs:
        raise CorpusEmpty(str(target))
    opts = cfg.options(kb, jobs=1)

    def one(d: Path):
        try:
            return scan_tree(d, opts).report, None
        except CorpusEmpty:
            return None, (d.name, "no Go sources")
        except FileNotFoundError:
            return None, (d.name, "directory not found")
        except Exception as exc:  # recorded per operator, the run continues
            return None, (d.name, f"{type(exc).__name__}: {exc}")

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(one, dirs))
    else:
        results = [one(d) for d in dirs]
    reports = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    return reports, errors


def cmd_corpus(cfg: CliConfig, target: str) -> int:
    root = Path(target)
    if not root.is_dir():
        raise FileNotFoundError(target)
    kb = load_kb(cfg.kb_path)
    reports, errors = run_corpus(cfg, root, kb)
    agg = aggregate_corpus(reports, errors)
    for op, msg in errors:
        _err(f"{op}: {msg}")
    if cfg.format is Format.SARIF:
        data = dumps(render_sarif(reports)).encode("utf-8")
    elif cfg.format is Format.STRUCTURED:
        doc = {
            "aggregate": agg.to_dict(),
            "operators": [
                {
                    "operator": r.operator,
                    "findings": len(r.findings),
                    "max_severity": r.max_severity().value if r.max_severity() else None,
                    "finding_ids": [f.id for f in r.findings],
                }
                for r in reports
            ],
        }
        data = dumps(doc).encode("utf-8")
    else:
        data = render(agg, Format.TEXT)
    write_output(data, cfg.output)
    if cfg.out_dir:
        from .figures import write_corpus_outputs

        write_corpus_outputs(agg, reports, cfg.out_dir)
    return _exit_for([f for r in reports for f in r.findings], cfg.fail_on)


def cmd_fixtures(cfg: CliConfig, target: Optional[str]) -> int:
    from .fixtures import ManifestInvalid, ManifestMissing, evaluate_fixtures, render_evaluation

    kb = load_kb(cfg.kb_path)
    try:
        ev = evaluate_fixtures(Path(target) if target else None, kb, cfg.max_depth, cfg.jobs)
    except (ManifestMissing, ManifestInvalid) as exc:
        _err(str(exc))
        return EXIT_FATAL
    if cfg.format is Format.STRUCTURED:
        doc = {
            "scores": {c: {"tp": s.tp, "fp": s.fp, "fn": s.fn, "precision": s.precision, "recall": s.recall}
                       for c, s in ev.scores.items()},
            "fixtures": [
                {"fixture": r.name, "id": r.fixture_id, "ok": r.ok,
                 "false_positives": [list(k) for k in r.false_positives],
                 "false_negatives": [list(k) for k in r.false_negatives],
                 "resources_ok": r.resources_ok}
                for r in ev.results
            ],
        }
        data = dumps(doc).encode("utf-8")
    else:
        data = render_evaluation(ev).encode("utf-8")
    write_output(data, cfg.output)
    return EXIT_CLEAN if ev.perfect else EXIT_FINDINGS


def cmd_kb_derive(cfg: CliConfig, target: str) -> int:
    units = load_corpus(target)
    model = build_model(units)
    entries = derive_builtins(model)
    if not entries:
        _err(f"{target}: no Getter interfaces found")
        return EXIT_FATAL
    write_output(derived_fragment(entries).encode("utf-8"), cfg.output)
    return EXIT_CLEAN


def cmd_kb_show(cfg: CliConfig) -> int:
    write_output(load_kb(cfg.kb_path).dump().encode("utf-8"), cfg.output)
    return EXIT_CLEAN


def cmd_dump_resources(cfg: CliConfig, target: str) -> int:
    _write_catalog(cfg, scan_tree(target, cfg.options(load_kb(cfg.kb_path))))
    return EXIT_CLEAN


def _write_catalog(cfg: CliConfig, art: ScanArtifacts) -> None:
    cat = dump_catalog(art.report.resource_catalog)
    if cfg.format is Format.STRUCTURED:
        data = dumps(cat)
    else:
        data = yaml.safe_dump(cat, sort_keys=False)
    write_output(data.encode("utf-8"), cfg.output)


# -- argument parsing ------------------------------------------------------

def _common(p: argparse.ArgumentParser, formats=("text", "structured", "sarif")) -> None:
    p.add_argument("--format", choices=formats, default="text")
    p.add_argument("-o", "--output", help="write to this file instead of stdout")
    p.add_argument("--kb", help=f"extra KB file merged over the default (env {KB_ENV})")
    p.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    p.add_argument("--jobs", type=int, default=1)


def _exclude_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--exclude", action="append", metavar="GLOB", help="extra path glob to skip (repeatable)")
    p.add_argument("--include-vendored", action="store_true", help="do not skip vendor/ and testdata/ trees")


def _scan_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fail-on", default="low", choices=["critical", "high", "medium", "low", "none"],
                   help="exit 1 when a finding at or above this severity exists")
    _exclude_opts(p)
    p.add_argument("--timing", action="store_true", help="include phase timings (non-deterministic)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xns-audit", description=(
        "Find cross-namespace reference vulnerabilities in Kubernetes operator Go source."))
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="scan one operator source tree")
    p.add_argument("path")
    _common(p)
    _scan_opts(p)
    p.add_argument("--explain", metavar="FINDING_ID", help="print one finding's trace with source lines")
    p.add_argument("--dump-resources", action="store_true", help="print the resource catalog instead of findings")

    p = sub.add_parser("corpus", help="scan every operator directory under PATH and aggregate")
    p.add_argument("path")
    _common(p)
    _scan_opts(p)
    p.add_argument("--manifest", help="YAML list of operator directories (relative to PATH)")
    p.add_argument("--out-dir", help="write aggregate.json, per-operator reports, CSV tables and PNG figures")

    p = sub.add_parser("fixtures", help="score the labelled fixture corpus")
    p.add_argument("path", nargs="?", help="fixture root (default: bundled fixtures)")
    _common(p, formats=("text", "structured"))

    p = sub.add_parser("kb", help="knowledge-base utilities")
    kb_sub = p.add_subparsers(dest="kb_command", required=True)
    d = kb_sub.add_parser("derive", help="derive builtin scopes from vendored typed-client Getter interfaces")
    d.add_argument("path")
    d.add_argument("-o", "--output")
    s = kb_sub.add_parser("show", help="print the effective KB")
    s.add_argument("--kb")
    s.add_argument("-o", "--output")

    p = sub.add_parser("dump-resources", help="print the resource catalog")
    p.add_argument("path")
    _common(p, formats=("text", "structured"))
    _exclude_opts(p)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = CliConfig.from_args(args)
    try:
        if args.command == "scan":
            return cmd_scan(cfg, args.path)
        if args.command == "corpus":
            return cmd_corpus(cfg, args.path)
        if args.command == "fixtures":
            return cmd_fixtures(cfg, args.path)
        if args.command == "kb":
            if args.kb_command == "derive":
                return cmd_kb_derive(cfg, args.path)
            return cmd_kb_show(cfg)
        if args.command == "dump-resources":
            return cmd_dump_resources(cfg, args.path)
    except KbParseError as exc:
        _err(f"knowledge base line {exc.line}: {exc.message}")
    except KbConflict as exc:
        _err(f"knowledge base conflict on entry {exc.entry_id}")
    except CorpusEmpty as exc:
        _err(f"{exc}: no Go sources")
    except FileNotFoundError as exc:
        _err(f"{exc}: no such directory")
    except (RenderError, ValueError, OSError) as exc:
        _err(str(exc))
    return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
