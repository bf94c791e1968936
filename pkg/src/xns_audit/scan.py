"""End-to-end scan of one operator source tree."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .diagnostics import Diagnostic, DiagnosticKind, sorted_unique
from .impact import Finding, analyze_impact
from .knowledge import KnowledgeBase, load_kb
from .model.callgraph import build_call_graph
from .model.corpus import IoError, load_corpus
from .model.ir import CallGraph, Location
from .model.program import ProgramModel, build_model
from .report import ScanReport, build_report
from .resources import Catalog, build_catalog, scope_conflicts
from .taint import DEFAULT_MAX_DEPTH, TaintResult, analyze


@dataclass
class ScanOptions:
    kb: Optional[KnowledgeBase] = None
    max_depth: int = DEFAULT_MAX_DEPTH
    jobs: int = 1
    excludes: Optional[Sequence[str]] = None
    timing: bool = False
    keep_states: bool = False


@dataclass
class ScanArtifacts:
    """Everything a scan computed, for callers that need more than the report."""

    report: ScanReport
    model: ProgramModel
    graph: CallGraph
    catalog: Catalog
    taint: TaintResult
    findings: List[Finding] = field(default_factory=list)


def scan_tree(root, options: Optional[ScanOptions] = None) -> ScanArtifacts:
    opts = options or ScanOptions()
    kb = opts.kb or load_kb()
    timing: Dict[str, float] = {}
    clock = time.perf_counter()

    def lap(phase: str) -> None:
        nonlocal clock
        now = time.perf_counter()
        timing[phase] = round((now - clock) * 1000.0, 3)
        clock = now

    io_errors: List[IoError] = []
    units = load_corpus(root, opts.excludes, io_errors)
    lap("load")
    model = build_model(units, kb.external_types(), jobs=opts.jobs)
    graph = build_call_graph(model)
    lap("model")
    catalog = Catalog(build_catalog(model, kb))
    lap("resources")
    taint = analyze(model, graph, kb, catalog, opts.max_depth, opts.jobs, keep_states=opts.keep_states)
    lap("taint")
    findings = analyze_impact(taint.hits, model, graph, kb, catalog, opts.max_depth)
    lap("impact")

    diags: List[Diagnostic] = list(taint.diagnostics)
    for err in io_errors:
        diags.append(Diagnostic(DiagnosticKind.IO_ERROR, err.message, Location(err.path, 0)))
    for unit in units:
        for line, msg in unit.parse_diagnostics:
            diags.append(Diagnostic(DiagnosticKind.PARSE_ERROR, msg, Location(unit.path, line)))
    custom = [r for r in catalog if r.origin.value == "Custom"]
    for c in scope_conflicts(model, custom):
        decl = model.types.get(c.identity)
        diags.append(Diagnostic(
            DiagnosticKind.SCOPE_CONFLICT,
            f"{c.identity}: marker says {c.marker_scope.value} but {c.client_identity} implies "
            f"{c.client_scope.value}; trusting the marker",
            decl.location if decl else None,
        ))

    stats = {
        "units": model.stats.get("units", 0),
        "parse_errors": model.stats.get("parse_errors", 0),
        "unresolved_refs": model.stats.get("unresolved_refs", 0),
        "depth_exhausted": len(taint.depth_cuts),
        "functions": model.stats.get("functions", 0),
        "ir_instructions": model.stats.get("ir_instructions", 0),
        "taint_roots": len(taint.sources.roots),
        "sink_hits": len(taint.hits),
    }
    report = build_report(
        str(root), list(catalog), findings, stats, sorted_unique(diags), timing if opts.timing else None
    )
    return ScanArtifacts(report, model, graph, catalog, taint, findings)


def scan(root, options: Optional[ScanOptions] = None) -> ScanReport:
    return scan_tree(root, options).report
