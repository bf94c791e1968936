"""Scan reports, corpus aggregates and their text / structured / SARIF renderings."""

from __future__ import annotations

import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from . import __version__
from .diagnostics import Diagnostic
from .impact import Finding, FindingClass, FindingLocations, Severity, TraceStep, VerbEvidence, VerbSet
from .model.ir import Location
from .resources import ResourceTypeInfo

SCHEMA_VERSION = "1"
SARIF_SCHEMA_URI = "https://json.schemastore.org/sarif-2.1.0.json"

RULES = {
    FindingClass.NAMESPACED: (
        "xns/insecure-namespaced-ref",
        "Attacker-controlled namespace reaches a namespace setter",
        "A field of a namespace-scoped resource selects the namespace of another "
        "namespaced object, letting a tenant reach objects outside its namespace.",
    ),
    FindingClass.CLUSTER_SCOPED: (
        "xns/insecure-cluster-scoped-ref",
        "Attacker-controlled value reaches a cluster-scoped object",
        "A field of a namespace-scoped resource is written into a cluster-scoped "
        "object that the operator creates or modifies.",
    ),
}
SARIF_LEVEL = {Severity.CRITICAL: "error", Severity.HIGH: "error", Severity.MEDIUM: "warning", Severity.LOW: "note"}


class Format(str, Enum):
    TEXT = "text"
    STRUCTURED = "structured"
    SARIF = "sarif"


class RenderError(Exception):
    pass


# -- scan report -----------------------------------------------------------

@dataclass
class ScanReport:
    corpus_root: str
    model_stats: Dict[str, int]
    resource_catalog: List[ResourceTypeInfo]
    findings: List[Finding]
    diagnostics: List[Diagnostic] = field(default_factory=list)
    timing: Optional[Dict[str, float]] = None

    @property
    def operator(self) -> str:
        return Path(self.corpus_root).name or self.corpus_root

    def max_severity(self) -> Optional[Severity]:
        return max((f.severity for f in self.findings), key=lambda s: s.rank, default=None)

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "tool": {"name": "xns-audit", "version": __version__},
            "corpus_root": self.corpus_root,
            "model_stats": dict(self.model_stats),
            "resource_catalog": [r.to_dict() for r in self.resource_catalog],
            "findings": [finding_to_dict(f) for f in self.findings],
            "diagnostics": [d.to_dict() for d in self.diagnostics],
        }
        if self.timing is not None:
            d["timing_ms"] = dict(self.timing)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ScanReport":
        if str(d.get("schema_version")) != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
        return cls(
            corpus_root=d["corpus_root"],
            model_stats=dict(d["model_stats"]),
            resource_catalog=[ResourceTypeInfo.from_dict(r) for r in d["resource_catalog"]],
            findings=[finding_from_dict(f) for f in d["findings"]],
            diagnostics=[Diagnostic.from_dict(x) for x in d.get("diagnostics", [])],
            timing=dict(d["timing_ms"]) if "timing_ms" in d else None,
        )


def build_report(
    corpus_root: str,
    catalog: Sequence[ResourceTypeInfo],
    findings: Sequence[Finding],
    stats: Mapping[str, int],
    diagnostics: Sequence[Diagnostic] = (),
    timing: Optional[Mapping[str, float]] = None,
) -> ScanReport:
    cat = sorted(catalog, key=lambda r: (r.origin.value != "Custom", r.kind, r.identity))
    return ScanReport(
        corpus_root=str(corpus_root),
        model_stats=dict(stats),
        resource_catalog=cat,
        findings=sorted(findings, key=Finding.sort_key),
        diagnostics=list(diagnostics),
        timing=dict(timing) if timing is not None else None,
    )


def _loc(loc: Location) -> Dict[str, Any]:
    return {"path": loc.path, "line": loc.line}


def _unloc(d: Mapping[str, Any]) -> Location:
    return Location(d["path"], d["line"])


def finding_to_dict(f: Finding) -> Dict[str, Any]:
    return {
        "id": f.id,
        "class": f.finding_class.value,
        "severity": f.severity.value,
        "trigger": f.trigger.to_dict(),
        "referenced": f.referenced.to_dict() if f.referenced is not None else None,
        "verbs": f.verbs.sorted_verbs(),
        "verb_evidence": [{"verb": e.verb, "location": _loc(e.location)} for e in f.verbs.evidence],
        "sink": {"kind": f.sink_kind, "location": _loc(f.locations.sink)},
        "source": _loc(f.locations.source),
        "trace": [
            {
                "from": {"function": s.src_function, "place": s.src},
                "to": {"function": s.dst_function, "place": s.dst},
                "location": _loc(s.location),
                "rule": s.rule,
            }
            for s in f.trace
        ],
    }


def finding_from_dict(d: Mapping[str, Any]) -> Finding:
    evidence = tuple(VerbEvidence(_unloc(e["location"]), e["verb"]) for e in d["verb_evidence"])
    verbs = VerbSet(frozenset(d["verbs"]), evidence)
    trace = tuple(
        TraceStep(s["from"]["function"], s["from"]["place"], s["to"]["function"], s["to"]["place"],
                  _unloc(s["location"]), s["rule"])
        for s in d["trace"]
    )
    return Finding(
        id=d["id"],
        finding_class=FindingClass(d["class"]),
        trigger=ResourceTypeInfo.from_dict(d["trigger"]),
        referenced=ResourceTypeInfo.from_dict(d["referenced"]) if d["referenced"] else None,
        verbs=verbs,
        severity=Severity(d["severity"]),
        trace=trace,
        locations=FindingLocations(_unloc(d["source"]), _unloc(d["sink"]["location"]),
                                   tuple(e.location for e in evidence)),
        sink_kind=d["sink"]["kind"],
    )


# -- corpus aggregate ------------------------------------------------------

@dataclass
class CorpusAggregate:
    operators_total: int = 0
    affected_namespaced_only: int = 0
    affected_cluster_only: int = 0
    affected_both: int = 0
    per_referenced_type: Dict[str, Dict[str, int]] = field(default_factory=dict)
    per_verb: Dict[str, Dict[str, int]] = field(default_factory=dict)
    verb_resource_pairs: Dict[str, Dict[str, int]] = field(default_factory=dict)
    builtin_vs_custom: Dict[str, Dict[str, int]] = field(default_factory=dict)
    errors: List[Dict[str, str]] = field(default_factory=list)

    def to_dict(self, with_errors: bool = True) -> Dict[str, Any]:
        d: Dict[str, Any] = {
            "operators_total": self.operators_total,
            "affected_namespaced_only": self.affected_namespaced_only,
            "affected_cluster_only": self.affected_cluster_only,
            "affected_both": self.affected_both,
            "per_referenced_type": self.per_referenced_type,
            "per_verb": self.per_verb,
            "verb_resource_pairs": self.verb_resource_pairs,
            "builtin_vs_custom": self.builtin_vs_custom,
        }
        if with_errors:
            d["errors"] = list(self.errors)
        return d


def _ranked(counts: Mapping[str, int]) -> Dict[str, int]:
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def aggregate_corpus(reports: Sequence[ScanReport], errors: Sequence[Tuple[str, str]] = ()) -> CorpusAggregate:
    """Count operators (not sites) per bucket; one operator = one report.

    Operators that failed to scan are listed in ``errors`` and not counted.
    """
    agg = CorpusAggregate(operators_total=len(reports))
    types: Dict[str, Dict[str, set]] = defaultdict(lambda: defaultdict(set))
    verbs: Dict[str, Dict[str, set]] = defaultdict(lambda: defaultdict(set))
    pairs: Dict[str, Dict[str, set]] = defaultdict(lambda: defaultdict(set))
    cases: Dict[str, Dict[str, set]] = defaultdict(lambda: defaultdict(set))
    for r in reports:
        op = r.corpus_root
        classes = {f.finding_class for f in r.findings}
        a = FindingClass.NAMESPACED in classes
        b = FindingClass.CLUSTER_SCOPED in classes
        agg.affected_namespaced_only += int(a and not b)
        agg.affected_cluster_only += int(b and not a)
        agg.affected_both += int(a and b)
        for f in r.findings:
            ref = f.referenced
            if ref is None:
                continue
            scope = ref.scope.value
            types[scope][ref.kind].add(op)
            cases[f.finding_class.value][ref.origin.value].add((op, ref.identity))
            for v in f.verbs.verbs:
                verbs[scope][v].add(op)
                pairs[scope][f"{v}-{ref.kind}"].add(op)

    def counts(table, order=("Namespaced", "Cluster")):
        return {k: _ranked({n: len(s) for n, s in table[k].items()}) for k in order if k in table}

    agg.per_referenced_type = counts(types)
    agg.per_verb = counts(verbs)
    agg.verb_resource_pairs = counts(pairs)
    agg.builtin_vs_custom = {
        k: {o: len(cases[k][o]) for o in ("BuiltIn", "Custom") if o in cases[k]}
        for k in (FindingClass.NAMESPACED.value, FindingClass.CLUSTER_SCOPED.value) if k in cases
    }
    agg.errors = [{"operator": op, "message": msg} for op, msg in errors]
    return agg


# -- rendering -------------------------------------------------------------

_COLORS = {Severity.CRITICAL: "\x1b[1;31m", Severity.HIGH: "\x1b[31m", Severity.MEDIUM: "\x1b[33m", Severity.LOW: "\x1b[36m"}
_RESET = "\x1b[0m"


def _sev(s: Severity, color: bool) -> str:
    text = s.value.upper()
    return f"{_COLORS[s]}{text}{_RESET}" if color else text


def _ref_label(f: Finding) -> str:
    return f.referenced.kind if f.referenced is not None else "<unattributed>"


def render_text(report: ScanReport, color: bool = False) -> str:
    out = io.StringIO()
    st = report.model_stats
    out.write(f"xns-audit {__version__}  {report.corpus_root}\n")
    out.write(
        f"units={st.get('units', 0)} functions={st.get('functions', 0)} ir={st.get('ir_instructions', 0)} "
        f"parse_errors={st.get('parse_errors', 0)} unresolved={st.get('unresolved_refs', 0)} "
        f"depth_exhausted={st.get('depth_exhausted', 0)}\n"
    )
    out.write("\nResources:\n")
    for r in report.resource_catalog:
        flag = " (list)" if r.is_list else ""
        out.write(f"  {r.kind:<28} {r.origin.value:<8} {r.scope.value:<11} {r.scope_evidence.kind.value}{flag}\n")
    out.write(f"\nFindings: {len(report.findings)}\n")
    for f in report.findings:
        verbs = ",".join(f.verbs.sorted_verbs()) or "-"
        out.write(
            f"  [{_sev(f.severity, color)}] {f.id} {f.finding_class.value}: "
            f"{f.trigger.kind} -> {_ref_label(f)} verbs={verbs} at {f.locations.sink}\n"
        )
        for s in f.trace:
            out.write(f"      {s.location}  {s.src} -> {s.dst}  ({s.rule})\n")
    if report.diagnostics:
        out.write("\nDiagnostics:\n")
        for d in report.diagnostics:
            out.write(f"  {d}\n")
    if report.timing:
        out.write("\nTiming (ms): " + " ".join(f"{k}={v}" for k, v in report.timing.items()) + "\n")
    return out.getvalue()


def _phys(loc: Location) -> Dict[str, Any]:
    return {
        "physicalLocation": {
            "artifactLocation": {"uri": loc.path, "uriBaseId": "SRCROOT"},
            "region": {"startLine": max(loc.line, 1)},
        }
    }


def _sarif_rules() -> List[Dict[str, Any]]:
    rules = []
    for cls in (FindingClass.NAMESPACED, FindingClass.CLUSTER_SCOPED):
        rid, short, full = RULES[cls]
        rules.append({
            "id": rid,
            "name": cls.value,
            "shortDescription": {"text": short},
            "fullDescription": {"text": full},
            "defaultConfiguration": {"level": "error"},
        })
    return rules


def _sarif_run(report: ScanReport) -> Dict[str, Any]:
    rule_index = {FindingClass.NAMESPACED: 0, FindingClass.CLUSTER_SCOPED: 1}
    results = []
    for f in report.findings:
        verbs = ", ".join(f.verbs.sorted_verbs()) or "no verbs"
        msg = (
            f"{f.trigger.kind} ({f.trigger.scope.value}) controls a reference to "
            f"{_ref_label(f)}; verbs: {verbs}; severity {f.severity.value}."
        )
        flow_locs = []
        for s in f.trace:
            loc = _phys(s.location)
            loc["message"] = {"text": f"{s.src} -> {s.dst} ({s.rule})"}
            flow_locs.append({"location": loc})
        if not flow_locs:
            flow_locs.append({"location": _phys(f.locations.sink)})
        results.append({
            "ruleId": RULES[f.finding_class][0],
            "ruleIndex": rule_index[f.finding_class],
            "level": SARIF_LEVEL[f.severity],
            "message": {"text": msg},
            "locations": [_phys(f.locations.sink)],
            "partialFingerprints": {"xnsFindingId/v1": f.id},
            "codeFlows": [{"threadFlows": [{"locations": flow_locs}]}],
            "properties": {
                "severity": f.severity.value,
                "trigger": f.trigger.kind,
                "referenced": _ref_label(f),
                "verbs": f.verbs.sorted_verbs(),
            },
        })
    root = Path(report.corpus_root).resolve().as_uri().rstrip("/") + "/"
    notes = []
    for d in report.diagnostics:
        n: Dict[str, Any] = {"message": {"text": f"[{d.kind.value}] {d.message}"}, "level": "note" if d.level == "info" else "warning"}
        if d.location is not None:
            n["locations"] = [_phys(d.location)]
        notes.append(n)
    return {
        "tool": {"driver": {"name": "xns-audit", "version": __version__, "rules": _sarif_rules()}},
        "originalUriBaseIds": {"SRCROOT": {"uri": root}},
        "invocations": [{"executionSuccessful": True, "toolExecutionNotifications": notes}],
        "results": results,
    }


def render_sarif(reports: Union[ScanReport, Sequence[ScanReport]]) -> Dict[str, Any]:
    if isinstance(reports, ScanReport):
        reports = [reports]
    return {"$schema": SARIF_SCHEMA_URI, "version": "2.1.0", "runs": [_sarif_run(r) for r in reports]}


def render_aggregate_text(agg: CorpusAggregate) -> str:
    out = io.StringIO()
    total = agg.operators_total or 1
    affected = agg.affected_namespaced_only + agg.affected_cluster_only + agg.affected_both
    out.write(f"Operators scanned: {agg.operators_total}\n")
    for label, n in (
        ("Namespaced refs only", agg.affected_namespaced_only),
        ("Cluster-scoped refs only", agg.affected_cluster_only),
        ("Both", agg.affected_both),
        ("Affected total", affected),
    ):
        out.write(f"  {label:<26} {n:>4}  ({100.0 * n / total:.1f}%)\n")
    out.write("\nReferenced resource types (Ref By #Op.):\n")
    for scope, table in agg.per_referenced_type.items():
        for kind, n in table.items():
            out.write(f"  {scope:<11} {kind:<28} {n:>4}\n")
    out.write("\nVerb and resource pairs (Used By #Op.):\n")
    for scope, table in agg.verb_resource_pairs.items():
        for pair, n in table.items():
            out.write(f"  {scope:<11} {pair:<36} {n:>4}\n")
    out.write("\nBuilt-in vs custom referenced types (cases):\n")
    for cls, table in agg.builtin_vs_custom.items():
        out.write(f"  {cls:<26} " + " ".join(f"{k}={v}" for k, v in table.items()) + "\n")
    if agg.errors:
        out.write("\nErrors:\n")
        for e in agg.errors:
            out.write(f"  {e['operator']}: {e['message']}\n")
    return out.getvalue()


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def render(obj: Union[ScanReport, CorpusAggregate], fmt: Union[Format, str], color: bool = False) -> bytes:
    fmt = Format(fmt)
    if isinstance(obj, CorpusAggregate):
        if fmt is Format.TEXT:
            return render_aggregate_text(obj).encode("utf-8")
        if fmt is Format.STRUCTURED:
            return dumps({"schema_version": SCHEMA_VERSION, "aggregate": obj.to_dict()}).encode("utf-8")
        raise RenderError("SARIF output is only defined for scan reports")
    if fmt is Format.TEXT:
        return render_text(obj, color).encode("utf-8")
    if fmt is Format.STRUCTURED:
        return dumps(obj.to_dict()).encode("utf-8")
    return dumps(render_sarif(obj)).encode("utf-8")


def write_output(data: bytes, target: Optional[str]) -> None:
    """Write to ``target`` (a path) or standard output."""
    import sys

    if target is None or target == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    try:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        Path(target).write_bytes(data)
    except OSError as exc:
        raise RenderError(f"cannot write {target}: {exc.strerror}") from None
