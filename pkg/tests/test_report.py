import json

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xns_audit.impact import Finding, FindingClass, FindingLocations, Severity, TraceStep, VerbEvidence, VerbSet, finding_id
from xns_audit.knowledge import Scope
from xns_audit.model import Location
from xns_audit.report import (
    RenderError,
    ScanReport,
    aggregate_corpus,
    build_report,
    render,
    render_sarif,
    write_output,
)
from xns_audit.resources import EvidenceKind, Origin, ResourceTypeInfo, ScopeEvidence

from conftest import SARIF_SCHEMA, artifacts, fixture_names

SCHEMA = json.loads(SARIF_SCHEMA.read_text())
APP = ResourceTypeInfo("x.App", "App", Origin.CUSTOM, Scope.NAMESPACED, ScopeEvidence(EvidenceKind.DEFAULT),
                       Location("t.go", 3))


def _ref(kind, scope="Namespaced", origin="BuiltIn"):
    ev = ScopeEvidence(EvidenceKind.BUILTIN_CATALOG) if origin == "BuiltIn" else ScopeEvidence(EvidenceKind.DEFAULT)
    return ResourceTypeInfo(f"x.{kind}", kind, Origin(origin), Scope(scope), ev, None)


def _finding(cls, ref, verbs, line=10, sev=Severity.HIGH):
    loc = Location("c.go", line)
    ev = tuple(VerbEvidence(Location("c.go", line + 1 + i), v) for i, v in enumerate(verbs))
    return Finding(
        id=finding_id(cls, APP.identity, ref.identity if ref else None, loc),
        finding_class=cls, trigger=APP, referenced=ref, verbs=VerbSet.of(ev), severity=sev,
        trace=(TraceStep("f", "app.Spec.X", "f", "k.Namespace", loc, "Assign"),),
        locations=FindingLocations(loc, loc, tuple(e.location for e in ev)),
    )


def _report(name, findings):
    return build_report(name, [APP], findings, {"units": 1})


A = FindingClass.NAMESPACED
B = FindingClass.CLUSTER_SCOPED


def test_report_examples():
    a1 = artifacts("a1").report
    assert [f.finding_class for f in a1.findings] == [A]
    s1 = artifacts("s1").report
    assert s1.findings == [] and s1.resource_catalog
    ab = artifacts("ab1").report
    assert [f.severity for f in ab.findings] == [Severity.CRITICAL, Severity.HIGH]


def test_findings_sorted():
    fs = [
        _finding(A, _ref("ConfigMap"), ["Get"], 30, Severity.MEDIUM),
        _finding(B, _ref("Namespace", "Cluster"), ["Create"], 20, Severity.HIGH),
        _finding(A, _ref("Secret"), ["Get"], 40, Severity.HIGH),
        _finding(B, _ref("ClusterRole", "Cluster"), ["Create"], 50, Severity.CRITICAL),
    ]
    r = _report("op", fs)
    assert [(f.severity, f.finding_class, f.locations.sink.line) for f in r.findings] == [
        (Severity.CRITICAL, B, 50), (Severity.HIGH, B, 20), (Severity.HIGH, A, 40), (Severity.MEDIUM, A, 30),
    ]


def test_aggregate_three_way_split():
    reps = [
        _report("a", [_finding(A, _ref("Secret"), ["Get"])]),
        _report("b", [_finding(B, _ref("Namespace", "Cluster"), ["Create"])]),
        _report("c", [_finding(A, _ref("Secret"), ["Get"]), _finding(B, _ref("ClusterRole", "Cluster"), ["Create"])]),
    ]
    agg = aggregate_corpus(reps)
    assert (agg.affected_namespaced_only, agg.affected_cluster_only, agg.affected_both) == (1, 1, 1)
    assert agg.operators_total == 3


def test_aggregate_dedups_per_operator():
    reps = [
        _report("a", [_finding(A, _ref("Secret"), ["Get"], 10), _finding(A, _ref("Secret"), ["Get"], 20)]),
        _report("b", [_finding(A, _ref("Secret"), ["Get"])]),
    ]
    agg = aggregate_corpus(reps)
    assert agg.per_referenced_type == {"Namespaced": {"Secret": 2}}
    assert agg.verb_resource_pairs == {"Namespaced": {"Get-Secret": 2}}
    assert agg.per_verb == {"Namespaced": {"Get": 2}}
    assert agg.builtin_vs_custom == {"InsecureNamespacedRef": {"BuiltIn": 2}}


def test_aggregate_safe_corpus_and_errors():
    agg = aggregate_corpus([_report("a", []), _report("b", [])], errors=[("c", "no Go sources")])
    assert (agg.affected_namespaced_only, agg.affected_cluster_only, agg.affected_both) == (0, 0, 0)
    assert agg.operators_total == 2
    assert agg.errors == [{"operator": "c", "message": "no Go sources"}]


KINDS = ["Secret", "ConfigMap", "Database", "Namespace", "ClusterRole"]


@st.composite
def corpora(draw):
    reports = []
    for i in range(draw(st.integers(1, 6))):
        fs = []
        for j in range(draw(st.integers(0, 4))):
            kind = draw(st.sampled_from(KINDS))
            scope = "Cluster" if kind in ("Namespace", "ClusterRole") else "Namespaced"
            cls = B if scope == "Cluster" else A
            verbs = draw(st.lists(st.sampled_from(["Get", "List", "Create", "Update"]), min_size=1, max_size=3, unique=True))
            fs.append(_finding(cls, _ref(kind, scope, draw(st.sampled_from(["BuiltIn", "Custom"]))), verbs, 10 + j))
        reports.append(_report(f"op{i}", fs))
    return reports


@settings(max_examples=100, deadline=None)
@given(corpora())
def test_aggregate_invariants(reports):
    agg = aggregate_corpus(reports)
    assert agg.affected_namespaced_only + agg.affected_cluster_only + agg.affected_both <= agg.operators_total
    for table in agg.per_referenced_type.values():
        assert all(n <= agg.operators_total for n in table.values())
    for scope, pairs in agg.verb_resource_pairs.items():
        kinds = len(agg.per_referenced_type.get(scope, {}))
        by_verb = {}
        for pair, n in pairs.items():
            verb = pair.split("-", 1)[0]
            by_verb[verb] = by_verb.get(verb, 0) + n
            assert n <= agg.per_verb[scope][verb]
        for verb, total in by_verb.items():
            assert total <= agg.per_verb[scope][verb] * kinds
    # merge is order independent
    assert aggregate_corpus(list(reversed(reports))).to_dict() == agg.to_dict()


def test_structured_round_trip_and_stability():
    for name in fixture_names():
        r = artifacts(name.split("_")[0]).report
        doc = json.loads(render(r, "structured"))
        assert doc["schema_version"] == "1"
        again = ScanReport.from_dict(doc)
        assert again == r
        assert render(again, "structured") == render(r, "structured")


def test_empty_report_structured():
    doc = json.loads(render(_report("op", []), "structured"))
    assert doc["findings"] == []


def test_unsupported_schema_version():
    doc = json.loads(render(_report("op", []), "structured"))
    doc["schema_version"] = "99"
    with pytest.raises(ValueError):
        ScanReport.from_dict(doc)


def test_sarif_secret_ref():
    art = artifacts("a1")
    sarif = render_sarif(art.report)
    jsonschema.validate(sarif, SCHEMA)
    results = sarif["runs"][0]["results"]
    assert len(results) == 1
    res = results[0]
    assert res["ruleId"] == "xns/insecure-namespaced-ref" and res["level"] == "error"
    flow = res["codeFlows"][0]["threadFlows"][0]["locations"]
    want = [(s.location.path, s.location.line) for s in art.findings[0].trace]
    got = [(x["location"]["physicalLocation"]["artifactLocation"]["uri"],
            x["location"]["physicalLocation"]["region"]["startLine"]) for x in flow]
    assert got == want


def test_sarif_levels_and_rules():
    fs = [
        _finding(B, _ref("ClusterRole", "Cluster"), ["Create"], 10, Severity.CRITICAL),
        _finding(A, _ref("ConfigMap"), ["Get"], 20, Severity.MEDIUM),
        _finding(A, None, [], 30, Severity.LOW),
    ]
    sarif = render_sarif(_report("op", fs))
    jsonschema.validate(sarif, SCHEMA)
    rules = [r["id"] for r in sarif["runs"][0]["tool"]["driver"]["rules"]]
    assert rules == ["xns/insecure-namespaced-ref", "xns/insecure-cluster-scoped-ref"]
    assert [r["level"] for r in sarif["runs"][0]["results"]] == ["error", "warning", "note"]


def test_render_twice_identical():
    r = artifacts("ab1").report
    for fmt in ("text", "structured", "sarif"):
        assert render(r, fmt) == render(r, fmt)


def test_text_has_no_color_by_default():
    out = render(artifacts("a1").report, "text")
    assert b"\x1b[" not in out
    assert b"\x1b[" in render(artifacts("a1").report, "text", color=True)


def test_aggregate_sarif_is_a_render_error():
    with pytest.raises(RenderError):
        render(aggregate_corpus([_report("a", [])]), "sarif")


def test_unwritable_target(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(RenderError):
        write_output(b"data", str(blocker / "sub" / "out.json"))
    ok = tmp_path / "out" / "r.json"
    write_output(b"data", str(ok))
    assert ok.read_bytes() == b"data"
