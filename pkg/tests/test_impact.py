from hypothesis import given, settings
from hypothesis import strategies as st

from xns_audit.impact import (
    FindingClass,
    ImpactAnalyzer,
    Severity,
    VerbEvidence,
    VerbSet,
    analyze_impact,
    classify_severity,
    finding_id,
)
from xns_audit.knowledge import VERBS, ClientStyle, SeverityRules
from xns_audit.model import Call, Location, build_call_graph, build_model, load_corpus
from xns_audit.resources import Catalog, EvidenceKind, Origin, ResourceTypeInfo, ScopeEvidence, build_catalog
from xns_audit.knowledge import Scope
from xns_audit.taint import analyze

from conftest import FIXTURES, artifacts, default_kb, fixture_names, write_tree
from test_taint import HELPER_SRC

LOC = Location("c.go", 1)


def _run(d):
    kb = default_kb()
    m = build_model(load_corpus(d), kb.external_types())
    g = build_call_graph(m)
    cat = Catalog(build_catalog(m, kb))
    res = analyze(m, g, kb, cat)
    return kb, m, g, cat, res


def _info(kind, scope="Namespaced", origin="BuiltIn"):
    ev = ScopeEvidence(EvidenceKind.BUILTIN_CATALOG if origin == "BuiltIn" else EvidenceKind.DEFAULT)
    return ResourceTypeInfo(f"example.com/x.{kind}", kind, Origin(origin), Scope(scope), ev, None)


def _verbs(*names):
    return VerbSet.of(VerbEvidence(Location("c.go", i + 1), v) for i, v in enumerate(names))


def test_affected_type_and_verbs_secret_ref():
    kb, m, g, cat, res = _run(FIXTURES / "a1_secret_ref")
    ia = ImpactAnalyzer(m, g, kb, cat)
    hit = res.hits[0]
    ref = ia.identify_affected_type(hit)
    assert ref.kind == "Secret"
    vs = ia.identify_verbs(hit, ref)
    assert vs.sorted_verbs() == ["Get"]
    assert [e.location.line for e in vs.evidence] == [31]


def test_affected_type_cluster_init():
    kb, m, g, cat, res = _run(FIXTURES / "b1_clusterrolebinding")
    ia = ImpactAnalyzer(m, g, kb, cat)
    assert {ia.identify_affected_type(h).kind for h in res.hits} == {"ClusterRoleBinding"}
    assert {v for h in res.hits for v in ia.identify_verbs(h, ia.identify_affected_type(h)).verbs} == {"Create"}


def test_affected_type_typed_ctor():
    kb, m, g, cat, res = _run(FIXTURES / "a2_typed_client")
    ia = ImpactAnalyzer(m, g, kb, cat)
    hit = res.hits[0]
    assert hit.site.client_kind is not None
    assert ia.identify_affected_type(hit).kind == "Secret"


def test_key_never_used_is_kept_low(tmp_path):
    src = dict(HELPER_SRC)
    src["c.go"] = """
        package op

        import "k8s.io/apimachinery/pkg/types"

        func Build(app *App) types.NamespacedName {
        \tkey := types.NamespacedName{Namespace: app.Spec.Target, Name: "x"}
        \t_ = key
        \treturn types.NamespacedName{}
        }
        """
    write_tree(tmp_path, src)
    kb, m, g, cat, res = _run(tmp_path)
    fs = analyze_impact(res.hits, m, g, kb, cat)
    assert len(fs) == 1
    f = fs[0]
    assert f.referenced is None and f.unattributed
    assert f.verbs.verbs == frozenset() and f.verbs.evidence == ()
    assert f.severity is Severity.LOW


def test_multi_verb_merge(tmp_path):
    src = dict(HELPER_SRC)
    src["c.go"] = """
        package op

        import (
        \t"context"

        \tcorev1 "k8s.io/api/core/v1"
        \t"k8s.io/apimachinery/pkg/types"
        \t"sigs.k8s.io/controller-runtime/pkg/client"
        )

        type R struct {
        \tclient.Client
        }

        func (r *R) Run(ctx context.Context, app *App) error {
        \tkey := types.NamespacedName{Namespace: app.Spec.Target, Name: app.Spec.Name}
        \tcm := &corev1.ConfigMap{}
        \tif err := r.Get(ctx, key, cm); err != nil {
        \t\treturn err
        \t}
        \treturn r.Update(ctx, cm)
        }
        """
    write_tree(tmp_path, src)
    kb, m, g, cat, res = _run(tmp_path)
    fs = analyze_impact(res.hits, m, g, kb, cat)
    assert len(fs) == 1
    assert fs[0].verbs.sorted_verbs() == ["Get", "Update"]
    assert len(fs[0].verbs.evidence) == 2
    assert fs[0].severity is Severity.HIGH


def test_severity_examples():
    assert classify_severity(_info("ClusterRoleBinding", "Cluster"), _verbs("Create")) is Severity.CRITICAL
    assert classify_severity(_info("Secret"), _verbs("Get")) is Severity.HIGH
    assert classify_severity(_info("ConfigMap"), VerbSet.of([])) is Severity.LOW
    assert classify_severity(_info("ConfigMap"), _verbs("Get", "List")) is Severity.MEDIUM
    assert classify_severity(_info("ConfigMap"), _verbs("Get", "Patch")) is Severity.HIGH
    assert classify_severity(None, _verbs("Delete")) is Severity.LOW


def test_severity_rules_override():
    rules = SeverityRules(critical_kinds=("Namespace",), sensitive_kinds=("ConfigMap",))
    assert classify_severity(_info("Namespace", "Cluster"), _verbs("Create"), rules) is Severity.CRITICAL
    assert classify_severity(_info("ConfigMap"), _verbs("Get"), rules) is Severity.HIGH


WRITE = ("Create", "Update", "Patch", "Delete", "Apply")


@settings(max_examples=200, deadline=None)
@given(
    st.sampled_from(["Secret", "ConfigMap", "ClusterRole", "ClusterRoleBinding", "Namespace", "Widget"]),
    st.lists(st.sampled_from(VERBS), max_size=4),
    st.sampled_from(WRITE),
    st.booleans(),
)
def test_severity_monotone_in_write_verbs(kind, verbs, extra, attributed):
    ref = _info(kind) if attributed else None
    before = classify_severity(ref, _verbs(*verbs))
    after = classify_severity(ref, _verbs(*verbs, extra))
    assert after.rank >= before.rank


def test_finding_id_is_stable_and_distinct():
    a = finding_id(FindingClass.NAMESPACED, "x.App", "x.Secret", LOC)
    assert a == finding_id(FindingClass.NAMESPACED, "x.App", "x.Secret", LOC)
    assert a.startswith("XNS-") and len(a) == 16
    assert a != finding_id(FindingClass.NAMESPACED, "x.App", None, LOC)
    assert a != finding_id(FindingClass.CLUSTER_SCOPED, "x.App", "x.Secret", LOC)
    assert a != finding_id(FindingClass.NAMESPACED, "x.App", "x.Secret", Location("c.go", 2))


def test_finding_invariants_on_fixtures():
    kb = default_kb()
    for name in fixture_names():
        art = artifacts(name.split("_")[0])
        for f in art.findings:
            assert f.trigger.scope is Scope.NAMESPACED
            if f.referenced is not None:
                want = Scope.NAMESPACED if f.finding_class is FindingClass.NAMESPACED else Scope.CLUSTER
                assert f.referenced.scope is want, (name, f.id)
            assert bool(f.verbs.verbs) == bool(f.verbs.evidence)
            assert {e.verb for e in f.verbs.evidence} == set(f.verbs.verbs)
            for e in f.verbs.evidence:
                calls = [
                    i for fn in art.model.funcs.values() for i in fn.body
                    if isinstance(i, Call) and i.location == e.location
                ]
                specs = [
                    v for c in calls for style in ClientStyle
                    for v in kb.verb_specs(style, c.callee.name) if v.verb == e.verb
                ]
                assert specs, (name, e)
            assert f.trace and f.trace[-1].location == f.locations.sink or f.finding_class is FindingClass.CLUSTER_SCOPED


def test_ids_stable_across_runs():
    from xns_audit.scan import ScanOptions, scan

    for name in ("a1_secret_ref", "ab1_both_classes", "b3_clusterrole_rules"):
        ids = {tuple(f.id for f in scan(FIXTURES / name, ScanOptions(kb=default_kb())).findings) for _ in range(3)}
        assert len(ids) == 1
