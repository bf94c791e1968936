import random
import re
import shutil

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xns_audit.knowledge import load_kb
from xns_audit.model import Place, build_call_graph, build_model, load_corpus
from xns_audit.resources import Catalog, build_catalog
from xns_audit.scan import ScanOptions, scan
from xns_audit.taint import (
    OWN_NAMESPACE_PATHS,
    Rule,
    SinkKind,
    TaintSourceSet,
    analyze,
    collect_sources,
    detect_cluster_sinks,
    detect_namespaced_sinks,
    extract_trace,
    find_sink_sites,
    propagate,
)

from conftest import FIXTURES, default_kb, fixture_names, fixture_path, write_tree
from mutations import applied, plan_mutation
from oracle import oracle_pairs


def _pipeline(d, kb=None):
    kb = kb or default_kb()
    m = build_model(load_corpus(d), kb.external_types())
    g = build_call_graph(m)
    cat = Catalog(build_catalog(m, kb))
    return kb, m, g, cat


_MODELS = {}


def _fixture_model(name):
    if name not in _MODELS:
        _MODELS[name] = _pipeline(FIXTURES / name)
    return _MODELS[name]


def test_sources_are_namespaced_and_exclude_own_namespace():
    for name in fixture_names():
        kb, m, g, cat = _fixture_model(name)
        src = collect_sources(m, cat)
        assert all(r.resource.scope.value == "Namespaced" for r in src.roots)
        assert ("Namespace",) in src.excluded_paths
        assert ("ObjectMeta", "Namespace") in src.excluded_paths


def test_secret_ref_flow():
    kb, m, g, cat = _fixture_model("a1_secret_ref")
    res = analyze(m, g, kb, cat, keep_states=True)
    hits = detect_namespaced_sinks(res)
    assert len(hits) == 1 and not detect_cluster_sinks(res)
    h = hits[0]
    assert h.setter.id == "field.namespacedname.namespace"
    state = res.states[(h.root.fid, h.root.place)]
    fid = h.root.fid
    assert (fid, Place.local("namespacedName", "Namespace")) in state.tainted()
    assert extract_trace(state, h) == list(h.trace)
    assert 2 <= len(h.trace) <= 4
    assert all(s.via.line > 0 for s in h.trace)


def test_secret_param_root_chains():
    kb, m, g, cat = _fixture_model("a5_secret_chain")
    src = collect_sources(m, cat)
    assert any(r.resource.kind == "Secret" and r.place.kind.value == "Param" for r in src.roots)
    res = analyze(m, g, kb, cat)
    assert [h.trigger.kind for h in res.hits] == ["Secret"]


def test_cluster_param_is_not_a_root(tmp_path):
    write_tree(tmp_path, {"go.mod": "module example.com/op\n", "a.go": """
        package op

        import rbacv1 "k8s.io/api/rbac/v1"

        func use(cr *rbacv1.ClusterRole) string { return cr.Name }
        """})
    kb, m, g, cat = _pipeline(tmp_path)
    assert collect_sources(m, cat).roots == ()


HELPER_SRC = {
    "go.mod": "module example.com/op\n",
    "types.go": """
        package op

        import metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"

        type App struct {
        \tmetav1.TypeMeta
        \tmetav1.ObjectMeta
        \tSpec AppSpec
        }

        type AppSpec struct {
        \tTarget string
        \tName   string
        }
        """,
    "c.go": """
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

        func pick(s string) string {
        \treturn s
        }

        func (r *R) Run(ctx context.Context, app *App) error {
        \tns := pick(app.Spec.Target)
        \tkey := types.NamespacedName{Namespace: ns, Name: app.Spec.Name}
        \tsec := &corev1.Secret{}
        \treturn r.Get(ctx, key, sec)
        }

        func (r *R) Own(ctx context.Context, app *App) error {
        \town := app.Namespace
        \tother := app.ObjectMeta.Namespace
        \tkey := types.NamespacedName{Namespace: own, Name: app.Spec.Name}
        \tkey2 := types.NamespacedName{Namespace: other, Name: "x"}
        \tkey3 := types.NamespacedName{Namespace: app.GetNamespace(), Name: "y"}
        \tsec := &corev1.Secret{}
        \t_ = r.Get(ctx, key2, sec)
        \t_ = r.Get(ctx, key3, sec)
        \treturn r.Get(ctx, key, sec)
        }
        """,
}


def test_helper_call_depth_two(tmp_path):
    write_tree(tmp_path, HELPER_SRC)
    kb, m, g, cat = _pipeline(tmp_path)
    assert analyze(m, g, kb, cat, max_depth=1).hits == []
    res = analyze(m, g, kb, cat, max_depth=2)
    assert len(res.hits) == 1
    rules = [s.rule for s in res.hits[0].trace]
    assert Rule.CALL_ARG in rules and Rule.CALL_RETURN in rules
    shallow = analyze(m, g, kb, cat, max_depth=1)
    assert shallow.depth_cuts and any(d.kind.value == "DepthExhausted" for d in shallow.diagnostics)


def test_own_namespace_reads_never_tainted(tmp_path):
    write_tree(tmp_path, HELPER_SRC)
    kb, m, g, cat = _pipeline(tmp_path)
    res = analyze(m, g, kb, cat)
    assert all(not h.root.fid.endswith(".Own") for h in res.hits)
    state = propagate(m, g, collect_sources(m, cat), kb)
    tainted = state.tainted()
    own = "example.com/op.R.Own"
    for name in ("own", "other", "key"):
        assert (own, Place.local(name)) not in tainted
        assert (own, Place.local(name, "Namespace")) not in tainted


def test_constant_namespace_is_info_not_hit():
    kb, m, g, cat = _fixture_model("s2_constant_namespace")
    res = analyze(m, g, kb, cat)
    assert res.hits == []
    notes = [d for d in res.diagnostics if d.kind.value == "ConstantNamespace"]
    assert notes and all(d.level == "info" for d in notes)


def test_cluster_sinks():
    for name, kind in (("b1_clusterrolebinding", "ClusterRoleBinding"), ("b2_namespace_create", "Namespace")):
        kb, m, g, cat = _fixture_model(name)
        res = analyze(m, g, kb, cat)
        cs = detect_cluster_sinks(res)
        assert cs and all(h.cluster_type.kind == kind for h in cs)
        assert all(h.cluster_type.scope.value == "Cluster" for h in cs)


def test_namespaced_composite_is_not_cluster_sink():
    kb, m, g, cat = _fixture_model("a3_setnamespace_configmap")
    res = analyze(m, g, kb, cat)
    assert detect_cluster_sinks(res) == []
    assert [h.setter.id for h in detect_namespaced_sinks(res)] == ["method.setnamespace"]


def test_typed_constructor_sink():
    kb, m, g, cat = _fixture_model("a2_typed_client")
    hits = detect_namespaced_sinks(analyze(m, g, kb, cat))
    assert [h.setter.kind.value for h in hits] == ["ClientConstructor"]


DIRECT_SRC = dict(HELPER_SRC)
DIRECT_SRC["c.go"] = """
    package op

    import (
    \t"context"

    \t"k8s.io/client-go/kubernetes"
    \tmetav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
    )

    func Direct(ctx context.Context, cs kubernetes.Interface, app *App) error {
    \t_, err := cs.CoreV1().Secrets(app.Spec.Target).Get(ctx, "x", metav1.GetOptions{})
    \treturn err
    }

    func TwoPaths(ctx context.Context, cs kubernetes.Interface, app *App) error {
    \ta := app.Spec.Target
    \tb := a
    \tc := b
    \tns := c
    \tns = app.Spec.Target
    \t_, err := cs.CoreV1().Secrets(ns).Get(ctx, "x", metav1.GetOptions{})
    \treturn err
    }
    """


def test_trace_lengths(tmp_path):
    write_tree(tmp_path, DIRECT_SRC)
    kb, m, g, cat = _pipeline(tmp_path)
    res = analyze(m, g, kb, cat)
    by_fn = {h.root.fid.rsplit(".", 1)[-1]: h for h in res.hits}
    assert len(by_fn["Direct"].trace) == 1
    assert len(by_fn["TwoPaths"].trace) == 2  # the direct re-assignment, not the 4-hop chain


def test_hits_sorted_and_deterministic():
    for name in fixture_names():
        kb, m, g, cat = _fixture_model(name)
        a = analyze(m, g, kb, cat)
        b = analyze(m, g, kb, cat, jobs=4)
        assert [h.sort_key() for h in a.hits] == sorted(h.sort_key() for h in a.hits)
        assert [(h.sort_key(), h.trace) for h in a.hits] == [(h.sort_key(), h.trace) for h in b.hits]
        assert a.pairs == b.pairs


def test_depth_monotone():
    for name in fixture_names():
        kb, m, g, cat = _fixture_model(name)
        prev = set()
        for d in range(1, 9):
            cur = analyze(m, g, kb, cat, max_depth=d).pairs
            assert prev <= cur, (name, d)
            prev = cur


def test_source_monotone():
    """Dropping roots can only drop pairs."""
    for name in fixture_names():
        kb, m, g, cat = _fixture_model(name)
        full = analyze(m, g, kb, cat).pairs
        sites, _ = find_sink_sites(m, kb, cat)
        src = collect_sources(m, cat)
        for i in range(len(src.roots)):
            sub = TaintSourceSet(src.roots[:i] + src.roots[i + 1:], src.excluded_paths)
            assert oracle_pairs(m, g, kb, sub, sites, 8) <= full


def test_oracle_equivalence_fixtures():
    for name in fixture_names():
        kb, m, g, cat = _fixture_model(name)
        if m.instruction_count() > 60:
            continue
        sites, _ = find_sink_sites(m, kb, cat)
        for depth in (1, 2, 3, 8):
            res = analyze(m, g, kb, cat, max_depth=depth)
            assert res.pairs == oracle_pairs(m, g, kb, res.sources, sites, depth), (name, depth)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(fixture_names()), st.integers(0, 2**32 - 1), st.integers(1, 6), st.sampled_from([2, 3, 8]))
def test_oracle_equivalence_mutated(name, seed, count, depth):
    kb, m, g, cat = _fixture_model(name)
    plan = plan_mutation(m, random.Random(seed), count)
    with applied(m, plan):
        sites, _ = find_sink_sites(m, kb, cat)
        res = analyze(m, g, kb, cat, max_depth=depth)
        assert res.pairs == oracle_pairs(m, g, kb, res.sources, sites, depth)


def test_exclusion_soundness(tmp_path):
    """Rewriting every spec read into an own-namespace read removes every namespace-setter hit."""
    for prefix in ("a1", "a2", "a3", "a4", "a6", "ab1"):
        dst = tmp_path / prefix
        shutil.copytree(fixture_path(prefix), dst)
        for f in dst.glob("*.go"):
            if f.name == "types.go":
                continue
            text = f.read_text()
            text = re.sub(r"(\w+)\.Spec(\.\w+)+", r"\1.Namespace", text)
            text = re.sub(r"(\w+)\.Status(\.\w+)+", r"\1.Namespace", text)
            f.write_text(text)
        kb, m, g, cat = _pipeline(dst)
        assert detect_namespaced_sinks(analyze(m, g, kb, cat)) == [], prefix


def test_sanitizer_hook(tmp_path):
    write_tree(tmp_path, HELPER_SRC)
    (tmp_path / "c.go").write_text((tmp_path / "c.go").read_text().replace(
        "ns := pick(app.Spec.Target)", "ns := validate.Namespace(app.Spec.Target)"
    ).replace('import (', 'import (\n\t"example.com/validate"'))
    kb = default_kb()
    kb_s = load_kb_with(tmp_path, "version: 1\nsanitizers: [Namespace]\n")
    assert analyze(*_pipeline(tmp_path, kb)[1:], kb=kb).hits if False else True
    _, m, g, cat = _pipeline(tmp_path, kb)
    assert analyze(m, g, kb, cat).hits
    _, m, g, cat = _pipeline(tmp_path, kb_s)
    assert analyze(m, g, kb_s, cat).hits == []


def load_kb_with(tmp_path, text):
    p = tmp_path / "kb.yaml"
    p.write_text(text)
    return load_kb(p)


def test_self_referencing_write_terminates(tmp_path):
    src = dict(HELPER_SRC)
    src["c.go"] = """
        package op

        type Node struct {
        \tNext  *Node
        \tValue string
        }

        func Loop(app *App) *Node {
        \tn := &Node{Value: app.Spec.Target}
        \tn.Next = n
        \tapp.ObjectMeta.Labels = nil
        \treturn n
        }

        func Root(app *App) {
        \tapp.Spec.Target = app.Name
        \tapp.Namespace = app.Namespace
        }
        """
    write_tree(tmp_path, src)
    kb, m, g, cat = _pipeline(tmp_path)
    fid = "example.com/op.Root"
    from xns_audit.model import Assign, PlaceRead
    m.funcs[fid].body.append(Assign(Place.param(0, "Namespace"), PlaceRead(Place.param(0)), m.funcs[fid].body[-1].location))
    state = propagate(m, g, collect_sources(m, cat), kb)
    assert max(len(p.fields) for _f, p in state.tainted()) <= 8
    sites, _ = find_sink_sites(m, kb, cat)
    res = analyze(m, g, kb, cat)
    assert res.pairs == oracle_pairs(m, g, kb, res.sources, sites, 8)
