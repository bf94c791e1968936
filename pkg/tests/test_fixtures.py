import pytest

from xns_audit.fixtures import (
    ClassScore,
    ManifestInvalid,
    ManifestMissing,
    enumerate_fixtures,
    evaluate_fixtures,
    load_manifest,
)

from conftest import FIXTURES, fixture_path, write_tree


def test_corpus_shape():
    fx = enumerate_fixtures()
    assert len(fx) >= 12
    a = [f for f in fx if f.name.startswith("a") and not f.name.startswith("ab")]
    b = [f for f in fx if f.name.startswith("b")]
    both = [f for f in fx if f.name.startswith("ab")]
    safe = [f for f in fx if not f.manifest.expected_findings]
    assert len(a) >= 4 and len(b) >= 3 and len(both) >= 1 and len(safe) >= 3
    for f in safe:
        assert f.manifest.expected_findings == ()
    for f in both:
        classes = {e.finding_class for e in f.manifest.expected_findings}
        assert classes == {"InsecureNamespacedRef", "InsecureClusterScopedRef"}
    ids = [f.manifest.fixture_id for f in fx]
    assert len(set(ids)) == len(ids)


def test_every_manifest_is_met():
    ev = evaluate_fixtures(FIXTURES)
    assert ev.perfect, [r.name for r in ev.results if not r.ok]
    assert ev.scores["InsecureNamespacedRef"].tp >= 4
    assert ev.scores["InsecureClusterScopedRef"].tp >= 3


def test_class_score_edges():
    assert ClassScore().precision == 1.0 and ClassScore().recall == 1.0
    s = ClassScore(tp=3, fp=1, fn=2)
    assert s.precision == 0.75 and s.recall == 0.6


def _copy_with_manifest(tmp_path, text):
    src = fixture_path("a1")
    dst = tmp_path / "a1"
    write_tree(dst, {p.name: p.read_text() for p in src.iterdir() if p.suffix == ".go"})
    (dst / "manifest.yaml").write_text(text)
    return dst


def test_manifest_missing(tmp_path):
    (tmp_path / "x").mkdir()
    with pytest.raises(ManifestMissing):
        load_manifest(tmp_path / "x")


@pytest.mark.parametrize("body, needle", [
    ("fixture_id: A1\nexpected_findings: []\n", "expected_resources"),
    ("fixture_id: A1\nexpected_findings: [\n", "YAML"),
    ("fixture_id: A1\nexpected_resources: []\nexpected_findings:\n"
     "- {class: Bogus, trigger: App, referenced: null, verbs: [], file: controller.go, sink_line: 1}\n", "class"),
    ("fixture_id: A1\nexpected_resources: []\nexpected_findings:\n"
     "- {class: InsecureNamespacedRef, trigger: App, referenced: Secret, verbs: [Get], file: controller.go, "
     "sink_line: 99999}\n", "not a source line"),
    ("fixture_id: A1\nexpected_resources: []\nexpected_findings:\n"
     "- {class: InsecureNamespacedRef, trigger: App, referenced: Secret, verbs: [Get], file: nope.go, "
     "sink_line: 1}\n", "does not exist"),
])
def test_manifest_invalid(tmp_path, body, needle):
    d = _copy_with_manifest(tmp_path, body)
    with pytest.raises(ManifestInvalid) as exc:
        load_manifest(d)
    assert needle in str(exc.value)
