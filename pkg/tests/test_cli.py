import json
import shutil

import pytest
import yaml

from xns_audit.cli import main
from xns_audit.fixtures import load_manifest
from xns_audit.knowledge import load_kb

from conftest import FIXTURES, GETTERS, fixture_names, fixture_path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", fixture_names())
def test_exit_code_matrix(capsys, name):
    vulnerable = bool(load_manifest(FIXTURES / name).expected_findings)
    code, out, _ = run(capsys, "scan", str(FIXTURES / name), "--format", "structured")
    assert code == (1 if vulnerable else 0)
    assert bool(json.loads(out)["findings"]) == vulnerable
    code, _, _ = run(capsys, "scan", str(FIXTURES / name), "--fail-on", "none")
    assert code == 0


def test_fail_on_threshold(capsys):
    a1 = str(fixture_path("a1"))
    assert run(capsys, "scan", a1, "--fail-on", "high")[0] == 1
    assert run(capsys, "scan", a1, "--fail-on", "critical")[0] == 0
    assert run(capsys, "scan", str(fixture_path("b1")), "--fail-on", "critical")[0] == 1


def test_missing_path_is_fatal(capsys, tmp_path):
    code, _, err = run(capsys, "scan", str(tmp_path / "nope"))
    assert code == 2 and err
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run(capsys, "scan", str(empty))[0] == 2


def test_bad_kb_is_fatal(capsys, tmp_path):
    kb = tmp_path / "kb.yaml"
    kb.write_text("version: 1\nsetters: [\n")
    code, _, err = run(capsys, "scan", str(fixture_path("a1")), "--kb", str(kb))
    assert code == 2 and "line" in err


def test_kb_from_environment(capsys, tmp_path, monkeypatch):
    kb = tmp_path / "kb.yaml"
    kb.write_text("version: 1\ndisable: [method.setnamespace]\n")
    a3 = str(fixture_path("a3"))
    assert run(capsys, "scan", a3)[0] == 1
    monkeypatch.setenv("XNS_AUDIT_KB", str(kb))
    assert run(capsys, "scan", a3)[0] == 0


def test_jobs_byte_identical(capsys):
    ab1 = str(fixture_path("ab1"))
    outs = {run(capsys, "scan", ab1, "--format", "structured", "--jobs", str(j))[1] for j in (1, 4, 8)}
    assert len(outs) == 1


def test_output_file(capsys, tmp_path):
    out = tmp_path / "r.sarif"
    code, stdout, _ = run(capsys, "scan", str(fixture_path("a1")), "--format", "sarif", "-o", str(out))
    assert code == 1 and stdout == ""
    assert json.loads(out.read_text())["version"] == "2.1.0"


def test_explain(capsys):
    a1 = str(fixture_path("a1"))
    _, out, _ = run(capsys, "scan", a1, "--format", "structured")
    fid = json.loads(out)["findings"][0]["id"]
    code, out, _ = run(capsys, "scan", a1, "--explain", fid)
    assert code == 1
    assert fid in out and "SecretRef" in out and "Get" in out
    assert run(capsys, "scan", a1, "--explain", "XNS-000000000000")[0] == 2


def test_dump_resources(capsys):
    a6 = str(fixture_path("a6"))
    code, out, _ = run(capsys, "dump-resources", a6)
    assert code == 0
    kinds = {r["kind"]: r for r in yaml.safe_load(out)}
    assert kinds["Database"]["origin"] == "Custom" and kinds["Database"]["scope"] == "Namespaced"
    code, out2, _ = run(capsys, "scan", a6, "--dump-resources", "--format", "structured")
    assert code == 0 and json.loads(out2) == yaml.safe_load(out)


def _corpus(tmp_path, names):
    root = tmp_path / "corpus"
    root.mkdir()
    for n in names:
        shutil.copytree(fixture_path(n), root / n)
    return root


def test_corpus_safe_only(capsys, tmp_path):
    root = _corpus(tmp_path, ["s1", "s2"])
    code, out, _ = run(capsys, "corpus", str(root), "--format", "structured")
    agg = json.loads(out)["aggregate"]
    assert code == 0
    assert (agg["operators_total"], agg["affected_namespaced_only"], agg["affected_cluster_only"],
            agg["affected_both"]) == (2, 0, 0, 0)


def test_corpus_skips_empty_operator(capsys, tmp_path):
    root = _corpus(tmp_path, ["a1", "b1"])
    (root / "hollow").mkdir()
    code, out, err = run(capsys, "corpus", str(root), "--format", "structured")
    agg = json.loads(out)["aggregate"]
    assert code == 1
    assert agg["operators_total"] == 2
    assert (agg["affected_namespaced_only"], agg["affected_cluster_only"]) == (1, 1)
    assert agg["errors"] == [{"operator": "hollow", "message": "no Go sources"}]
    assert "hollow" in err


def test_corpus_manifest(capsys, tmp_path):
    root = _corpus(tmp_path, ["a1", "b1", "s1"])
    man = tmp_path / "ops.yaml"
    man.write_text("operators: [a1, s1]\n")
    _, out, _ = run(capsys, "corpus", str(root), "--manifest", str(man), "--format", "structured")
    doc = json.loads(out)
    assert [o["operator"] for o in doc["operators"]] == ["a1", "s1"]
    assert doc["aggregate"]["affected_cluster_only"] == 0


def test_corpus_out_dir(capsys, tmp_path):
    root = _corpus(tmp_path, ["a1", "ab1", "b1", "s1"])
    out = tmp_path / "out"
    run(capsys, "corpus", str(root), "--out-dir", str(out))
    for f in ("aggregate.json", "affected_split.csv", "referenced_types.csv", "verbs.csv",
              "verb_resource_pairs.csv", "builtin_vs_custom.csv", "affected_split.png",
              "referenced_types.png", "verb_resource_pairs.png", "reports/a1.json"):
        assert (out / f).is_file(), f
    rows = (out / "affected_split.csv").read_text().splitlines()
    assert rows == ["bucket,operators", "namespaced_only,1", "cluster_only,1", "both,1", "unaffected,1"]
    first = {p.name: p.read_bytes() for p in out.rglob("*") if p.is_file()}
    run(capsys, "corpus", str(root), "--out-dir", str(out))
    assert {p.name: p.read_bytes() for p in out.rglob("*") if p.is_file()} == first


def test_corpus_sarif_has_one_run_per_operator(capsys, tmp_path):
    root = _corpus(tmp_path, ["a1", "b1"])
    _, out, _ = run(capsys, "corpus", str(root), "--format", "sarif")
    assert len(json.loads(out)["runs"]) == 2


def test_fixtures_command(capsys):
    code, out, _ = run(capsys, "fixtures", "--format", "structured")
    doc = json.loads(out)
    assert code == 0
    for s in doc["scores"].values():
        assert s["precision"] == 1.0 and s["recall"] == 1.0


def test_fixtures_detect_regression(capsys, tmp_path):
    kb = tmp_path / "kb.yaml"
    kb.write_text("version: 1\ndisable: [method.setnamespace]\n")
    code, out, _ = run(capsys, "fixtures", "--kb", str(kb))
    assert code == 1 and "missing" in out


def test_fixtures_empty_dir(capsys, tmp_path):
    assert run(capsys, "fixtures", str(tmp_path))[0] == 2


def test_fixtures_missing_manifest(capsys, tmp_path):
    shutil.copytree(fixture_path("a1"), tmp_path / "a1")
    (tmp_path / "a1" / "manifest.yaml").unlink()
    code, _, err = run(capsys, "fixtures", str(tmp_path))
    assert code == 2 and "manifest" in err


def test_kb_derive(capsys, tmp_path):
    code, out, _ = run(capsys, "kb", "derive", str(GETTERS))
    assert code == 0
    derived = {b["kind"]: b["scope"] for b in yaml.safe_load(out)["builtins"]}
    assert derived["Secret"] == "Namespaced"
    assert derived["Node"] == "Cluster"
    assert derived["ClusterRoleBinding"] == "Cluster"
    default = {b.kind: b.scope.value for b in load_kb().builtins}
    assert all(default[k] == v for k, v in derived.items())
    empty = tmp_path / "nogetters"
    empty.mkdir()
    (empty / "x.go").write_text("package x\n")
    assert run(capsys, "kb", "derive", str(empty))[0] == 2


def test_kb_show_round_trips(capsys):
    code, out, _ = run(capsys, "kb", "show")
    assert code == 0
    assert yaml.safe_load(out)["version"] == 1
