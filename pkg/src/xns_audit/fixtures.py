"""Labelled fixture corpus: manifests, enumeration and precision/recall scoring."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple

import jsonschema
import yaml

from .impact import Finding, FindingClass
from .knowledge import KnowledgeBase, load_kb
from .report import ScanReport
from .scan import ScanOptions, scan

MANIFEST_NAME = "manifest.yaml"
CLASSES = (FindingClass.NAMESPACED.value, FindingClass.CLUSTER_SCOPED.value)

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["fixture_id", "expected_findings", "expected_resources"],
    "additionalProperties": False,
    "properties": {
        "fixture_id": {"type": "string", "minLength": 1},
        "notes": {"type": "string"},
        "expected_findings": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["class", "trigger", "referenced", "verbs", "file", "sink_line"],
                "additionalProperties": False,
                "properties": {
                    "class": {"enum": list(CLASSES)},
                    "trigger": {"type": "string"},
                    "referenced": {"type": ["string", "null"]},
                    "verbs": {"type": "array", "items": {"type": "string"}},
                    "file": {"type": "string"},
                    "sink_line": {"type": "integer", "minimum": 1},
                },
            },
        },
        "expected_resources": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "origin", "scope"],
                "additionalProperties": False,
                "properties": {
                    "kind": {"type": "string"},
                    "origin": {"enum": ["Custom", "BuiltIn"]},
                    "scope": {"enum": ["Namespaced", "Cluster"]},
                },
            },
        },
    },
}


class ManifestMissing(Exception):
    def __init__(self, fixture: str):
        super().__init__(f"{fixture}: no {MANIFEST_NAME}")
        self.fixture = fixture


class ManifestInvalid(Exception):
    def __init__(self, fixture: str, message: str):
        super().__init__(f"{fixture}: {message}")
        self.fixture = fixture
        self.message = message


# (class, trigger kind, referenced kind, verbs, file, sink line)
FindingKey = Tuple[str, str, Optional[str], Tuple[str, ...], str, int]
ResourceKey = Tuple[str, str, str]


@dataclass(frozen=True)
class ExpectedFinding:
    finding_class: str
    trigger: str
    referenced: Optional[str]
    verbs: Tuple[str, ...]
    file: str
    sink_line: int

    @property
    def key(self) -> FindingKey:
        return (self.finding_class, self.trigger, self.referenced, self.verbs, self.file, self.sink_line)


@dataclass(frozen=True)
class FixtureManifest:
    fixture_id: str
    expected_findings: Tuple[ExpectedFinding, ...]
    expected_resources: Tuple[ResourceKey, ...]
    notes: str = ""


@dataclass
class Fixture:
    name: str
    path: Path
    manifest: FixtureManifest


def default_fixture_dir() -> Path:
    return Path(str(importlib_resources.files("xns_audit") / "data" / "fixtures"))


def load_manifest(fixture_dir: Path) -> FixtureManifest:
    name = fixture_dir.name
    path = fixture_dir / MANIFEST_NAME
    if not path.is_file():
        raise ManifestMissing(name)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ManifestInvalid(name, f"YAML error: {exc}") from None
    try:
        jsonschema.validate(raw, MANIFEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ManifestInvalid(name, f"{where}: {exc.message}") from None
    findings = []
    for e in raw["expected_findings"]:
        src = fixture_dir / e["file"]
        if not src.is_file():
            raise ManifestInvalid(name, f"{e['file']} does not exist")
        lines = src.read_text(encoding="utf-8", errors="replace").splitlines()
        if e["sink_line"] > len(lines) or not lines[e["sink_line"] - 1].strip():
            raise ManifestInvalid(name, f"{e['file']}:{e['sink_line']} is not a source line")
        findings.append(ExpectedFinding(
            e["class"], e["trigger"], e["referenced"], tuple(sorted(e["verbs"])), e["file"], e["sink_line"],
        ))
    resources = tuple(sorted((r["kind"], r["origin"], r["scope"]) for r in raw["expected_resources"]))
    return FixtureManifest(raw["fixture_id"], tuple(findings), resources, raw.get("notes", "") or "")


def enumerate_fixtures(root: Optional[Path] = None) -> List[Fixture]:
    """Every immediate subdirectory of ``root`` is a fixture and must carry a manifest."""
    root = Path(root) if root is not None else default_fixture_dir()
    if not root.is_dir():
        raise FileNotFoundError(str(root))
    return [Fixture(d.name, d, load_manifest(d)) for d in sorted(root.iterdir()) if d.is_dir()]


def finding_key(f: Finding) -> FindingKey:
    ref = f.referenced.kind if f.referenced is not None else None
    return (f.finding_class.value, f.trigger.kind, ref, tuple(f.verbs.sorted_verbs()),
            f.locations.sink.path, f.locations.sink.line)


def resource_keys(report: ScanReport) -> Tuple[ResourceKey, ...]:
    return tuple(sorted((r.kind, r.origin.value, r.scope.value) for r in report.resource_catalog))


@dataclass
class FixtureResult:
    name: str
    fixture_id: str
    true_positives: List[FindingKey] = field(default_factory=list)
    false_positives: List[FindingKey] = field(default_factory=list)
    false_negatives: List[FindingKey] = field(default_factory=list)
    resources_ok: bool = True
    resource_diff: Tuple[Tuple[ResourceKey, ...], Tuple[ResourceKey, ...]] = ((), ())
    report: Optional[ScanReport] = None

    @property
    def ok(self) -> bool:
        return self.resources_ok and not self.false_positives and not self.false_negatives


@dataclass
class ClassScore:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0


@dataclass
class FixtureEvaluation:
    results: List[FixtureResult]
    scores: Dict[str, ClassScore]
    elapsed: float

    @property
    def perfect(self) -> bool:
        return all(s.precision == 1.0 and s.recall == 1.0 for s in self.scores.values()) and all(
            r.resources_ok for r in self.results
        )


def score_fixture(fx: Fixture, report: ScanReport) -> FixtureResult:
    got = [finding_key(f) for f in report.findings]
    want = [e.key for e in fx.manifest.expected_findings]
    remaining = list(want)
    res = FixtureResult(fx.name, fx.manifest.fixture_id, report=report)
    for k in got:
        if k in remaining:
            remaining.remove(k)
            res.true_positives.append(k)
        else:
            res.false_positives.append(k)
    res.false_negatives = remaining
    have = resource_keys(report)
    exp = fx.manifest.expected_resources
    res.resources_ok = have == exp
    if not res.resources_ok:
        res.resource_diff = (tuple(k for k in have if k not in exp), tuple(k for k in exp if k not in have))
    return res


def evaluate_fixtures(
    root: Optional[Path] = None,
    kb: Optional[KnowledgeBase] = None,
    max_depth: int = 8,
    jobs: int = 1,
) -> FixtureEvaluation:
    start = time.perf_counter()
    fixtures = enumerate_fixtures(root)
    if not fixtures:
        raise FileNotFoundError(f"no fixtures under {root}")
    kb = kb or load_kb()
    opts = ScanOptions(kb=kb, max_depth=max_depth)

    def run(fx: Fixture) -> FixtureResult:
        return score_fixture(fx, scan(fx.path, opts))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, fixtures))
    else:
        results = [run(fx) for fx in fixtures]
    scores = {c: ClassScore() for c in CLASSES}
    for r in results:
        for k in r.true_positives:
            scores[k[0]].tp += 1
        for k in r.false_positives:
            scores[k[0]].fp += 1
        for k in r.false_negatives:
            scores[k[0]].fn += 1
    return FixtureEvaluation(results, scores, time.perf_counter() - start)


def render_evaluation(ev: FixtureEvaluation) -> str:
    lines = [f"{'fixture':<30} {'id':<5} {'tp':>3} {'fp':>3} {'fn':>3}  resources"]
    for r in ev.results:
        lines.append(
            f"{r.name:<30} {r.fixture_id:<5} {len(r.true_positives):>3} {len(r.false_positives):>3} "
            f"{len(r.false_negatives):>3}  {'ok' if r.resources_ok else 'MISMATCH'}"
        )
        for k in r.false_positives:
            lines.append(f"    unexpected: {k}")
        for k in r.false_negatives:
            lines.append(f"    missing:    {k}")
        if not r.resources_ok:
            extra, missing = r.resource_diff
            lines.append(f"    resources extra={list(extra)} missing={list(missing)}")
    lines.append("")
    lines.append(f"{'class':<26} {'tp':>3} {'fp':>3} {'fn':>3} {'precision':>9} {'recall':>7}")
    for c, s in ev.scores.items():
        lines.append(f"{c:<26} {s.tp:>3} {s.fp:>3} {s.fn:>3} {s.precision:>9.3f} {s.recall:>7.3f}")
    lines.append(f"elapsed {ev.elapsed:.2f}s")
    return "\n".join(lines) + "\n"
