"""Referenced resource type, API verbs and severity for each sink hit."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .knowledge import ClientStyle, KnowledgeBase, Scope, SetterKind, SeverityRules
from .model.ir import (
    Assign,
    Call,
    CallGraph,
    CompositeInit,
    ExternalCallee,
    Location,
    Place,
    PlaceRead,
)
from .model.program import ProgramModel
from .resources import Catalog, EvidenceKind, Origin, ResourceTypeInfo, ScopeEvidence
from .taint import (
    DEFAULT_MAX_DEPTH,
    EMPTY,
    Propagator,
    PropagationStep,
    SinkHit,
    SinkKind,
    TaintState,
    inst_sort_key,
    read_expr,
)


class FindingClass(str, Enum):
    NAMESPACED = "InsecureNamespacedRef"
    CLUSTER_SCOPED = "InsecureClusterScopedRef"


class Severity(str, Enum):
    CRITICAL = "Critical"
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"

    @property
    def rank(self) -> int:
        return {"Critical": 3, "High": 2, "Medium": 1, "Low": 0}[self.value]

    @classmethod
    def parse(cls, text: str) -> "Severity":
        for s in cls:
            if s.value.lower() == text.lower():
                return s
        raise ValueError(f"unknown severity {text!r}")


@dataclass(frozen=True, order=True)
class VerbEvidence:
    location: Location
    verb: str


@dataclass(frozen=True)
class VerbSet:
    verbs: FrozenSet[str] = frozenset()
    evidence: Tuple[VerbEvidence, ...] = ()

    @classmethod
    def of(cls, evidence: Iterable[VerbEvidence]) -> "VerbSet":
        ev = tuple(sorted(set(evidence)))
        return cls(frozenset(e.verb for e in ev), ev)

    def sorted_verbs(self) -> List[str]:
        return sorted(self.verbs)


@dataclass(frozen=True)
class TraceStep:
    src_function: str
    src: str
    dst_function: str
    dst: str
    location: Location
    rule: str


@dataclass(frozen=True)
class FindingLocations:
    source: Location
    sink: Location
    verbs: Tuple[Location, ...] = ()


@dataclass(frozen=True)
class Finding:
    id: str
    finding_class: FindingClass
    trigger: ResourceTypeInfo
    referenced: Optional[ResourceTypeInfo]
    verbs: VerbSet
    severity: Severity
    trace: Tuple[TraceStep, ...]
    locations: FindingLocations
    sink_kind: str = ""  # setter id or "cluster-init"

    @property
    def unattributed(self) -> bool:
        return self.referenced is None

    def sort_key(self):
        return (-self.severity.rank, self.finding_class.value, self.locations.sink, self.id)


def finding_id(cls: FindingClass, trigger: str, referenced: Optional[str], sink: Location) -> str:
    text = f"{cls.value}|{trigger}|{referenced or '?'}|{sink.path}:{sink.line}"
    return "XNS-" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def classify_severity(
    referenced: Optional[ResourceTypeInfo], verbs: VerbSet, rules: SeverityRules = SeverityRules()
) -> Severity:
    if referenced is None or not verbs.verbs:
        return Severity.LOW
    writes = verbs.verbs & set(rules.write_verbs)
    if referenced.kind in rules.critical_kinds and writes:
        return Severity.CRITICAL
    if referenced.kind in rules.sensitive_kinds or writes:
        return Severity.HIGH
    return Severity.MEDIUM


# -- forward tracking ------------------------------------------------------

@dataclass(frozen=True)
class VerbUse:
    verb: str
    location: Location
    style: ClientStyle
    object_type: Optional[ResourceTypeInfo]
    via_object: bool  # tracked value was the object argument (vs. the key or receiver)


@dataclass
class Tracking:
    seeds: List[Tuple[str, Place]]
    state: TaintState
    uses: List[VerbUse] = field(default_factory=list)
    configured: List[ResourceTypeInfo] = field(default_factory=list)


def _display(model: ProgramModel, fid: str, place: Place) -> str:
    fn = model.funcs.get(fid)
    if place.key.startswith("$ret"):
        return ".".join(("return",) + place.fields)
    text = place.render(fn.param_names() if fn else None)
    head, *rest = text.split(".")
    head = head.split("#", 1)[0].lstrip("^")
    return ".".join([head] + rest)


def render_trace(model: ProgramModel, steps: Sequence[PropagationStep]) -> Tuple[TraceStep, ...]:
    return tuple(
        TraceStep(
            s.src[0], _display(model, s.src[0], s.src[1]),
            s.dst[0], _display(model, s.dst[0], s.dst[1]),
            s.via, s.rule.value,
        )
        for s in steps
    )


FILLING_VERBS = frozenset({"Get", "List"})


class ImpactAnalyzer:
    def __init__(
        self,
        model: ProgramModel,
        graph: CallGraph,
        kb: KnowledgeBase,
        catalog: Catalog,
        max_depth: int = DEFAULT_MAX_DEPTH,
    ):
        self.model = model
        self.graph = graph
        self.kb = kb
        self.catalog = catalog
        self.max_depth = max_depth
        self._cache: Dict[Tuple, Tracking] = {}

    # seeds -----------------------------------------------------------------

    def seeds(self, hit: SinkHit) -> List[Tuple[str, Place]]:
        site = hit.site
        instr = self.model.funcs[site.fid].body[site.index]
        out: List[Place] = []
        if site.kind is SinkKind.CLUSTER_SCOPED_INIT:
            if isinstance(instr, CompositeInit):
                out.append(instr.dst)
            elif isinstance(instr, Assign):
                out.append(instr.dst.root)
        elif isinstance(instr, CompositeInit):
            out.append(instr.dst)
        elif isinstance(instr, Assign):
            p = instr.dst.parent()
            if p.fields and p.fields[-1] == "ObjectMeta":
                p = p.parent()
            out.append(p)
        elif isinstance(instr, Call):
            if site.setter is not None and site.setter.kind is SetterKind.METHOD_CALL:
                if isinstance(instr.receiver, PlaceRead):
                    out.append(instr.receiver.place)
            else:
                out.extend(instr.dsts)
        return [(site.fid, p) for p in out]

    def track(self, hit: SinkHit) -> Tracking:
        seeds = self.seeds(hit)
        key = (tuple(seeds), hit.site.key)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        # A Get/List keyed by the tracked value fills its object from the
        # chosen namespace, so that object is tracked too (until no new seeds).
        extra: List[Tuple[str, Place]] = []
        while True:
            prop = Propagator(self.model, self.graph, self.kb, self.max_depth, unbalanced=True)
            for fid, place in (*seeds, *extra):
                prop.seed(fid, [(place, EMPTY)])
            tracking = Tracking(seeds, prop.run())
            fills = self._scan(tracking, typed=hit.site.client_kind is not None)
            fresh = [f for f in fills if f not in extra and f not in seeds]
            if not fresh:
                break
            extra.extend(fresh)
        self._cache[key] = tracking
        return tracking

    def _unified_owner(self, target: ExternalCallee) -> bool:
        if target.is_unknown:
            return True
        return any(target.owner == o or target.owner.startswith(o + ".") or target.owner.startswith(o + "/")
                   for o in self.kb.unified_client_owners)

    def _scan(self, tracking: Tracking, typed: bool) -> List[Tuple[str, Place]]:
        """Record verb uses and configured types; return objects filled by keyed reads."""
        uses: Set[VerbUse] = set()
        fills: Set[Tuple[str, Place]] = set()
        configured: Dict[str, ResourceTypeInfo] = {}
        model = self.model
        for key in sorted(tracking.state.instances, key=inst_sort_key):
            inst = tracking.state.instances[key]
            fn = model.funcs.get(inst.fid)
            if fn is None:
                continue
            for idx, instr in enumerate(fn.body):
                if isinstance(instr, CompositeInit):
                    entry = self.catalog.of_type(model, instr.type_ref)
                    if entry is not None and entry.scope is Scope.NAMESPACED:
                        for fname, value, _loc in instr.inits:
                            if fname in ("ObjectMeta", "Namespace") and read_expr(inst, value):
                                configured[entry.identity] = entry
                    continue
                if isinstance(instr, Assign):
                    if instr.dst.fields and instr.dst.fields[-1] in ("ObjectMeta", "Namespace"):
                        entry = self.catalog.of_type(model, model.type_of(inst.fid, instr.dst.parent()))
                        if entry is not None and entry.scope is Scope.NAMESPACED and read_expr(inst, instr.src):
                            configured[entry.identity] = entry
                    continue
                if not isinstance(instr, Call):
                    continue
                targets = self.graph.callees(inst.fid, idx) or model.resolve_call(inst.fid, instr)
                ext = [t for t in targets if isinstance(t, ExternalCallee)]
                if not ext:
                    continue
                name = instr.callee.name
                if any(self._unified_owner(t) for t in ext):
                    for spec in self.kb.verb_specs(ClientStyle.UNIFIED, name):
                        oi = spec.object_param_index
                        if oi is None or oi >= len(instr.args):
                            continue
                        obj = instr.args[oi]
                        via_obj = bool(read_expr(inst, obj))
                        ki = spec.key_param_index
                        via_key = ki is not None and ki < len(instr.args) and bool(read_expr(inst, instr.args[ki]))
                        if via_key and not via_obj and spec.verb in FILLING_VERBS and isinstance(obj, PlaceRead):
                            fills.add((inst.fid, obj.place))
                        if via_obj or via_key:
                            otype = self.catalog.of_type(model, model.type_of_expr(inst.fid, obj))
                            uses.add(VerbUse(spec.verb, instr.location, ClientStyle.UNIFIED, otype, via_obj))
                if typed and instr.receiver is not None and read_expr(inst, instr.receiver):
                    for spec in self.kb.verb_specs(ClientStyle.TYPED, name):
                        uses.add(VerbUse(spec.verb, instr.location, ClientStyle.TYPED, None, False))
        tracking.uses = sorted(uses, key=lambda u: (u.location, u.verb, u.style.value, u.via_object))
        tracking.configured = [configured[k] for k in sorted(configured)]
        return sorted(fills)

    # spec-level operations ------------------------------------------------

    def _client_entry(self, identity: str) -> Optional[ResourceTypeInfo]:
        entry = self.catalog.get(identity)
        if entry is not None:
            return entry
        b = self.kb.builtin_by_identity(identity)
        if b is None:
            return None
        return ResourceTypeInfo(b.identity, b.kind, Origin.BUILTIN, b.scope, ScopeEvidence(EvidenceKind.BUILTIN_CATALOG))

    def affected_types(self, hit: SinkHit) -> List[ResourceTypeInfo]:
        if hit.sink_kind is SinkKind.CLUSTER_SCOPED_INIT:
            return [hit.site.cluster_type]
        if hit.site.client_kind is not None:
            entry = self._client_entry(hit.site.client_kind)
            return [entry] if entry is not None and entry.scope is Scope.NAMESPACED else []
        tracking = self.track(hit)
        found: Dict[str, ResourceTypeInfo] = {}
        for fid, place in tracking.seeds:
            entry = self.catalog.of_type(self.model, self.model.type_of(fid, place))
            if entry is not None:
                found[entry.identity] = entry
        for entry in tracking.configured:
            found[entry.identity] = entry
        for use in tracking.uses:
            if use.style is ClientStyle.UNIFIED and use.object_type is not None:
                found[use.object_type.identity] = use.object_type
        return [found[k] for k in sorted(found) if found[k].scope is Scope.NAMESPACED]

    def identify_affected_type(self, hit: SinkHit) -> Optional[ResourceTypeInfo]:
        types = self.affected_types(hit)
        return types[0] if types else None

    def identify_verbs(self, hit: SinkHit, affected: Optional[ResourceTypeInfo]) -> VerbSet:
        if affected is None:
            return VerbSet()
        tracking = self.track(hit)
        seed_types = set()
        for fid, place in tracking.seeds:
            entry = self.catalog.of_type(self.model, self.model.type_of(fid, place))
            if entry is not None:
                seed_types.add(entry.identity)
        evidence = []
        for use in tracking.uses:
            if use.style is ClientStyle.TYPED:
                if hit.site.client_kind is not None:
                    evidence.append(VerbEvidence(use.location, use.verb))
                continue
            if hit.sink_kind is SinkKind.CLUSTER_SCOPED_INIT and not use.via_object:
                continue
            if use.object_type is not None:
                if use.object_type.identity == affected.identity:
                    evidence.append(VerbEvidence(use.location, use.verb))
            elif affected.identity in seed_types or hit.sink_kind is SinkKind.CLUSTER_SCOPED_INIT:
                evidence.append(VerbEvidence(use.location, use.verb))
        return VerbSet.of(evidence)

    def findings_for(self, hit: SinkHit) -> List[Finding]:
        cls = FindingClass.CLUSTER_SCOPED if hit.sink_kind is SinkKind.CLUSTER_SCOPED_INIT else FindingClass.NAMESPACED
        referenced: List[Optional[ResourceTypeInfo]] = list(self.affected_types(hit)) or [None]
        trace = render_trace(self.model, hit.trace)
        source = trace[0].location if trace else hit.location
        sink_kind = hit.site.setter.id if hit.site.setter is not None else "cluster-init"
        out = []
        for ref in referenced:
            verbs = self.identify_verbs(hit, ref)
            sev = classify_severity(ref, verbs, self.kb.severity_rules)
            fid = finding_id(cls, hit.trigger.identity, ref.identity if ref else None, hit.location)
            out.append(Finding(
                id=fid,
                finding_class=cls,
                trigger=hit.trigger,
                referenced=ref,
                verbs=verbs,
                severity=sev,
                trace=trace,
                locations=FindingLocations(source, hit.location, tuple(e.location for e in verbs.evidence)),
                sink_kind=sink_kind,
            ))
        return out


def analyze_impact(
    hits: Sequence[SinkHit],
    model: ProgramModel,
    graph: CallGraph,
    kb: KnowledgeBase,
    catalog: Catalog,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> List[Finding]:
    analyzer = ImpactAnalyzer(model, graph, kb, catalog, max_depth)
    merged: Dict[str, Finding] = {}
    for hit in hits:
        for f in analyzer.findings_for(hit):
            cur = merged.get(f.id)
            if cur is None:
                merged[f.id] = f
            else:
                # same (class, trigger, referenced, sink): fold verb evidence together
                verbs = VerbSet.of(cur.verbs.evidence + f.verbs.evidence)
                trace = cur.trace if len(cur.trace) <= len(f.trace) else f.trace
                merged[f.id] = Finding(
                    cur.id, cur.finding_class, cur.trigger, cur.referenced, verbs,
                    classify_severity(cur.referenced, verbs, kb.severity_rules), trace,
                    FindingLocations(cur.locations.source, cur.locations.sink,
                                     tuple(e.location for e in verbs.evidence)),
                    cur.sink_kind,
                )
    return sorted(merged.values(), key=Finding.sort_key)
