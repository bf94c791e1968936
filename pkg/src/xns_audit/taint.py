"""Interprocedural, field-sensitive taint tracking with witness traces.

A fact ``(place, excl)`` says the value stored at ``place`` is tainted in
every sub-path except those listed in ``excl`` (relative to ``place``).
Facts live in *instances*: a function analysed under a particular set of
entry facts at a particular call depth. Two call sites passing the same
taint at the same depth share an instance, so a callee is never smeared
with taint from an unrelated caller.
"""

from __future__ import annotations

from collections import defaultdict, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .diagnostics import Diagnostic, DiagnosticKind
from .knowledge import KnowledgeBase, NamespaceSetterSpec, Scope, SetterKind, getter_constructors, match_setter
from .model.ir import (
    RECEIVER_INDEX,
    Assign,
    Call,
    CallGraph,
    CompositeInit,
    Const,
    Expr,
    ExternalCallee,
    Instr,
    Location,
    Opaque,
    Place,
    PlaceRead,
    Return,
    RootKind,
)
from .model.program import ProgramModel
from .resources import Catalog, ResourceTypeInfo

Excl = FrozenSet[Tuple[str, ...]]
Fact = Tuple[Place, Excl]
InstKey = Tuple[str, FrozenSet[Fact], int]
Node = Tuple[InstKey, Fact]

EMPTY: Excl = frozenset()
# The watched object's own namespace is not attacker-chosen.
OWN_NAMESPACE_PATHS: Excl = frozenset({("Namespace",), ("ObjectMeta", "Namespace")})
DEFAULT_MAX_DEPTH = 8
# Field paths longer than this are clipped (and lose their exclusions), which
# keeps the fact universe finite for self-referencing writes like n.Next = n.
MAX_FIELD_PATH = 8


class Rule(str, Enum):
    ASSIGN = "Assign"
    CALL_ARG = "CallArg"
    CALL_RETURN = "CallReturn"
    COMPOSITE_FIELD = "CompositeField"
    OPAQUE_FLOW = "OpaqueFlow"


class SinkKind(str, Enum):
    NAMESPACE_SETTER = "NamespaceSetter"
    CLUSTER_SCOPED_INIT = "ClusterScopedInit"


@dataclass(frozen=True)
class PropagationStep:
    src: Tuple[str, Place]
    dst: Tuple[str, Place]
    via: Location
    rule: Rule


@dataclass(frozen=True)
class TaintRoot:
    fid: str
    place: Place
    resource: ResourceTypeInfo


@dataclass(frozen=True)
class TaintSourceSet:
    roots: Tuple[TaintRoot, ...]
    excluded_paths: Excl = OWN_NAMESPACE_PATHS


def make_fact(place: Place, excl: Excl) -> Fact:
    if len(place.fields) > MAX_FIELD_PATH:
        return (Place(place.kind, place.key, place.fields[:MAX_FIELD_PATH]), EMPTY)
    return (place, excl)


def ret_place(i: int) -> Place:
    return Place.local(f"$ret{i}")


def _ret_index(p: Place) -> Optional[int]:
    if p.kind is RootKind.LOCAL and p.key.startswith("$ret"):
        return int(p.key[4:])
    return None


# -- ordering helpers ------------------------------------------------------

def fact_key(f: Fact):
    return (f[0], tuple(sorted(f[1])))


def inst_sort_key(k: InstKey):
    return (k[0], k[2], tuple(sorted(fact_key(f) for f in k[1])))


def node_key(n: Node):
    return (inst_sort_key(n[0]), fact_key(n[1]))


# -- state -----------------------------------------------------------------

class Instance:
    __slots__ = ("key", "fid", "depth", "top", "facts", "by_root")

    def __init__(self, key: InstKey, top: bool = False):
        self.key = key
        self.fid = key[0]
        self.depth = key[2]
        self.top = top
        self.facts: Set[Fact] = set()
        self.by_root: Dict[Place, Set[Fact]] = defaultdict(set)
        for f in key[1]:
            self.add(f)

    def add(self, fact: Fact) -> bool:
        if fact in self.facts:
            return False
        self.facts.add(fact)
        self.by_root[fact[0].root].add(fact)
        return True


Read = Tuple[Tuple[str, ...], Excl, Fact, Place]  # (sub-path, excl, supporting fact, place read)
Edge = Tuple[Location, Rule, Place, Node]


@dataclass
class TaintState:
    instances: Dict[InstKey, Instance] = field(default_factory=dict)
    edges: Dict[Node, Set[Edge]] = field(default_factory=lambda: defaultdict(set))
    seeds: List[Node] = field(default_factory=list)
    depth_cuts: Set[Tuple[str, str, Location]] = field(default_factory=set)

    def tainted(self) -> Set[Tuple[str, Place]]:
        return {(inst.fid, f[0]) for inst in self.instances.values() for f in inst.facts}

    def visited_contexts(self) -> Set[Tuple[str, FrozenSet[Fact]]]:
        return {(k[0], k[1]) for k in self.instances}

    def read(self, key: InstKey, expr: Optional[Expr]) -> List[Read]:
        return read_expr(self.instances[key], expr)

    def bfs(self, start: Node) -> Tuple[Dict[Node, int], Dict[Node, Tuple[Node, Edge]]]:
        """Breadth-first distances and parent edges; ties go to the earliest location."""
        dist = {start: 0}
        parent: Dict[Node, Tuple[Node, Edge]] = {}
        queue = deque([start])
        while queue:
            n = queue.popleft()
            out = sorted(self.edges.get(n, ()), key=lambda e: (e[0], e[1].value, e[2], node_key(e[3])))
            for e in out:
                m = e[3]
                if m not in dist:
                    dist[m] = dist[n] + 1
                    parent[m] = (n, e)
                    queue.append(m)
        return dist, parent

    def path(self, parent: Mapping[Node, Tuple[Node, Edge]], target: Node) -> List[PropagationStep]:
        steps: List[PropagationStep] = []
        n = target
        while n in parent:
            prev, (via, rule, rp, _to) = parent[n]
            steps.append(PropagationStep((prev[0][0], rp), (n[0][0], n[1][0]), via, rule))
            n = prev
        steps.reverse()
        return steps


def read_place(inst: Instance, r: Place) -> List[Read]:
    out: List[Read] = []
    rf = r.fields
    for fact in inst.by_root.get(r.root, ()):
        t, excl = fact
        tf = t.fields
        if rf[: len(tf)] == tf:
            rel = rf[len(tf):]
            if any(rel[: len(e)] == e for e in excl):
                continue
            n = len(rel)
            sub = frozenset(e[n:] for e in excl if len(e) > n and e[:n] == rel)
            out.append(((), sub, fact, r))
        elif tf[: len(rf)] == rf:
            out.append((tf[len(rf):], excl, fact, r))
    return out


def read_expr(inst: Instance, expr: Optional[Expr]) -> List[Read]:
    if isinstance(expr, PlaceRead):
        return read_place(inst, expr.place)
    if isinstance(expr, Opaque):
        supports = []
        for op in expr.operands:
            supports.extend(read_expr(inst, op))
        seen = set()
        out: List[Read] = []
        for _s, _e, fact, rp in supports:
            if (fact, rp) not in seen:
                seen.add((fact, rp))
                out.append(((), EMPTY, fact, rp))
        return out
    return []


# -- sink sites ------------------------------------------------------------

@dataclass(frozen=True)
class SinkValue:
    expr: Expr
    location: Location
    target: Place  # place written by the sink (for the final trace step)
    rule: Rule


@dataclass(frozen=True)
class SinkSite:
    fid: str
    index: int
    kind: SinkKind
    location: Location
    values: Tuple[SinkValue, ...]
    setter: Optional[NamespaceSetterSpec] = None
    cluster_type: Optional[ResourceTypeInfo] = None
    client_kind: Optional[str] = None

    @property
    def key(self) -> Tuple[str, int, str]:
        return (self.fid, self.index, self.kind.value)


def _pseudo(name: str) -> Place:
    return Place.local(f"<{name}>")


def _setter_site(fid: str, idx: int, instr: Instr, m) -> SinkSite:
    spec = m.spec
    if isinstance(instr, CompositeInit):
        fname, value, loc = instr.inits[m.init_index]
        val = SinkValue(value, loc, instr.dst.child(fname), Rule.COMPOSITE_FIELD)
        return SinkSite(fid, idx, SinkKind.NAMESPACE_SETTER, loc, (val,), setter=spec)
    if isinstance(instr, Assign):
        val = SinkValue(m.value, instr.location, instr.dst, Rule.ASSIGN)
        return SinkSite(fid, idx, SinkKind.NAMESPACE_SETTER, instr.location, (val,), setter=spec)
    assert isinstance(instr, Call)
    if spec.kind is SetterKind.METHOD_CALL and isinstance(instr.receiver, PlaceRead):
        target = instr.receiver.place.child("Namespace")
    elif instr.dsts:
        target = instr.dsts[0]
    else:
        target = _pseudo(instr.callee.name)
    val = SinkValue(m.value, instr.location, target, Rule.CALL_ARG)
    return SinkSite(fid, idx, SinkKind.NAMESPACE_SETTER, instr.location, (val,), setter=spec, client_kind=m.client_kind)


def _is_constant(model: ProgramModel, expr: Expr) -> bool:
    if isinstance(expr, Const):
        return True
    return (
        isinstance(expr, PlaceRead)
        and expr.place.kind is RootKind.GLOBAL
        and not expr.place.fields
        and expr.place.key in model.consts
    )


def find_sink_sites(
    model: ProgramModel, kb: KnowledgeBase, catalog: Catalog
) -> Tuple[Dict[str, List[SinkSite]], List[Diagnostic]]:
    """Every instruction that could be a sink, plus constant-namespace notes."""
    getters = {g.method: (g.kind_identity, g.scope) for g in getter_constructors(model)}
    sites: Dict[str, List[SinkSite]] = {}
    notes: List[Diagnostic] = []
    for fid in sorted(model.funcs):
        found: List[SinkSite] = []
        for idx, instr in enumerate(model.funcs[fid].body):
            m = match_setter(kb, instr, model, fid, getters)
            if m is not None:
                site = _setter_site(fid, idx, instr, m)
                found.append(site)
                if _is_constant(model, m.value):
                    notes.append(Diagnostic(
                        DiagnosticKind.CONSTANT_NAMESPACE,
                        f"constant namespace passed to {m.spec.member} ({m.spec.id}); not attacker-controlled",
                        site.location,
                    ))
            cluster = _cluster_site(model, catalog, fid, idx, instr)
            if cluster is not None:
                found.append(cluster)
        if found:
            sites[fid] = found
    return sites, notes


def _cluster_site(model: ProgramModel, catalog: Catalog, fid: str, idx: int, instr: Instr) -> Optional[SinkSite]:
    if isinstance(instr, CompositeInit):
        entry = catalog.of_type(model, instr.type_ref)
        if entry is None or entry.scope is not Scope.CLUSTER:
            return None
        vals = tuple(
            SinkValue(v, loc, instr.dst.child(f) if f else instr.dst, Rule.COMPOSITE_FIELD)
            for f, v, loc in instr.inits
        )
        return SinkSite(fid, idx, SinkKind.CLUSTER_SCOPED_INIT, instr.location, vals, cluster_type=entry)
    if isinstance(instr, Assign) and instr.dst.fields and instr.dst.kind is not RootKind.GLOBAL:
        entry = catalog.of_type(model, model.type_of(fid, instr.dst.root))
        if entry is None or entry.scope is not Scope.CLUSTER:
            return None
        val = SinkValue(instr.src, instr.location, instr.dst, Rule.ASSIGN)
        return SinkSite(fid, idx, SinkKind.CLUSTER_SCOPED_INIT, instr.location, (val,), cluster_type=entry)
    return None


# -- sources ---------------------------------------------------------------

def collect_sources(model: ProgramModel, catalog: Sequence[ResourceTypeInfo]) -> TaintSourceSet:
    """Params, receivers and named locals whose static type is a namespaced resource."""
    cat = catalog if isinstance(catalog, Catalog) else Catalog(catalog)
    roots: List[TaintRoot] = []

    def consider(fid: str, place: Place) -> None:
        info = cat.of_type(model, model.type_of(fid, place))
        if info is not None and info.scope is Scope.NAMESPACED and not info.is_list:
            roots.append(TaintRoot(fid, place, info))

    for fid in sorted(model.funcs):
        fn = model.funcs[fid]
        if fn.receiver is not None:
            consider(fid, Place.param(RECEIVER_INDEX))
        for i in range(len(fn.params)):
            consider(fid, Place.param(i))
        for name in sorted(fn.local_types):
            if name.startswith("$") or name.startswith("^"):
                continue
            consider(fid, Place.local(name))
    return TaintSourceSet(tuple(roots))


# -- propagation -----------------------------------------------------------

class Propagator:
    """Worklist fixed point over (function, entry facts, depth) instances."""

    def __init__(
        self,
        model: ProgramModel,
        graph: CallGraph,
        kb: KnowledgeBase,
        max_depth: int = DEFAULT_MAX_DEPTH,
        unbalanced: bool = False,
    ):
        if max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        self.model = model
        self.graph = graph
        self.kb = kb
        self.max_depth = max_depth
        self.unbalanced = unbalanced
        self.state = TaintState()
        self._work: deque = deque()
        self._queued: Set[InstKey] = set()
        self._dependents: Dict[InstKey, Set[InstKey]] = defaultdict(set)
        self._ns_setters = {s.member: s for s in kb.setters_of(SetterKind.METHOD_CALL)}
        self._sanitizers = set(kb.sanitizers)
        self._accessors = set(kb.namespace_accessors)

    # public API

    def seed(self, fid: str, facts: Iterable[Fact]) -> InstKey:
        key: InstKey = (fid, frozenset(facts), 1)
        self._instance(key, top=True)
        for f in sorted(key[1], key=fact_key):
            self.state.seeds.append((key, f))
        return key

    def run(self) -> TaintState:
        while self._work:
            key = self._work.popleft()
            self._queued.discard(key)
            inst = self.state.instances[key]
            before = len(inst.facts)
            self._process(inst)
            grew = len(inst.facts) != before
            if grew:
                for dep in sorted(self._dependents.get(key, ()), key=inst_sort_key):
                    self._schedule(dep)
            if self.unbalanced and inst.top:
                self._return_to_callers(inst)
        return self.state

    # internals

    def _schedule(self, key: InstKey) -> None:
        if key not in self._queued:
            self._queued.add(key)
            self._work.append(key)

    def _instance(self, key: InstKey, top: bool = False) -> Instance:
        inst = self.state.instances.get(key)
        if inst is None:
            inst = Instance(key, top)
            self.state.instances[key] = inst
            self._schedule(key)
        return inst

    def _edge(self, frm: Node, via: Location, rule: Rule, rp: Place, to: Node) -> None:
        self.state.edges[frm].add((via, rule, rp, to))

    def _emit(self, inst: Instance, reads: Sequence[Read], dst: Place, rule: Rule, via: Location) -> bool:
        if dst.kind is RootKind.GLOBAL:
            return False
        new = False
        for sub, excl, sup, rp in reads:
            fact = make_fact(dst.child(*sub), excl)
            new |= inst.add(fact)
            self._edge((inst.key, sup), via, rule, rp, (inst.key, fact))
        return new

    def _process(self, inst: Instance) -> None:
        fn = self.model.funcs.get(inst.fid)
        if fn is None:
            return
        changed = True
        while changed:
            changed = False
            for idx, instr in enumerate(fn.body):
                changed |= self._transfer(inst, idx, instr)

    def _transfer(self, inst: Instance, idx: int, instr: Instr) -> bool:
        if isinstance(instr, Assign):
            rule = Rule.OPAQUE_FLOW if isinstance(instr.src, Opaque) else Rule.ASSIGN
            return self._emit(inst, read_expr(inst, instr.src), instr.dst, rule, instr.location)
        if isinstance(instr, CompositeInit):
            new = False
            for fname, value, loc in instr.inits:
                dst = instr.dst.child(fname) if fname else instr.dst
                new |= self._emit(inst, read_expr(inst, value), dst, Rule.COMPOSITE_FIELD, loc)
            return new
        if isinstance(instr, Return):
            new = False
            for i, value in enumerate(instr.values):
                new |= self._emit(inst, read_expr(inst, value), ret_place(i), Rule.CALL_RETURN, instr.location)
            return new
        if isinstance(instr, Call):
            return self._call(inst, idx, instr)
        return False

    def _call(self, inst: Instance, idx: int, instr: Call) -> bool:
        targets = self.graph.callees(inst.fid, idx)
        if not targets:
            targets = self.model.resolve_call(inst.fid, instr)
        corpus = [t for t in targets if isinstance(t, str) and t in self.model.funcs]
        external = [t for t in targets if not (isinstance(t, str) and t in self.model.funcs)]
        new = False
        for g in corpus:
            new |= self._call_corpus(inst, instr, g)
        if external or not targets:
            new |= self._call_external(inst, instr, external)
        return new

    def _bindings(self, inst: Instance, instr: Call, g: str) -> List[Tuple[Place, Optional[Expr], List[Read]]]:
        callee = self.model.funcs[g]
        out: List[Tuple[Place, Optional[Expr], List[Read]]] = []
        n = len(callee.params)
        for i, arg in enumerate(instr.args):
            if n == 0:
                break
            j = min(i, n - 1)  # extra args land in the variadic tail
            out.append((Place.param(j), arg if i < n else None, read_expr(inst, arg)))
        if instr.receiver is not None and callee.receiver is not None:
            out.append((Place.param(RECEIVER_INDEX), instr.receiver, read_expr(inst, instr.receiver)))
        for inner, outer in callee.captures:
            out.append((Place.local(inner), PlaceRead(outer), read_place(inst, outer)))
        return out

    def _call_corpus(self, inst: Instance, instr: Call, g: str) -> bool:
        binds = self._bindings(inst, instr, g)
        entry = frozenset(make_fact(p.child(*sub), excl) for p, _e, reads in binds for sub, excl, _f, _r in reads)
        if not entry:
            return False
        if inst.depth + 1 > self.max_depth:
            self.state.depth_cuts.add((inst.fid, g, instr.location))
            return False
        key: InstKey = (g, entry, inst.depth + 1)
        callee = self._instance(key)
        self._dependents[key].add(inst.key)
        for p, _e, reads in binds:
            for sub, excl, sup, rp in reads:
                self._edge((inst.key, sup), instr.location, Rule.CALL_ARG, rp, (key, make_fact(p.child(*sub), excl)))
        return self._apply_exit(inst, instr, binds, callee)

    def _apply_exit(self, inst: Instance, instr: Call, binds, callee: Instance) -> bool:
        """Return values into call dsts; param and capture mutations back into caller places."""
        back: Dict[Place, Place] = {}
        for p, expr, _reads in binds:
            if isinstance(expr, PlaceRead) and expr.place.kind is not RootKind.GLOBAL:
                back.setdefault(p, expr.place)
        new = False
        for fact in callee.facts:
            place, excl = fact
            ri = _ret_index(place)
            if ri is not None:
                if ri < len(instr.dsts) and instr.dsts[ri].kind is not RootKind.GLOBAL:
                    to = make_fact(instr.dsts[ri].child(*place.fields), excl)
                    new |= inst.add(to)
                    self._edge((callee.key, fact), instr.location, Rule.CALL_RETURN, place, (inst.key, to))
                continue
            if fact in callee.key[1]:
                continue
            outer = back.get(place.root)
            if outer is not None:
                to = make_fact(outer.child(*place.fields), excl)
                new |= inst.add(to)
                self._edge((callee.key, fact), instr.location, Rule.CALL_RETURN, place, (inst.key, to))
        return new

    def _call_external(self, inst: Instance, instr: Call, external: Sequence) -> bool:
        name = instr.callee.name
        if name in self._sanitizers or any(
            isinstance(t, ExternalCallee) and t.identity in self._sanitizers for t in external
        ):
            return False
        recv = instr.receiver
        if name in self._accessors and not instr.args and isinstance(recv, PlaceRead) and not recv.elem:
            if not instr.dsts:
                return False
            reads = read_place(inst, recv.place.child("Namespace"))
            return self._emit(inst, reads, instr.dsts[0], Rule.ASSIGN, instr.location)
        new = False
        spec = self._ns_setters.get(name)
        if spec is not None and isinstance(recv, PlaceRead) and not recv.elem:
            i = spec.namespace_param_index or 0
            if i < len(instr.args):
                reads = read_expr(inst, instr.args[i])
                new |= self._emit(inst, reads, recv.place.child("Namespace"), Rule.CALL_ARG, instr.location)
        supports: List[Read] = []
        if recv is not None:
            supports.extend(read_expr(inst, recv))
        for arg in instr.args:
            supports.extend(read_expr(inst, arg))
        if supports:
            flat = read_expr(inst, Opaque(tuple([recv] if recv is not None else []) + tuple(instr.args)))
            for d in instr.dsts:
                new |= self._emit(inst, flat, d, Rule.OPAQUE_FLOW, instr.location)
        return new

    def _return_to_callers(self, inst: Instance) -> None:
        """Leave a top-level instance through every call site of its function."""
        fn = self.model.funcs.get(inst.fid)
        if fn is None:
            return
        for caller, site in self.graph.callers_of(inst.fid):
            call = self.model.funcs[caller].body[site]
            if not isinstance(call, Call):
                continue
            facts: List[Tuple[Fact, Fact, Place]] = []
            for fact in inst.facts:
                place, excl = fact
                ri = _ret_index(place)
                if ri is not None:
                    if ri < len(call.dsts) and call.dsts[ri].kind is not RootKind.GLOBAL:
                        facts.append((make_fact(call.dsts[ri].child(*place.fields), excl), fact, place))
                    continue
                pi = place.param_index
                if pi is None:
                    continue
                expr = call.receiver if pi == RECEIVER_INDEX else (call.args[pi] if pi < len(call.args) else None)
                if isinstance(expr, PlaceRead) and expr.place.kind is not RootKind.GLOBAL:
                    facts.append((make_fact(expr.place.child(*place.fields), excl), fact, place))
            if not facts:
                continue
            key: InstKey = (caller, frozenset(f for f, _s, _p in facts), 1)
            self._instance(key, top=True)
            for to, sup, rp in facts:
                self._edge((inst.key, sup), call.location, Rule.CALL_RETURN, rp, (key, to))


# -- detection -------------------------------------------------------------

@dataclass(frozen=True)
class SinkHit:
    sink_kind: SinkKind
    site: SinkSite
    location: Location
    tainted_expr: Expr
    trace: Tuple[PropagationStep, ...]
    trigger: ResourceTypeInfo
    root: TaintRoot

    @property
    def setter(self) -> Optional[NamespaceSetterSpec]:
        return self.site.setter

    @property
    def cluster_type(self) -> Optional[ResourceTypeInfo]:
        return self.site.cluster_type

    def sort_key(self):
        return (self.location, self.sink_kind.value, self.trigger.identity)


@dataclass
class TaintResult:
    sources: TaintSourceSet
    hits: List[SinkHit]
    pairs: Set[Tuple[Tuple[str, Place], Tuple[str, int, str]]]
    depth_cuts: Set[Tuple[str, str, Location]]
    diagnostics: List[Diagnostic]
    states: Dict[Tuple[str, Place], TaintState] = field(default_factory=dict)


def propagate(
    model: ProgramModel,
    graph: CallGraph,
    sources: TaintSourceSet,
    kb: KnowledgeBase,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> TaintState:
    """Joint fixed point over all roots (no per-root attribution)."""
    prop = Propagator(model, graph, kb, max_depth)
    for r in sources.roots:
        prop.seed(r.fid, [(r.place, sources.excluded_paths)])
    return prop.run()


def _hits_for_root(
    state: TaintState, root: TaintRoot, sites: Mapping[str, List[SinkSite]]
) -> List[SinkHit]:
    start = state.seeds[0]
    dist, parent = state.bfs(start)
    best: Dict[Tuple[str, int, str], Tuple] = {}
    for key in sorted(state.instances, key=inst_sort_key):
        inst = state.instances[key]
        for site in sites.get(inst.fid, ()):
            for val in site.values:
                for _sub, _excl, sup, rp in read_expr(inst, val.expr):
                    node = (key, sup)
                    if node not in dist:
                        continue  # unreachable from this root (cannot happen for a single seed)
                    rank = (dist[node], val.location, node_key(node), rp)
                    cur = best.get(site.key)
                    if cur is None or rank < cur[0]:
                        best[site.key] = (rank, site, val, node, rp)
    hits = []
    for _k, (_rank, site, val, node, rp) in best.items():
        steps = state.path(parent, node)
        steps.append(PropagationStep((site.fid, rp), (site.fid, val.target), val.location, val.rule))
        hits.append(SinkHit(site.kind, site, site.location, val.expr, tuple(steps), root.resource, root))
    return hits


def extract_trace(state: TaintState, hit: SinkHit) -> List[PropagationStep]:
    """Shortest root-to-sink path recorded in ``state`` for ``hit``."""
    if not state.seeds:
        raise TraceMissing(hit)
    found = _hits_for_root(state, hit.root, {hit.site.fid: [hit.site]})
    for h in found:
        if h.site.key == hit.site.key:
            return list(h.trace)
    raise TraceMissing(hit)


class TraceMissing(RuntimeError):
    def __init__(self, hit: SinkHit):
        super().__init__(f"no trace for sink at {hit.location}")
        self.hit = hit


def _run_root(args) -> Tuple[TaintRoot, TaintState, List[SinkHit]]:
    model, graph, kb, max_depth, excl, root, sites = args
    prop = Propagator(model, graph, kb, max_depth)
    prop.seed(root.fid, [(root.place, excl)])
    state = prop.run()
    return root, state, _hits_for_root(state, root, sites)


def analyze(
    model: ProgramModel,
    graph: CallGraph,
    kb: KnowledgeBase,
    catalog: Sequence[ResourceTypeInfo],
    max_depth: int = DEFAULT_MAX_DEPTH,
    jobs: int = 1,
    keep_states: bool = False,
) -> TaintResult:
    """Per-root propagation followed by namespaced and cluster sink detection."""
    cat = catalog if isinstance(catalog, Catalog) else Catalog(catalog)
    sources = collect_sources(model, cat)
    sites, notes = find_sink_sites(model, kb, cat)
    work = [(model, graph, kb, max_depth, sources.excluded_paths, r, sites) for r in sources.roots]
    if jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_root, work))
    else:
        runs = [_run_root(w) for w in work]

    pairs = set()
    cuts: Set[Tuple[str, str, Location]] = set()
    merged: Dict[Tuple, SinkHit] = {}
    states = {}
    for root, state, hits in runs:
        cuts |= state.depth_cuts
        if keep_states:
            states[(root.fid, root.place)] = state
        for h in hits:
            pairs.add(((root.fid, root.place), h.site.key))
            k = (h.location, h.sink_kind.value, h.trigger.identity, h.site.key)
            cur = merged.get(k)
            if cur is None or len(h.trace) < len(cur.trace):
                merged[k] = h
    hits = sorted(merged.values(), key=SinkHit.sort_key)
    diags = list(notes)
    for caller, callee, loc in sorted(cuts):
        diags.append(Diagnostic(
            DiagnosticKind.DEPTH_EXHAUSTED, f"call from {caller} into {callee} cut at max depth {max_depth}", loc
        ))
    return TaintResult(sources, hits, pairs, cuts, diags, states)


def detect_namespaced_sinks(result: TaintResult) -> List[SinkHit]:
    return [h for h in result.hits if h.sink_kind is SinkKind.NAMESPACE_SETTER]


def detect_cluster_sinks(result: TaintResult) -> List[SinkHit]:
    return [h for h in result.hits if h.sink_kind is SinkKind.CLUSTER_SCOPED_INIT]
