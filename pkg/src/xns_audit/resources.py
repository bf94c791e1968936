"""Resource catalog: custom resources declared in the corpus plus referenced builtins."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from .knowledge import KnowledgeBase, Scope, builtin_scope_lookup, getter_constructors
from .model.ir import (
    Call,
    CalleeKind,
    CompositeInit,
    Expr,
    Location,
    Resolution,
    TypeDecl,
    TypeRef,
)
from .model.program import LIST_META, TYPE_META, ProgramModel


class Origin(str, Enum):
    CUSTOM = "Custom"
    BUILTIN = "BuiltIn"


class EvidenceKind(str, Enum):
    MARKER = "Marker"
    DEFAULT = "Default"
    BUILTIN_CATALOG = "BuiltinCatalog"
    CONSTRUCTOR_ARITY = "ConstructorArity"


@dataclass(frozen=True)
class ScopeEvidence:
    kind: EvidenceKind
    marker: Optional[str] = None
    location: Optional[Location] = None

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind.value}
        if self.marker is not None:
            d["marker"] = self.marker
        if self.location is not None:
            d["location"] = {"path": self.location.path, "line": self.location.line}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScopeEvidence":
        loc = d.get("location")
        return cls(
            EvidenceKind(d["kind"]),
            d.get("marker"),
            Location(loc["path"], loc["line"]) if loc else None,
        )


@dataclass(frozen=True)
class ResourceTypeInfo:
    identity: str
    kind: str
    origin: Origin
    scope: Scope
    scope_evidence: ScopeEvidence
    decl_location: Optional[Location] = None
    is_list: bool = False

    @property
    def namespaced(self) -> bool:
        return self.scope is Scope.NAMESPACED

    def to_dict(self) -> dict:
        d: dict = {
            "identity": self.identity,
            "kind": self.kind,
            "origin": self.origin.value,
            "scope": self.scope.value,
            "evidence": self.scope_evidence.to_dict(),
        }
        if self.decl_location is not None:
            d["decl_location"] = {"path": self.decl_location.path, "line": self.decl_location.line}
        if self.is_list:
            d["list"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ResourceTypeInfo":
        loc = d.get("decl_location")
        return cls(
            identity=d["identity"],
            kind=d["kind"],
            origin=Origin(d["origin"]),
            scope=Scope(d["scope"]),
            scope_evidence=ScopeEvidence.from_dict(d["evidence"]),
            decl_location=Location(loc["path"], loc["line"]) if loc else None,
            is_list=bool(d.get("list", False)),
        )


@dataclass(frozen=True)
class ScopeConflict:
    """Marker and generated client disagree about a custom resource's scope."""

    identity: str
    marker_scope: Scope
    client_scope: Scope
    client_identity: str


# -- custom resources ------------------------------------------------------

def _field_identity(model: ProgramModel, t: TypeRef) -> str:
    return model.canonical(t).identity


def is_custom_resource(model: ProgramModel, decl: TypeDecl) -> bool:
    return decl.kind == "struct" and any(_field_identity(model, f.type_ref) == TYPE_META for f in decl.fields)


def _is_list_kind(model: ProgramModel, decl: TypeDecl) -> bool:
    return decl.name.endswith("List") and any(_field_identity(model, f.type_ref) == LIST_META for f in decl.fields)


def _marker_matches(line: str, marker: str) -> bool:
    """Substring match, plus ``key=value`` inside a comma-separated argument list.

    ``+kubebuilder:resource:path=x,scope=Cluster`` therefore matches the
    marker ``+kubebuilder:resource:scope=Cluster``.
    """
    text = line.strip()
    if text.startswith("//"):
        text = text[2:].strip()
    if marker in text:
        return True
    head, sep, arg = marker.rpartition(":")
    if not sep or "=" not in arg or not head:
        return False
    prefix = head + ":"
    idx = text.find(prefix)
    if idx < 0:
        return False
    rest = text[idx + len(prefix):].split()[0] if text[idx + len(prefix):].strip() else ""
    return arg in rest.split(",")


def _aliases_of(model: ProgramModel, decl: TypeDecl) -> List[TypeDecl]:
    out = []
    for other in model.types.values():
        if other.kind == "alias" and other.underlying is not None:
            if model.canonical(other.underlying).identity == decl.identity:
                out.append(other)
    return sorted(out, key=lambda d: d.identity)


def infer_custom_scope(
    decl: TypeDecl, kb: KnowledgeBase, aliases: Sequence[TypeDecl] = ()
) -> Tuple[Scope, ScopeEvidence]:
    """Cluster iff a doc-comment line of the type (or an alias of it) holds a scope marker."""
    for d in (decl, *aliases):
        for offset, line in enumerate(d.doc_comments):
            for marker in kb.scope_markers:
                if _marker_matches(line, marker):
                    # doc lines sit directly above the declaration
                    line_no = d.location.line - len(d.doc_comments) + offset
                    return Scope.CLUSTER, ScopeEvidence(EvidenceKind.MARKER, marker, Location(d.location.path, line_no))
    return Scope.NAMESPACED, ScopeEvidence(EvidenceKind.DEFAULT)


def identify_custom_resources(model: ProgramModel, kb: KnowledgeBase) -> List[ResourceTypeInfo]:
    out: List[ResourceTypeInfo] = []
    for ident in sorted(model.types):
        decl = model.types[ident]
        if not is_custom_resource(model, decl):
            continue
        scope, evidence = infer_custom_scope(decl, kb, _aliases_of(model, decl))
        out.append(ResourceTypeInfo(
            identity=decl.identity,
            kind=decl.name,
            origin=Origin.CUSTOM,
            scope=scope,
            scope_evidence=evidence,
            decl_location=decl.location,
            is_list=_is_list_kind(model, decl),
        ))
    return out


def scope_conflicts(model: ProgramModel, custom: Sequence[ResourceTypeInfo]) -> List[ScopeConflict]:
    """Custom resources whose corpus Getter constructor arity contradicts the marker."""
    by_ident = {r.identity: r for r in custom}
    out = []
    for g in getter_constructors(model):
        info = by_ident.get(g.kind_identity)
        if info is not None and info.scope is not g.scope:
            out.append(ScopeConflict(info.identity, info.scope, g.scope, g.client_identity))
    return out


# -- builtins --------------------------------------------------------------

def _named(model: ProgramModel, t: Optional[TypeRef]) -> Optional[str]:
    if t is None:
        return None
    while t.is_container:
        t = t.elem()
    return model.canonical(t).identity


def referenced_type_identities(model: ProgramModel) -> Set[str]:
    seen: Set[str] = set()

    def add(t: Optional[TypeRef]) -> None:
        ident = _named(model, t)
        if ident:
            seen.add(ident)

    for decl in model.types.values():
        for f in decl.fields:
            add(f.type_ref)
        for m in decl.methods:
            for _n, t in m.params:
                add(t)
            for t in m.results:
                add(t)
        add(decl.underlying)
    for fn in model.funcs.values():
        add(fn.receiver)
        for _n, t in fn.params:
            add(t)
        for t in fn.results:
            add(t)
        for t in fn.local_types.values():
            add(t)
        for instr in fn.body:
            if isinstance(instr, CompositeInit):
                add(instr.type_ref)
    return seen


def _constructor_calls(model: ProgramModel) -> Iterator[Tuple[str, int]]:
    for fn in model.funcs.values():
        for instr in fn.body:
            if isinstance(instr, Call) and instr.callee.kind in (CalleeKind.METHOD, CalleeKind.FUNCTION):
                if instr.callee.target not in model.funcs:
                    yield instr.callee.name, len(instr.args)


def identify_builtin_usage(
    model: ProgramModel, kb: KnowledgeBase, exclude: Iterable[str] = ()
) -> List[ResourceTypeInfo]:
    """KB builtins referenced by type identity or by typed-client constructor call."""
    idents = referenced_type_identities(model)
    ctors = set(_constructor_calls(model))
    skip = set(exclude)
    out: List[ResourceTypeInfo] = []
    for b in kb.builtins:
        if b.identity in skip:
            continue
        arity = 1 if b.scope is Scope.NAMESPACED else 0
        if b.identity in idents or (b.constructor, arity) in ctors:
            scope = builtin_scope_lookup(kb, b.identity)
            out.append(ResourceTypeInfo(
                identity=b.identity,
                kind=b.kind,
                origin=Origin.BUILTIN,
                scope=scope,
                scope_evidence=ScopeEvidence(EvidenceKind.BUILTIN_CATALOG),
            ))
    out.sort(key=lambda r: r.identity)
    return out


def build_catalog(model: ProgramModel, kb: KnowledgeBase) -> List[ResourceTypeInfo]:
    custom = identify_custom_resources(model, kb)
    builtin = identify_builtin_usage(model, kb, exclude=[r.identity for r in custom])
    return custom + builtin


class Catalog:
    """Identity-indexed view of a resource catalog."""

    def __init__(self, entries: Sequence[ResourceTypeInfo]):
        self.entries = list(entries)
        self._by_ident: Dict[str, ResourceTypeInfo] = {e.identity: e for e in entries}

    def get(self, identity: Optional[str]) -> Optional[ResourceTypeInfo]:
        return self._by_ident.get(identity) if identity else None

    def of_type(self, model: ProgramModel, t: Optional[TypeRef]) -> Optional[ResourceTypeInfo]:
        if t is None or t.is_container:
            return None
        return self.get(model.canonical(t).identity)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def resolve_resource_type_of_expr(
    model: ProgramModel, fid: str, expr: Optional[Expr], catalog: Sequence[ResourceTypeInfo]
) -> Optional[ResourceTypeInfo]:
    """Catalog entry for the static type read by ``expr``.

    Reads whose type cannot be resolved bump ``model.stats['unresolved_exprs']``.
    """
    t = model.type_of_expr(fid, expr)
    if t is None or t.resolution is Resolution.UNRESOLVED:
        model.stats["unresolved_exprs"] = model.stats.get("unresolved_exprs", 0) + 1
        return None
    if t.is_container:
        return None
    ident = model.canonical(t).identity
    for entry in catalog:
        if entry.identity == ident:
            return entry
    return None


def dump_catalog(catalog: Sequence[ResourceTypeInfo]) -> List[dict]:
    return [r.to_dict() for r in catalog]
