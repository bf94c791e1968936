"""Whole-corpus program model: declarations, resolved types, call targets."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .corpus import SourceUnit
from .ir import (
    RECEIVER_INDEX,
    Assign,
    Call,
    CalleeKind,
    CallTarget,
    CompositeInit,
    Expr,
    ExternalCallee,
    FieldDecl,
    FuncDecl,
    MethodSpec,
    Opaque,
    Place,
    PlaceRead,
    Resolution,
    RootKind,
    TypeDecl,
    TypeRef,
)
from .parser import ParsedUnit, parse_unit

OBJECT_META = "k8s.io/apimachinery/pkg/apis/meta/v1.ObjectMeta"
TYPE_META = "k8s.io/apimachinery/pkg/apis/meta/v1.TypeMeta"
LIST_META = "k8s.io/apimachinery/pkg/apis/meta/v1.ListMeta"


@dataclass(frozen=True)
class ExternalTypes:
    """Facts about types whose source is not part of the corpus."""

    aliases: Mapping[str, str] = field(default_factory=dict)
    struct_fields: Mapping[str, Mapping[str, str]] = field(default_factory=dict)
    object_types: frozenset = frozenset()  # identities that embed ObjectMeta


def _external_ref(identity: str) -> TypeRef:
    if "." not in identity or identity.rfind("/") > identity.rfind("."):
        return TypeRef("", identity, Resolution.PREDECLARED)
    pkg, name = identity.rsplit(".", 1)
    return TypeRef(pkg, name, Resolution.EXTERNAL)


@dataclass
class ProgramModel:
    units: List[SourceUnit]
    parsed: List[ParsedUnit]
    types: Dict[str, TypeDecl]
    funcs: Dict[str, FuncDecl]
    methods: Dict[Tuple[str, str], str]
    packages: Set[str]
    consts: Set[str]
    external: ExternalTypes
    stats: Dict[str, int] = field(default_factory=dict)

    # -- types -------------------------------------------------------------

    def canonical(self, t: TypeRef) -> TypeRef:
        """Follow corpus and external aliases to the target type."""
        seen: Set[str] = set()
        while not t.is_container and t.identity not in seen:
            seen.add(t.identity)
            decl = self.types.get(t.identity) if t.resolution is Resolution.LOCAL else None
            if decl is not None and decl.kind == "alias" and decl.underlying is not None:
                t = decl.underlying
                continue
            target = self.external.aliases.get(t.identity)
            if target is not None:
                t = _external_ref(target)
                continue
            break
        return t

    def decl_of(self, t: Optional[TypeRef]) -> Optional[TypeDecl]:
        if t is None or t.is_container:
            return None
        t = self.canonical(t)
        if t.resolution is not Resolution.LOCAL:
            return None
        return self.types.get(t.identity)

    def field_type(self, t: Optional[TypeRef], name: str) -> Optional[TypeRef]:
        found = self.field_lookup(t, name)
        return found[1] if found else None

    def field_lookup(
        self, t: Optional[TypeRef], name: str, _depth: int = 0
    ) -> Optional[Tuple[str, TypeRef]]:
        """(declaring owner identity, field type), searching embedded fields."""
        if t is None or _depth > 4:
            return None
        while t.is_container:
            t = t.elem()
        t = self.canonical(t)
        decl = self.decl_of(t)
        if decl is not None:
            f = decl.field_named(name)
            if f is not None:
                return decl.identity, f.type_ref
            for emb in decl.fields:
                if emb.is_embedded:
                    hit = self.field_lookup(emb.type_ref, name, _depth + 1)
                    if hit is not None:
                        return hit
            return None
        if t.resolution is Resolution.EXTERNAL:
            table = self.external.struct_fields.get(t.identity)
            if table is not None and name in table:
                return t.identity, _external_ref(table[name])
            if t.identity in self.external.object_types:
                if name == "ObjectMeta":
                    return t.identity, _external_ref(OBJECT_META)
                if name == "TypeMeta":
                    return t.identity, _external_ref(TYPE_META)
                meta = self.external.struct_fields.get(OBJECT_META, {})
                if name in meta:
                    return OBJECT_META, _external_ref(meta[name])
        return None

    def root_type(self, fid: str, place: Place) -> Optional[TypeRef]:
        fn = self.funcs.get(fid)
        if fn is None:
            return None
        if place.kind is RootKind.PARAM:
            idx = int(place.key)
            if idx == RECEIVER_INDEX:
                return fn.receiver
            return fn.params[idx][1] if 0 <= idx < len(fn.params) else None
        if place.kind is RootKind.LOCAL:
            t = fn.local_types.get(place.key)
            if t is None and place.key.startswith("^") and fn.parent is not None:
                outer = dict(fn.captures).get(place.key)
                if outer is not None:
                    return self.type_of(fn.parent, outer)
            return t
        return None

    def type_of(self, fid: str, place: Place) -> Optional[TypeRef]:
        t = self.root_type(fid, place)
        for name in place.fields:
            if t is None:
                return None
            t = self.field_type(t, name)
        return self.canonical(t) if t is not None else None

    def type_of_expr(self, fid: str, expr: Optional[Expr]) -> Optional[TypeRef]:
        if isinstance(expr, PlaceRead):
            t = self.type_of(fid, expr.place)
            if t is not None and expr.elem:
                t = t.elem()
            return t
        return None

    # -- calls -------------------------------------------------------------

    def method_targets(self, t: Optional[TypeRef], name: str, arity: int, _depth: int = 0) -> List[CallTarget]:
        if t is None or t.is_container or _depth > 4:
            return []
        t = self.canonical(t)
        decl = self.decl_of(t)
        if decl is not None:
            fid = self.methods.get((decl.identity, name))
            if fid is not None:
                return [fid]
            if decl.kind == "interface":
                return self.implementers(name, arity) or [ExternalCallee(f"{decl.identity}.{name}")]
            for emb in decl.fields:
                if emb.is_embedded:
                    hit = self.method_targets(emb.type_ref, name, arity, _depth + 1)
                    if hit:
                        return hit
            return []
        if t.resolution is Resolution.EXTERNAL:
            return [ExternalCallee(f"{t.identity}.{name}")]
        return []

    def implementers(self, name: str, arity: int) -> List[str]:
        out = []
        for (_owner, mname), fid in self.methods.items():
            if mname == name and len(self.funcs[fid].params) == arity:
                out.append(fid)
        return sorted(out)

    def resolve_call(self, fid: str, call: Call) -> List[CallTarget]:
        c = call.callee
        if c.kind is CalleeKind.CLOSURE:
            return [c.target]
        if c.kind is CalleeKind.FUNCTION:
            if c.target in self.funcs:
                return [c.target]
            return [ExternalCallee(c.target)]
        if c.kind is CalleeKind.METHOD:
            rt = self.type_of_expr(fid, call.receiver)
            hits = self.method_targets(rt, c.name, len(call.args))
            if hits:
                return hits
        return [ExternalCallee(f"Unknown.{c.name}")]

    # -- misc --------------------------------------------------------------

    def unit_by_path(self, path: str) -> Optional[SourceUnit]:
        for u in self.units:
            if u.path == path:
                return u
        return None

    def instruction_count(self) -> int:
        return sum(f.dataflow_count() for f in self.funcs.values())


def parse_units(units: Sequence[SourceUnit], jobs: int = 1) -> List[ParsedUnit]:
    if jobs <= 1 or len(units) <= 1:
        return [parse_unit(u) for u in units]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(parse_unit, units))


def build_model(
    units: Sequence[SourceUnit],
    external: Optional[ExternalTypes] = None,
    jobs: int = 1,
    parsed: Optional[Sequence[ParsedUnit]] = None,
) -> ProgramModel:
    """Parse (unless ``parsed`` is given), cross-link and type the corpus."""
    external = external or ExternalTypes()
    parsed_units = list(parsed) if parsed is not None else parse_units(units, jobs)
    packages = {u.package_path for u in units}

    raw_types: Dict[str, TypeDecl] = {}
    for pu in parsed_units:
        for td in pu.types:
            raw_types.setdefault(td.identity, td)
    declared = set(raw_types)
    unresolved = 0

    def resolve(t: Optional[TypeRef]) -> Optional[TypeRef]:
        nonlocal unresolved
        if t is None:
            return None
        res = t.resolution
        if res in (Resolution.PENDING, Resolution.EXTERNAL, Resolution.LOCAL):
            if t.package_path in packages:
                res = Resolution.LOCAL if t.identity in declared else Resolution.UNRESOLVED
            elif res is Resolution.PENDING:
                res = Resolution.UNRESOLVED
        if res is Resolution.UNRESOLVED and t.name:
            unresolved += 1
        return dataclasses.replace(t, resolution=res)

    types: Dict[str, TypeDecl] = {}
    for ident, td in raw_types.items():
        types[ident] = dataclasses.replace(
            td,
            fields=tuple(dataclasses.replace(f, type_ref=resolve(f.type_ref)) for f in td.fields),
            methods=tuple(
                MethodSpec(m.name, tuple((n, resolve(t)) for n, t in m.params), tuple(resolve(t) for t in m.results))
                for m in td.methods
            ),
            underlying=resolve(td.underlying),
        )

    funcs: Dict[str, FuncDecl] = {}
    methods: Dict[Tuple[str, str], str] = {}
    consts: Set[str] = set()
    for pu in parsed_units:
        consts |= pu.consts
        for fn in pu.funcs:
            fid = fn.fid
            n = 1
            while fid in funcs:
                n += 1
                fid = f"{fn.fid}#{n}"
            if fid != fn.fid:
                _rename_func(fn, fid, pu.funcs)
            fn.receiver = resolve(fn.receiver)
            fn.params = [(n_, resolve(t)) for n_, t in fn.params]
            fn.results = [resolve(t) for t in fn.results]
            fn.local_types = {k: resolve(t) for k, t in fn.local_types.items()}
            fn.body = [
                dataclasses.replace(i, type_ref=resolve(i.type_ref)) if isinstance(i, CompositeInit) else i
                for i in fn.body
            ]
            funcs[fid] = fn
            if fn.receiver is not None and fn.parent is None:
                methods[(fn.receiver.identity, fn.name)] = fid

    model = ProgramModel(
        units=list(units), parsed=parsed_units, types=types, funcs=funcs,
        methods=methods, packages=packages, consts=consts, external=external,
    )
    _infer_locals(model)
    model.stats = {
        "units": len(units),
        "parse_errors": sum(1 for u in units if u.parse_diagnostics),
        "unresolved_refs": unresolved,
        "functions": len(funcs),
        "ir_instructions": model.instruction_count(),
    }
    return model


def _rename_func(fn: FuncDecl, fid: str, siblings: Iterable[FuncDecl]) -> None:
    old = fn.fid
    fn.fid = fid
    for s in siblings:
        if s.parent == old:
            s.parent = fid


def _infer_locals(model: ProgramModel, max_rounds: int = 10) -> None:
    """Propagate static types to locals and temporaries until stable."""
    order = sorted(model.funcs)
    for _ in range(max_rounds):
        changed = False
        for fid in order:
            fn = model.funcs[fid]
            for instr in fn.body:
                if isinstance(instr, CompositeInit):
                    changed |= _set_local(fn, instr.dst, instr.type_ref)
                elif isinstance(instr, Assign):
                    if isinstance(instr.src, PlaceRead):
                        changed |= _set_local(fn, instr.dst, model.type_of_expr(fid, instr.src))
                elif isinstance(instr, Call) and instr.dsts:
                    for target in model.resolve_call(fid, instr):
                        if isinstance(target, str):
                            results = model.funcs[target].results
                            for d, t in zip(instr.dsts, results):
                                changed |= _set_local(fn, d, t)
                            break
        if not changed:
            return


def _set_local(fn: FuncDecl, dst: Place, t: Optional[TypeRef]) -> bool:
    if t is None or dst.kind is not RootKind.LOCAL or dst.fields:
        return False
    if not t.name or t.resolution is Resolution.UNRESOLVED:
        return False
    if dst.key in fn.local_types:
        return False
    fn.local_types[dst.key] = t
    return True
