"""Brute-force reachability oracle.

Enumerates every call string up to ``max_depth`` explicitly and applies the
propagation rules in each context until nothing changes. No summaries, no
instance sharing, no worklist: just repeated sweeps over all contexts.
Kept deliberately separate from ``xns_audit.taint``.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Set, Tuple

from xns_audit.model.ir import (
    Assign,
    Call,
    CompositeInit,
    Const,
    ExternalCallee,
    Opaque,
    Place,
    PlaceRead,
    Return,
    RootKind,
)

RECV = "-1"
FIELD_CAP = 8  # same clipping bound as the engine


def _read(facts, place: Place):
    """Yield (suffix, excl) value pieces for ``place`` under ``facts``."""
    out = []
    for (p, excl) in facts:
        if p.kind != place.kind or p.key != place.key:
            continue
        a, b = p.fields, place.fields
        if len(a) <= len(b) and b[: len(a)] == a:
            rel = b[len(a):]
            blocked = False
            for e in excl:
                if len(e) <= len(rel) and rel[: len(e)] == e:
                    blocked = True
            if blocked:
                continue
            rest = set()
            for e in excl:
                if len(e) > len(rel) and e[: len(rel)] == rel:
                    rest.add(e[len(rel):])
            out.append(((), frozenset(rest)))
        elif len(b) < len(a) and a[: len(b)] == b:
            out.append((a[len(b):], excl))
    return out


def _value(facts, expr):
    if expr is None or isinstance(expr, Const):
        return []
    if isinstance(expr, PlaceRead):
        return _read(facts, expr.place)
    if isinstance(expr, Opaque):
        for op in expr.operands:
            if _value(facts, op):
                return [((), frozenset())]
        return []
    return []


def _put(facts, dst: Place, pieces) -> bool:
    if dst.kind is RootKind.GLOBAL:
        return False
    grew = False
    for sub, excl in pieces:
        path = dst.fields + tuple(sub)
        if len(path) > FIELD_CAP:
            path, excl = path[:FIELD_CAP], frozenset()
        f = (Place(dst.kind, dst.key, path), excl)
        if f not in facts:
            facts.add(f)
            grew = True
    return grew


def reachable_sinks(model, graph, kb, root_fid, root_place, excl, sites, max_depth) -> Set[Tuple[str, int, str]]:
    ctx_facts: Dict[Tuple, Set] = {(): {(root_place, excl)}}

    def fn_of(ctx):
        return ctx[-1][2] if ctx else root_fid

    setters = {s.member: s for s in kb.setters if s.kind.value == "MethodCall"}
    changed = True
    while changed:
        changed = False
        for ctx in sorted(ctx_facts, key=len):
            facts = ctx_facts[ctx]
            fid = fn_of(ctx)
            fn = model.funcs[fid]
            for idx, ins in enumerate(fn.body):
                if isinstance(ins, Assign):
                    changed |= _put(facts, ins.dst, _value(facts, ins.src))
                elif isinstance(ins, CompositeInit):
                    for name, v, _loc in ins.inits:
                        d = ins.dst if name is None else Place(ins.dst.kind, ins.dst.key, ins.dst.fields + (name,))
                        changed |= _put(facts, d, _value(facts, v))
                elif isinstance(ins, Return):
                    for i, v in enumerate(ins.values):
                        changed |= _put(facts, Place.local(f"$ret{i}"), _value(facts, v))
                elif isinstance(ins, Call):
                    targets = graph.callees(fid, idx) or model.resolve_call(fid, ins)
                    internal = [t for t in targets if isinstance(t, str) and t in model.funcs]
                    has_ext = (not targets) or any(not (isinstance(t, str) and t in model.funcs) for t in targets)
                    for g in internal:
                        if len(ctx) + 2 > max_depth:
                            continue
                        sub = ctx + ((fid, idx, g),)
                        cf = ctx_facts.setdefault(sub, set())
                        callee = model.funcs[g]
                        binds = []
                        n = len(callee.params)
                        for i, a in enumerate(ins.args):
                            if n:
                                binds.append((Place.param(min(i, n - 1)), a if i < n else None, _value(facts, a)))
                        if ins.receiver is not None and callee.receiver is not None:
                            binds.append((Place.param(-1), ins.receiver, _value(facts, ins.receiver)))
                        for inner, outer in callee.captures:
                            binds.append((Place.local(inner), PlaceRead(outer), _read(facts, outer)))
                        for p, _a, pieces in binds:
                            if _put(cf, p, pieces):
                                changed = True
                        # exits
                        for (p, ex) in list(cf):
                            if p.kind is RootKind.LOCAL and p.key.startswith("$ret"):
                                i = int(p.key[4:])
                                if i < len(ins.dsts):
                                    changed |= _put(facts, ins.dsts[i], [(p.fields, ex)])
                                continue
                            for bp, a, _pieces in binds:
                                if isinstance(a, PlaceRead) and a.place.kind is not RootKind.GLOBAL:
                                    if bp.kind == p.kind and bp.key == p.key:
                                        changed |= _put(facts, a.place, [(p.fields, ex)])
                                        break
                    if has_ext:
                        changed |= _external(kb, setters, facts, ins, targets)
    hit = set()
    for ctx, facts in ctx_facts.items():
        for site in sites.get(fn_of(ctx), ()):
            if any(_value(facts, v.expr) for v in site.values):
                hit.add(site.key)
    return hit


def _external(kb, setters, facts, ins: Call, targets) -> bool:
    name = ins.callee.name
    idents = {t.identity for t in targets if isinstance(t, ExternalCallee)}
    if name in kb.sanitizers or idents & set(kb.sanitizers):
        return False
    r = ins.receiver
    if name in kb.namespace_accessors and not ins.args and isinstance(r, PlaceRead) and not r.elem:
        if not ins.dsts:
            return False
        return _put(facts, ins.dsts[0], _read(facts, r.place.child("Namespace")))
    grew = False
    s = setters.get(name)
    if s is not None and isinstance(r, PlaceRead) and not r.elem:
        i = s.namespace_param_index or 0
        if i < len(ins.args):
            grew |= _put(facts, r.place.child("Namespace"), _value(facts, ins.args[i]))
    operands = ([r] if r is not None else []) + list(ins.args)
    if any(_value(facts, o) for o in operands):
        for d in ins.dsts:
            grew |= _put(facts, d, [((), frozenset())])
    return grew


def oracle_pairs(model, graph, kb, sources, sites, max_depth) -> Set:
    out = set()
    for root in sources.roots:
        for k in reachable_sinks(model, graph, kb, root.fid, root.place, sources.excluded_paths, sites, max_depth):
            out.add(((root.fid, root.place), k))
    return out
