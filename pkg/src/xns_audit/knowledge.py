"""Knowledge base: namespace setters, builtin resource scopes, verb methods.

The default KB ships as ``data/default_kb.yaml``. A user file uses the
same schema; its entries are appended to the defaults and ``disable``
removes default entries by id.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import jsonschema
import yaml

from .model.ir import Call, CalleeKind, CompositeInit, Assign, Expr, Instr, ExternalCallee
from .model.program import OBJECT_META, ExternalTypes, ProgramModel

KB_VERSION = 1


class KbParseError(Exception):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class KbConflict(Exception):
    def __init__(self, entry_id: str):
        super().__init__(f"conflicting definition for KB entry {entry_id!r}")
        self.entry_id = entry_id


class SetterKind(str, Enum):
    FIELD_WRITE = "FieldWrite"
    METHOD_CALL = "MethodCall"
    CLIENT_CONSTRUCTOR = "ClientConstructor"


class Scope(str, Enum):
    NAMESPACED = "Namespaced"
    CLUSTER = "Cluster"


class ClientStyle(str, Enum):
    UNIFIED = "Unified"
    TYPED = "Typed"


VERBS = ("Get", "List", "Watch", "Create", "Update", "Patch", "Delete", "DeleteAllOf", "Apply")


@dataclass(frozen=True)
class NamespaceSetterSpec:
    id: str
    kind: SetterKind
    owner_identity: str
    member: str
    namespace_param_index: Optional[int] = None


@dataclass(frozen=True)
class BuiltinResourceEntry:
    kind: str
    group: str
    scope: Scope
    typed_client_identity: str
    version: str = "v1"

    @property
    def id(self) -> str:
        return f"builtin.{self.kind}"

    @property
    def identity(self) -> str:
        group_dir = self.group.split(".")[0] if self.group else "core"
        return f"k8s.io/api/{group_dir}/{self.version}.{self.kind}"

    @property
    def constructor(self) -> str:
        return self.typed_client_identity.rsplit(".", 1)[-1]


@dataclass(frozen=True)
class VerbMethodSpec:
    id: str
    client_style: ClientStyle
    method_name: str
    verb: str
    object_param_index: Optional[int] = None
    key_param_index: Optional[int] = None


@dataclass(frozen=True)
class SeverityRules:
    critical_kinds: Tuple[str, ...] = ("ClusterRole", "ClusterRoleBinding")
    sensitive_kinds: Tuple[str, ...] = ("Secret",)
    write_verbs: Tuple[str, ...] = ("Create", "Update", "Patch", "Delete", "Apply")
    read_verbs: Tuple[str, ...] = ("Get", "List", "Watch")


@dataclass(frozen=True)
class KnowledgeBase:
    setters: Tuple[NamespaceSetterSpec, ...]
    builtins: Tuple[BuiltinResourceEntry, ...]
    verb_methods: Tuple[VerbMethodSpec, ...]
    library_identities: Tuple[str, ...]
    scope_markers: Tuple[str, ...]
    unified_client_owners: Tuple[str, ...] = ()
    namespace_accessors: Tuple[str, ...] = ("GetNamespace",)
    sanitizers: Tuple[str, ...] = ()
    type_aliases: Tuple[Tuple[str, str], ...] = ()
    struct_fields: Tuple[Tuple[str, Tuple[Tuple[str, str], ...]], ...] = ()
    severity_rules: SeverityRules = SeverityRules()
    disabled: Tuple[str, ...] = ()
    version: int = KB_VERSION

    # -- lookups -----------------------------------------------------------

    def builtin_by_identity(self, identity: str) -> Optional[BuiltinResourceEntry]:
        for b in self.builtins:
            if b.identity == identity:
                return b
        return None

    def builtin_by_constructor(self, name: str, arity: Optional[int] = None) -> Optional[BuiltinResourceEntry]:
        for b in self.builtins:
            if b.constructor != name:
                continue
            if arity is None or arity == (1 if b.scope is Scope.NAMESPACED else 0):
                return b
        return None

    def setters_of(self, kind: SetterKind) -> List[NamespaceSetterSpec]:
        return [s for s in self.setters if s.kind is kind]

    def verb_specs(self, style: ClientStyle, method: str) -> List[VerbMethodSpec]:
        return [v for v in self.verb_methods if v.client_style is style and v.method_name == method]

    def external_types(self) -> ExternalTypes:
        return ExternalTypes(
            aliases=dict(self.type_aliases),
            struct_fields={k: dict(v) for k, v in self.struct_fields},
            object_types=frozenset(b.identity for b in self.builtins),
        )

    def entry_ids(self) -> List[str]:
        return [s.id for s in self.setters] + [b.id for b in self.builtins] + [v.id for v in self.verb_methods]

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        sr = self.severity_rules
        return {
            "version": self.version,
            "libraries": list(self.library_identities),
            "scope_markers": list(self.scope_markers),
            "setters": [_setter_dict(s) for s in self.setters],
            "builtins": [
                {"kind": b.kind, "group": b.group, "version": b.version,
                 "scope": b.scope.value, "client": b.typed_client_identity}
                for b in self.builtins
            ],
            "verb_methods": [_verb_dict(v) for v in self.verb_methods],
            "unified_client_owners": list(self.unified_client_owners),
            "namespace_accessors": list(self.namespace_accessors),
            "sanitizers": list(self.sanitizers),
            "type_aliases": dict(self.type_aliases),
            "struct_fields": {k: dict(v) for k, v in self.struct_fields},
            "severity_rules": {
                "critical_kinds": list(sr.critical_kinds),
                "sensitive_kinds": list(sr.sensitive_kinds),
                "write_verbs": list(sr.write_verbs),
                "read_verbs": list(sr.read_verbs),
            },
            "disable": list(self.disabled),
        }

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=False)

    def entry_set(self) -> frozenset:
        """Order-independent view used for equality checks."""
        d = self.to_dict()
        out = set()
        for key, value in d.items():
            if isinstance(value, list):
                for v in value:
                    out.add((key, yaml.safe_dump(v, sort_keys=True)))
            else:
                out.add((key, yaml.safe_dump(value, sort_keys=True)))
        return frozenset(out)


def _setter_dict(s: NamespaceSetterSpec) -> Dict[str, Any]:
    d: Dict[str, Any] = {"id": s.id, "kind": s.kind.value, "owner": s.owner_identity, "member": s.member}
    if s.namespace_param_index is not None:
        d["namespace_param_index"] = s.namespace_param_index
    return d


def _verb_dict(v: VerbMethodSpec) -> Dict[str, Any]:
    d: Dict[str, Any] = {"id": v.id, "style": v.client_style.value, "method": v.method_name, "verb": v.verb}
    if v.object_param_index is not None:
        d["object_param_index"] = v.object_param_index
    if v.key_param_index is not None:
        d["key_param_index"] = v.key_param_index
    return d


# -- schema ----------------------------------------------------------------

_IDENT = {"type": "string", "pattern": r"^[A-Za-z0-9_.\-/~*]+$"}
_STR_LIST = {"type": "array", "items": {"type": "string"}}

KB_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version"],
    "properties": {
        "version": {"const": KB_VERSION},
        "libraries": {"type": "array", "items": _IDENT},
        "scope_markers": {"type": "array", "items": {"type": "string", "pattern": r"^\+\S+$"}},
        "setters": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["id", "kind", "owner", "member"],
            "properties": {
                "id": {"type": "string"},
                "kind": {"enum": [k.value for k in SetterKind]},
                "owner": _IDENT,
                "member": {"type": "string"},
                "namespace_param_index": {"type": "integer", "minimum": 0},
            },
        }},
        "builtins": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["kind", "group", "scope", "client"],
            "properties": {
                "kind": {"type": "string"},
                "group": {"type": "string"},
                "version": {"type": "string"},
                "scope": {"enum": [s.value for s in Scope]},
                "client": _IDENT,
            },
        }},
        "verb_methods": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["id", "style", "method", "verb"],
            "properties": {
                "id": {"type": "string"},
                "style": {"enum": [s.value for s in ClientStyle]},
                "method": {"type": "string"},
                "verb": {"enum": list(VERBS)},
                "object_param_index": {"type": "integer", "minimum": 0},
                "key_param_index": {"type": "integer", "minimum": 0},
            },
        }},
        "unified_client_owners": {"type": "array", "items": _IDENT},
        "namespace_accessors": _STR_LIST,
        "sanitizers": {"type": "array", "items": _IDENT},
        "type_aliases": {"type": "object", "additionalProperties": _IDENT},
        "struct_fields": {"type": "object", "additionalProperties": {
            "type": "object", "additionalProperties": {"type": "string"}}},
        "severity_rules": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "critical_kinds": _STR_LIST,
                "sensitive_kinds": _STR_LIST,
                "write_verbs": {"type": "array", "items": {"enum": list(VERBS)}},
                "read_verbs": {"type": "array", "items": {"enum": list(VERBS)}},
            },
        },
        "disable": _STR_LIST,
    },
}


def _line_of(node: Optional[yaml.Node], path: Sequence[Union[str, int]]) -> int:
    """1-based line of the YAML node addressed by a schema error path."""
    if node is None:
        return 1
    line = node.start_mark.line + 1
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    line = k.start_mark.line + 1
                    break
            if nxt is None:
                return line
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            return line
    return line


def _unknown_key_line(node: Optional[yaml.Node], err: jsonschema.ValidationError) -> int:
    base = list(err.absolute_path)
    target = _descend(node, base)
    if isinstance(target, yaml.MappingNode) and err.validator == "additionalProperties":
        allowed = set(err.schema.get("properties", {}))
        for k, _v in target.value:
            if k.value not in allowed:
                return k.start_mark.line + 1
    return _line_of(node, base)


def _descend(node: Optional[yaml.Node], path: Sequence[Union[str, int]]) -> Optional[yaml.Node]:
    for key in path:
        if isinstance(node, yaml.MappingNode):
            node = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            return None
    return node


def _load_document(text: str) -> Dict[str, Any]:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise KbParseError((mark.line + 1) if mark else 1, str(exc.problem or exc)) from None
    if data is None:
        raise KbParseError(1, "empty KB document")
    if not isinstance(data, dict):
        raise KbParseError(1, "KB document must be a mapping")
    validator = jsonschema.Draft202012Validator(KB_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise KbParseError(_unknown_key_line(node, err), err.message)
    return data


# -- construction ----------------------------------------------------------

def _section(data: Mapping[str, Any]) -> Dict[str, Any]:
    sr = data.get("severity_rules") or {}
    return {
        "setters": [
            NamespaceSetterSpec(
                s["id"], SetterKind(s["kind"]), s["owner"], s["member"], s.get("namespace_param_index")
            ) for s in data.get("setters", [])
        ],
        "builtins": [
            BuiltinResourceEntry(b["kind"], b["group"], Scope(b["scope"]), b["client"], b.get("version", "v1"))
            for b in data.get("builtins", [])
        ],
        "verb_methods": [
            VerbMethodSpec(
                v["id"], ClientStyle(v["style"]), v["method"], v["verb"],
                v.get("object_param_index"), v.get("key_param_index"),
            ) for v in data.get("verb_methods", [])
        ],
        "libraries": list(data.get("libraries", [])),
        "scope_markers": list(data.get("scope_markers", [])),
        "unified_client_owners": list(data.get("unified_client_owners", [])),
        "namespace_accessors": list(data.get("namespace_accessors", [])),
        "sanitizers": list(data.get("sanitizers", [])),
        "type_aliases": dict(data.get("type_aliases") or {}),
        "struct_fields": {k: dict(v) for k, v in (data.get("struct_fields") or {}).items()},
        "severity_rules": dict(sr),
        "disable": list(data.get("disable", [])),
    }


def _append_entries(base: List[Any], extra: Iterable[Any]) -> List[Any]:
    out = list(base)
    by_id = {e.id: e for e in out}
    for e in extra:
        prior = by_id.get(e.id)
        if prior is None:
            out.append(e)
            by_id[e.id] = e
        elif prior != e:
            raise KbConflict(e.id)
    return out


def _union(base: Sequence[str], extra: Iterable[str]) -> List[str]:
    out = list(base)
    for x in extra:
        if x not in out:
            out.append(x)
    return out


def _merge_map(base: Dict[str, Any], extra: Mapping[str, Any], what: str) -> Dict[str, Any]:
    out = dict(base)
    for k, v in extra.items():
        if k in out and out[k] != v:
            if isinstance(out[k], dict) and isinstance(v, dict):
                out[k] = _merge_map(out[k], v, f"{what}.{k}")
                continue
            raise KbConflict(f"{what}.{k}")
        out[k] = v
    return out


def _build(sections: List[Dict[str, Any]]) -> KnowledgeBase:
    setters: List[NamespaceSetterSpec] = []
    builtins: List[BuiltinResourceEntry] = []
    verbs: List[VerbMethodSpec] = []
    libs: List[str] = []
    markers: List[str] = []
    owners: List[str] = []
    accessors: List[str] = []
    sanitizers: List[str] = []
    aliases: Dict[str, str] = {}
    fields: Dict[str, Dict[str, str]] = {}
    severity: Dict[str, Any] = {}
    disabled: List[str] = []
    for sec in sections:
        setters = _append_entries(setters, sec["setters"])
        builtins = _append_entries(builtins, sec["builtins"])
        verbs = _append_entries(verbs, sec["verb_methods"])
        libs = _union(libs, sec["libraries"])
        markers = _union(markers, sec["scope_markers"])
        owners = _union(owners, sec["unified_client_owners"])
        accessors = _union(accessors, sec["namespace_accessors"])
        sanitizers = _union(sanitizers, sec["sanitizers"])
        aliases = _merge_map(aliases, sec["type_aliases"], "type_aliases")
        fields = _merge_map(fields, sec["struct_fields"], "struct_fields")
        severity.update(sec["severity_rules"])
        disabled = _union(disabled, sec["disable"])
    off = set(disabled)
    rules = SeverityRules(**{k: tuple(v) for k, v in severity.items()})
    return KnowledgeBase(
        setters=tuple(s for s in setters if s.id not in off),
        builtins=tuple(b for b in builtins if b.id not in off),
        verb_methods=tuple(v for v in verbs if v.id not in off),
        library_identities=tuple(libs),
        scope_markers=tuple(markers),
        unified_client_owners=tuple(owners),
        namespace_accessors=tuple(accessors),
        sanitizers=tuple(sanitizers),
        type_aliases=tuple(sorted(aliases.items())),
        struct_fields=tuple(sorted((k, tuple(sorted(v.items()))) for k, v in fields.items())),
        severity_rules=rules,
        disabled=tuple(disabled),
    )


def default_kb_text() -> str:
    return resources.files("xns_audit").joinpath("data/default_kb.yaml").read_text(encoding="utf-8")


def parse_kb_text(text: str, base: Optional[str] = None) -> KnowledgeBase:
    """Build a KB from ``text``, optionally layered over ``base`` text."""
    sections = []
    if base is not None:
        sections.append(_section(_load_document(base)))
    sections.append(_section(_load_document(text)))
    return _build(sections)


def load_kb(path: Optional[Union[str, os.PathLike]] = None) -> KnowledgeBase:
    """Default KB, merged with the user file at ``path`` when given."""
    default = default_kb_text()
    if path is None:
        return parse_kb_text(default)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise KbParseError(0, f"cannot read {path}: {exc.strerror}") from None
    return parse_kb_text(text, base=default)


def builtin_scope_lookup(kb: KnowledgeBase, type_identity: str) -> Optional[Scope]:
    entry = kb.builtin_by_identity(type_identity)
    return entry.scope if entry is not None else None


# -- setter matching -------------------------------------------------------

@dataclass(frozen=True)
class SetterMatch:
    spec: NamespaceSetterSpec
    value: Expr
    init_index: Optional[int] = None  # CompositeInit element carrying the namespace
    client_kind: Optional[str] = None  # resource identity for constructor sinks


def _is_corpus_target(targets: Sequence[Any]) -> bool:
    return any(isinstance(t, str) for t in targets)


def match_setter(
    kb: KnowledgeBase,
    instr: Instr,
    model: Optional[ProgramModel] = None,
    fid: Optional[str] = None,
    getters: Optional[Mapping[str, Tuple[str, Scope]]] = None,
) -> Optional[SetterMatch]:
    """Match ``instr`` against the KB namespace setters.

    ``model``/``fid`` supply static types (needed for field writes through
    an Assign and for deciding whether a method receiver is corpus code);
    ``getters`` maps corpus Getter constructor names to (kind identity, scope).
    """
    if isinstance(instr, CompositeInit):
        ident = model.canonical(instr.type_ref).identity if model else instr.type_ref.identity
        for spec in kb.setters_of(SetterKind.FIELD_WRITE):
            if spec.owner_identity != ident:
                continue
            for i, (fname, value, _loc) in enumerate(instr.inits):
                if fname == spec.member:
                    return SetterMatch(spec, value, init_index=i)
        return None
    if isinstance(instr, Assign):
        dst = instr.dst
        if not dst.fields or model is None or fid is None:
            return None
        for spec in kb.setters_of(SetterKind.FIELD_WRITE):
            if dst.fields[-1] != spec.member:
                continue
            owner_t = model.type_of(fid, dst.parent())
            hit = model.field_lookup(owner_t, spec.member) if owner_t is not None else None
            if hit is not None and hit[0] == spec.owner_identity:
                return SetterMatch(spec, instr.src)
            if owner_t is not None and model.canonical(owner_t).identity == spec.owner_identity:
                return SetterMatch(spec, instr.src)
        return None
    if not isinstance(instr, Call):
        return None
    name = instr.callee.name
    targets = model.resolve_call(fid, instr) if (model is not None and fid is not None) else []
    corpus = _is_corpus_target(targets)
    if instr.callee.kind is CalleeKind.METHOD and not corpus:
        for spec in kb.setters_of(SetterKind.METHOD_CALL):
            idx = spec.namespace_param_index or 0
            if spec.member == name and idx < len(instr.args):
                return SetterMatch(spec, instr.args[idx])
    if instr.callee.kind in (CalleeKind.METHOD, CalleeKind.FUNCTION):
        ctor_specs = kb.setters_of(SetterKind.CLIENT_CONSTRUCTOR)
        go_spec = next((s for s in ctor_specs if s.id == "ctor.client-go"), None)
        gen_spec = next((s for s in ctor_specs if s.id == "ctor.client-gen"), None)
        if getters and gen_spec is not None and name in getters and len(instr.args) == 1:
            kind, scope = getters[name]
            if scope is Scope.NAMESPACED:
                idx = gen_spec.namespace_param_index or 0
                return SetterMatch(gen_spec, instr.args[idx], client_kind=kind)
        if go_spec is not None and not corpus and len(instr.args) == 1:
            entry = kb.builtin_by_constructor(name, arity=1)
            if entry is not None:
                idx = go_spec.namespace_param_index or 0
                return SetterMatch(go_spec, instr.args[idx], client_kind=entry.identity)
        for spec in ctor_specs:
            if spec.id in ("ctor.client-go", "ctor.client-gen") or corpus:
                continue
            if spec.member == name and len(instr.args) > (spec.namespace_param_index or 0):
                return SetterMatch(spec, instr.args[spec.namespace_param_index or 0])
    return None


# -- constructor-arity derivation -----------------------------------------

GROUP_DIRS: Dict[str, str] = {
    "core": "",
    "apps": "apps",
    "batch": "batch",
    "autoscaling": "autoscaling",
    "policy": "policy",
    "rbac": "rbac.authorization.k8s.io",
    "networking": "networking.k8s.io",
    "storage": "storage.k8s.io",
    "admissionregistration": "admissionregistration.k8s.io",
    "apiextensions": "apiextensions.k8s.io",
    "certificates": "certificates.k8s.io",
    "coordination": "coordination.k8s.io",
    "discovery": "discovery.k8s.io",
    "events": "events.k8s.io",
    "node": "node.k8s.io",
    "scheduling": "scheduling.k8s.io",
    "flowcontrol": "flowcontrol.apiserver.k8s.io",
    "resource": "resource.k8s.io",
}


def group_for_dir(name: str) -> str:
    return GROUP_DIRS.get(name, f"{name}.k8s.io")


@dataclass(frozen=True)
class GetterConstructor:
    getter: str  # Getter interface identity
    method: str
    kind: str
    kind_identity: str
    scope: Scope
    package_path: str

    @property
    def client_identity(self) -> str:
        return f"{self.getter}.{self.method}"


def getter_constructors(model: ProgramModel) -> List[GetterConstructor]:
    """Typed-client constructors declared by ``*Getter`` interfaces.

    One namespace parameter marks a namespaced kind, none a cluster-scoped
    one. The kind comes from the ``Get`` result of the returned interface.
    """
    out: List[GetterConstructor] = []
    for ident in sorted(model.types):
        decl = model.types[ident]
        if decl.kind != "interface" or not decl.name.endswith("Getter"):
            continue
        for m in decl.methods:
            if len(m.params) > 1 or not m.results:
                continue
            iface_t = m.results[0]
            iface = model.types.get(iface_t.identity)
            kind_t = None
            if iface is not None and iface.kind == "interface":
                get = next((x for x in iface.methods if x.name == "Get"), None)
                if get is not None and get.results:
                    kind_t = get.results[0]
            if kind_t is None:
                if not iface_t.name.endswith("Interface"):
                    continue
                kind_name = iface_t.name[: -len("Interface")]
                kind_ident = kind_name
            else:
                kind_name = kind_t.name
                kind_ident = kind_t.identity
            scope = Scope.NAMESPACED if len(m.params) == 1 else Scope.CLUSTER
            out.append(GetterConstructor(decl.identity, m.name, kind_name, kind_ident, scope, decl.package_path))
    return out


def derive_builtins(model: ProgramModel) -> List[BuiltinResourceEntry]:
    entries: List[BuiltinResourceEntry] = []
    for g in getter_constructors(model):
        parts = g.package_path.split("/")
        version = parts[-1] if parts else "v1"
        group_dir = parts[-2] if len(parts) >= 2 else "core"
        entries.append(BuiltinResourceEntry(g.kind, group_for_dir(group_dir), g.scope, g.client_identity, version))
    entries.sort(key=lambda e: (e.group, e.kind))
    return entries


def derived_fragment(entries: Sequence[BuiltinResourceEntry]) -> str:
    doc = {
        "version": KB_VERSION,
        "builtins": [
            {"kind": b.kind, "group": b.group, "version": b.version,
             "scope": b.scope.value, "client": b.typed_client_identity}
            for b in entries
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False)
