"""Dataflow IR for operator source trees.

Function bodies are lowered into a flat list of instructions over
``Place`` values (a root variable plus a field path). Calls nested inside
expressions are hoisted into temporaries named ``$tN`` so every operand
is either a place read, a constant or an opaque combination of those.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

PREDECLARED_TYPES = frozenset({
    "bool", "byte", "complex64", "complex128", "error", "float32", "float64",
    "int", "int8", "int16", "int32", "int64", "rune", "string",
    "uint", "uint8", "uint16", "uint32", "uint64", "uintptr", "any",
})


@dataclass(frozen=True, order=True)
class Location:
    path: str
    line: int

    def __str__(self) -> str:
        return f"{self.path}:{self.line}"


class Resolution(str, Enum):
    PENDING = "Pending"
    LOCAL = "Local"
    EXTERNAL = "External"
    PREDECLARED = "Predeclared"
    UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class TypeRef:
    """A named type, optionally wrapped in containers.

    ``wrappers`` lists container constructors outermost first (``"[]"`` for
    slices and arrays, ``"map"`` for map values, ``"chan"``). Pointers are
    transparent and never recorded.
    """

    package_path: str
    name: str
    resolution: Resolution = Resolution.PENDING
    wrappers: Tuple[str, ...] = ()

    @property
    def identity(self) -> str:
        if not self.package_path:
            return self.name
        return f"{self.package_path}.{self.name}"

    @property
    def is_container(self) -> bool:
        return bool(self.wrappers)

    def elem(self) -> "TypeRef":
        if not self.wrappers:
            return self
        return TypeRef(self.package_path, self.name, self.resolution, self.wrappers[1:])

    def named(self) -> "TypeRef":
        return TypeRef(self.package_path, self.name, self.resolution, ())


UNKNOWN_TYPE = TypeRef("", "", Resolution.UNRESOLVED)


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type_ref: TypeRef
    is_embedded: bool = False
    json_tag: Optional[str] = None


@dataclass(frozen=True)
class MethodSpec:
    """A method signature declared inside an interface type."""

    name: str
    params: Tuple[Tuple[str, TypeRef], ...]
    results: Tuple[TypeRef, ...]


@dataclass(frozen=True)
class TypeDecl:
    name: str
    package_path: str
    fields: Tuple[FieldDecl, ...]
    doc_comments: Tuple[str, ...]
    location: Location
    kind: str = "struct"  # struct | interface | alias | other
    methods: Tuple[MethodSpec, ...] = ()
    underlying: Optional[TypeRef] = None

    @property
    def identity(self) -> str:
        return f"{self.package_path}.{self.name}"

    def field_named(self, name: str) -> Optional[FieldDecl]:
        for f in self.fields:
            if f.name == name:
                return f
        return None


class RootKind(str, Enum):
    PARAM = "Param"
    LOCAL = "Local"
    GLOBAL = "Global"


RECEIVER_INDEX = -1


@dataclass(frozen=True, order=True)
class Place:
    """A root variable plus a (possibly empty) field path.

    For ``Param`` roots ``key`` is the parameter index as a string
    (``"-1"`` for the method receiver); for locals it is the variable name
    and for globals the canonical identity.
    """

    kind: RootKind
    key: str
    fields: Tuple[str, ...] = ()

    @staticmethod
    def param(index: int, *fields: str) -> "Place":
        return Place(RootKind.PARAM, str(index), tuple(fields))

    @staticmethod
    def local(name: str, *fields: str) -> "Place":
        return Place(RootKind.LOCAL, name, tuple(fields))

    @property
    def root(self) -> "Place":
        return Place(self.kind, self.key, ())

    @property
    def param_index(self) -> Optional[int]:
        return int(self.key) if self.kind is RootKind.PARAM else None

    def child(self, *names: str) -> "Place":
        return Place(self.kind, self.key, self.fields + tuple(names))

    def parent(self) -> "Place":
        return Place(self.kind, self.key, self.fields[:-1])

    def is_prefix_of(self, other: "Place") -> bool:
        return (
            self.kind == other.kind
            and self.key == other.key
            and other.fields[: len(self.fields)] == self.fields
        )

    def is_temp(self) -> bool:
        return self.kind is RootKind.LOCAL and self.key.startswith("$")

    def render(self, names: Optional[Dict[str, str]] = None) -> str:
        if self.kind is RootKind.PARAM and names is not None:
            base = names.get(self.key, f"param{self.key}")
        elif self.kind is RootKind.PARAM:
            base = "recv" if self.key == str(RECEIVER_INDEX) else f"param{self.key}"
        else:
            base = self.key
        return ".".join((base,) + self.fields)


@dataclass(frozen=True)
class PlaceRead:
    place: Place
    elem: bool = False  # element of the container at ``place``


@dataclass(frozen=True)
class Const:
    value: str


@dataclass(frozen=True)
class Opaque:
    operands: Tuple["Expr", ...]


Expr = Union[PlaceRead, Const, Opaque]


def expr_places(expr: Expr) -> List[Place]:
    if isinstance(expr, PlaceRead):
        return [expr.place]
    if isinstance(expr, Opaque):
        out: List[Place] = []
        for op in expr.operands:
            out.extend(expr_places(op))
        return out
    return []


class CalleeKind(str, Enum):
    FUNCTION = "Function"  # package-qualified function identity
    METHOD = "Method"  # method selected on a receiver expression
    CLOSURE = "Closure"  # closure FuncDecl id
    DYNAMIC = "Dynamic"  # call through a function value
    BUILTIN = "Builtin"


@dataclass(frozen=True)
class CalleeRef:
    kind: CalleeKind
    name: str
    target: str = ""  # identity for FUNCTION, fid for CLOSURE


@dataclass(frozen=True)
class Assign:
    dst: Place
    src: Expr
    location: Location


@dataclass(frozen=True)
class Call:
    callee: CalleeRef
    receiver: Optional[Expr]
    args: Tuple[Expr, ...]
    dsts: Tuple[Place, ...]
    location: Location


@dataclass(frozen=True)
class CompositeInit:
    """``inits`` holds (field or None for elements, value, element location)."""

    dst: Place
    type_ref: TypeRef
    inits: Tuple[Tuple[Optional[str], Expr, Location], ...]
    location: Location


@dataclass(frozen=True)
class Return:
    values: Tuple[Expr, ...]
    location: Location


@dataclass(frozen=True)
class OpaqueStmt:
    """Marker for a statement with no dataflow effect."""

    text: str
    location: Location


Instr = Union[Assign, Call, CompositeInit, Return, OpaqueStmt]
DATAFLOW_INSTRS = (Assign, Call, CompositeInit, Return)


@dataclass
class FuncDecl:
    fid: str
    name: str
    package_path: str
    receiver: Optional[TypeRef]
    params: List[Tuple[str, TypeRef]]
    results: List[TypeRef]
    body: List[Instr]
    location: Location
    receiver_name: str = ""
    local_types: Dict[str, TypeRef] = field(default_factory=dict)
    captures: List[Tuple[str, Place]] = field(default_factory=list)
    parent: Optional[str] = None
    statement_count: int = 0

    def param_names(self) -> Dict[str, str]:
        names = {str(i): n for i, (n, _) in enumerate(self.params)}
        if self.receiver is not None:
            names[str(RECEIVER_INDEX)] = self.receiver_name or "recv"
        return names

    def dataflow_count(self) -> int:
        return sum(1 for i in self.body if isinstance(i, DATAFLOW_INSTRS))


@dataclass(frozen=True)
class ExternalCallee:
    identity: str  # "<owner identity>.<name>" or "Unknown.<name>"

    @property
    def name(self) -> str:
        return self.identity.rsplit(".", 1)[-1]

    @property
    def owner(self) -> str:
        return self.identity.rsplit(".", 1)[0]

    @property
    def is_unknown(self) -> bool:
        return self.owner == "Unknown"


CallTarget = Union[str, ExternalCallee]  # corpus fid or external record


@dataclass(frozen=True, order=True)
class CallEdge:
    caller: str
    site: int  # instruction index in the caller body
    location: Location
    callee: str  # fid, or "ext:<identity>"


@dataclass
class CallGraph:
    edges: List[CallEdge] = field(default_factory=list)
    targets: Dict[Tuple[str, int], List[CallTarget]] = field(default_factory=dict)

    def callees(self, fid: str, site: int) -> List[CallTarget]:
        return self.targets.get((fid, site), [])

    def callers_of(self, fid: str) -> List[Tuple[str, int]]:
        return sorted(
            {(e.caller, e.site) for e in self.edges if e.callee == fid}
        )
