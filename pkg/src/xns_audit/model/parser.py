"""Go source parsing (tree-sitter) and lowering into the dataflow IR."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import tree_sitter_go
from tree_sitter import Language, Node, Parser

from .corpus import SourceUnit
from .ir import (
    PREDECLARED_TYPES,
    RECEIVER_INDEX,
    Assign,
    Call,
    CalleeKind,
    CalleeRef,
    CompositeInit,
    Const,
    Expr,
    FieldDecl,
    FuncDecl,
    Instr,
    Location,
    MethodSpec,
    Opaque,
    OpaqueStmt,
    Place,
    PlaceRead,
    Resolution,
    Return,
    RootKind,
    TypeDecl,
    TypeRef,
    UNKNOWN_TYPE,
)

GO_LANGUAGE = Language(tree_sitter_go.language())

BUILTIN_FUNCS = frozenset({
    "append", "cap", "clear", "close", "complex", "copy", "delete", "imag",
    "len", "make", "max", "min", "new", "panic", "print", "println", "real",
    "recover",
})

LITERAL_NODES = frozenset({
    "int_literal", "float_literal", "imaginary_literal", "rune_literal",
    "interpreted_string_literal", "raw_string_literal", "true", "false",
    "nil", "iota",
})

TYPE_NODES = frozenset({
    "type_identifier", "qualified_type", "pointer_type", "slice_type",
    "array_type", "map_type", "channel_type", "generic_type", "function_type",
    "interface_type", "struct_type", "parenthesized_type",
})

STATEMENT_NODES = frozenset({
    "short_var_declaration", "assignment_statement", "var_declaration",
    "const_declaration", "type_declaration", "expression_statement",
    "return_statement", "if_statement", "for_statement",
    "expression_switch_statement", "type_switch_statement", "select_statement",
    "go_statement", "defer_statement", "inc_statement", "dec_statement",
    "send_statement", "labeled_statement", "break_statement",
    "continue_statement", "goto_statement", "fallthrough_statement",
    "block", "empty_statement",
})

_JSON_TAG = re.compile(r'json:"([^"]*)"')
_VERSION_SUFFIX = re.compile(r"\.v\d+$")


def default_import_name(path: str) -> str:
    last = path.rstrip("/").rsplit("/", 1)[-1]
    last = _VERSION_SUFFIX.sub("", last)
    if last.startswith("go-"):
        last = last[3:]
    if last.endswith("-go"):
        last = last[:-3]
    return last.replace("-", "").replace(".", "")


def _text(node: Optional[Node]) -> str:
    if node is None:
        return ""
    return node.text.decode("utf-8", errors="replace")


def _named(node: Node) -> List[Node]:
    return [c for c in node.children if c.is_named and c.type != "comment"]


@dataclass
class ParsedUnit:
    unit: SourceUnit
    package_name: str
    imports: Dict[str, str]
    types: List[TypeDecl]
    funcs: List[FuncDecl]
    consts: Set[str] = field(default_factory=set)
    globals: Set[str] = field(default_factory=set)


def parse_unit(unit: SourceUnit) -> ParsedUnit:
    """Extract declarations from one source file and lower function bodies.

    Syntax errors are recorded on ``unit.parse_diagnostics``; declarations
    that are still syntactically complete are kept.
    """
    parser = Parser(GO_LANGUAGE)
    tree = parser.parse(unit.text)
    root = tree.root_node
    unit.parse_diagnostics = _collect_errors(root)
    return _UnitLowerer(unit, root).run()


def _collect_errors(root: Node) -> List[Tuple[int, str]]:
    out: List[Tuple[int, str]] = []
    if not root.has_error:
        return out
    stack = [root]
    while stack:
        n = stack.pop()
        if n.is_missing:
            out.append((n.start_point[0] + 1, f"missing {n.type}"))
        elif n.type == "ERROR":
            out.append((n.start_point[0] + 1, "syntax error"))
        elif n.has_error:
            stack.extend(reversed(n.children))
    out.sort()
    return out


class _UnitLowerer:
    def __init__(self, unit: SourceUnit, root: Node):
        self.unit = unit
        self.root = root
        self.pkg = unit.package_path
        self.imports: Dict[str, str] = {}
        self.package_name = ""
        self.types: List[TypeDecl] = []
        self.funcs: List[FuncDecl] = []
        self.consts: Set[str] = set()
        self.globals: Set[str] = set()

    def loc(self, node: Node) -> Location:
        return Location(self.unit.path, node.start_point[0] + 1)

    def run(self) -> ParsedUnit:
        children = self.root.children
        for i, node in enumerate(children):
            t = node.type
            if t == "package_clause":
                self.package_name = _text(_named(node)[0]) if _named(node) else ""
            elif t == "import_declaration":
                self._imports(node)
            elif t == "type_declaration":
                self._type_decl(node, self._doc_before(children, i))
            elif t in ("function_declaration", "method_declaration"):
                self._func_decl(node)
            elif t == "const_declaration":
                self._package_values(node, self.consts)
            elif t == "var_declaration":
                self._package_values(node, self.globals)
        return ParsedUnit(
            self.unit, self.package_name, dict(self.imports), self.types,
            self.funcs, self.consts, self.globals,
        )

    # -- declarations ------------------------------------------------------

    def _imports(self, node: Node) -> None:
        for spec in _iter_type(node, "import_spec"):
            path = _text(spec.child_by_field_name("path")).strip('"`')
            name_node = spec.child_by_field_name("name")
            alias = _text(name_node) if name_node is not None else default_import_name(path)
            if alias in ("_", "."):
                continue
            self.imports[alias] = path

    def _package_values(self, node: Node, into: Set[str]) -> None:
        for spec in _iter_type(node, ("const_spec", "var_spec")):
            for c in spec.children_by_field_name("name"):
                into.add(f"{self.pkg}.{_text(c)}")

    @staticmethod
    def _doc_before(siblings: Sequence[Node], index: int) -> List[str]:
        """Contiguous comment lines ending right above ``siblings[index]``."""
        lines: List[str] = []
        expect = siblings[index].start_point[0]
        j = index - 1
        while j >= 0 and siblings[j].type == "comment":
            c = siblings[j]
            if c.end_point[0] != expect - 1 and c.end_point[0] != expect:
                break
            lines[:0] = _text(c).splitlines()
            expect = c.start_point[0]
            j -= 1
        return lines

    def _type_decl(self, node: Node, outer_doc: List[str]) -> None:
        kids = list(node.children)
        specs = [(i, c) for i, c in enumerate(kids) if c.type in ("type_spec", "type_alias")]
        grouped = any(c.type == "(" for c in kids)
        for i, spec in specs:
            doc = self._doc_before(kids, i) if grouped else []
            if not grouped or len(specs) == 1:
                doc = outer_doc + doc
            self._type_spec(spec, doc)

    def _type_spec(self, spec: Node, doc: List[str]) -> None:
        name = _text(spec.child_by_field_name("name"))
        generics = _type_param_names(spec.child_by_field_name("type_parameters"))
        tnode = spec.child_by_field_name("type")
        location = self.loc(spec)
        if spec.type == "type_alias":
            self.types.append(TypeDecl(
                name, self.pkg, (), tuple(doc), location, kind="alias",
                underlying=self.type_ref(tnode, generics),
            ))
            return
        if tnode is not None and tnode.type == "struct_type":
            self.types.append(TypeDecl(
                name, self.pkg, tuple(self._struct_fields(tnode, generics)),
                tuple(doc), location, kind="struct",
            ))
        elif tnode is not None and tnode.type == "interface_type":
            self.types.append(TypeDecl(
                name, self.pkg, (), tuple(doc), location, kind="interface",
                methods=tuple(self._interface_methods(tnode, generics)),
            ))
        else:
            self.types.append(TypeDecl(
                name, self.pkg, (), tuple(doc), location, kind="other",
                underlying=self.type_ref(tnode, generics),
            ))

    def _struct_fields(self, struct: Node, generics: Set[str]) -> List[FieldDecl]:
        out: List[FieldDecl] = []
        seen: Set[str] = set()
        for fd in _iter_type(struct, "field_declaration"):
            tnode = fd.child_by_field_name("type")
            tref = self.type_ref(tnode, generics)
            tag_node = fd.child_by_field_name("tag")
            tag = None
            if tag_node is not None:
                m = _JSON_TAG.search(_text(tag_node))
                tag = m.group(1) if m else None
            names = [_text(n) for n in fd.children_by_field_name("name")]
            if not names:
                names, embedded = [tref.name], True
            else:
                embedded = False
            for n in names:
                if n in seen:
                    continue
                seen.add(n)
                out.append(FieldDecl(n, tref, embedded, tag))
        return out

    def _interface_methods(self, iface: Node, generics: Set[str]) -> List[MethodSpec]:
        out: List[MethodSpec] = []
        for m in _named(iface):
            if m.type != "method_elem":
                continue
            params = tuple(self._params(m.child_by_field_name("parameters"), generics))
            results = tuple(t for _, t in self._params(m.child_by_field_name("result"), generics))
            out.append(MethodSpec(_text(m.child_by_field_name("name")), params, results))
        return out

    def _params(self, plist: Optional[Node], generics: Set[str]) -> List[Tuple[str, TypeRef]]:
        if plist is None:
            return []
        if plist.type != "parameter_list":
            return [("", self.type_ref(plist, generics))]
        out: List[Tuple[str, TypeRef]] = []
        for p in _named(plist):
            if p.type not in ("parameter_declaration", "variadic_parameter_declaration"):
                continue
            tref = self.type_ref(p.child_by_field_name("type"), generics)
            if p.type == "variadic_parameter_declaration":
                tref = TypeRef(tref.package_path, tref.name, tref.resolution, ("[]",) + tref.wrappers)
            names = [_text(n) for n in p.children_by_field_name("name")]
            for n in names or [""]:
                out.append((n, tref))
        return out

    def type_ref(self, node: Optional[Node], generics: Set[str] = frozenset()) -> TypeRef:
        if node is None:
            return UNKNOWN_TYPE
        t = node.type
        if t == "type_identifier" or t == "identifier":
            name = _text(node)
            if name in generics:
                return TypeRef("", name, Resolution.UNRESOLVED)
            if name in PREDECLARED_TYPES:
                return TypeRef("", name, Resolution.PREDECLARED)
            return TypeRef(self.pkg, name)
        if t == "qualified_type":
            alias = _text(node.child_by_field_name("package"))
            name = _text(node.child_by_field_name("name"))
            if alias in self.imports:
                return TypeRef(self.imports[alias], name, Resolution.EXTERNAL)
            return TypeRef(alias, name, Resolution.UNRESOLVED)
        if t in ("pointer_type", "parenthesized_type"):
            inner = _named(node)
            return self.type_ref(inner[0] if inner else None, generics)
        if t in ("slice_type", "array_type"):
            return _wrap("[]", self.type_ref(node.child_by_field_name("element"), generics))
        if t == "map_type":
            return _wrap("map", self.type_ref(node.child_by_field_name("value"), generics))
        if t == "channel_type":
            return _wrap("chan", self.type_ref(node.child_by_field_name("value"), generics))
        if t == "generic_type":
            return self.type_ref(node.child_by_field_name("type"), generics)
        if t == "type_elem" or t == "type_constraint":
            inner = _named(node)
            return self.type_ref(inner[0] if inner else None, generics)
        return UNKNOWN_TYPE

    def _func_decl(self, node: Node) -> None:
        name = _text(node.child_by_field_name("name"))
        generics = _type_param_names(node.child_by_field_name("type_parameters"))
        receiver: Optional[TypeRef] = None
        receiver_name = ""
        recv_node = node.child_by_field_name("receiver")
        if recv_node is not None:
            rparams = [p for p in _named(recv_node) if p.type == "parameter_declaration"]
            if rparams:
                rp = rparams[0]
                rtype = rp.child_by_field_name("type")
                generics = generics | _receiver_generics(rtype)
                receiver = self.type_ref(rtype, generics)
                receiver_name = _text(rp.child_by_field_name("name"))
        if receiver is not None:
            fid = f"{self.pkg}.{receiver.name}.{name}"
        else:
            fid = f"{self.pkg}.{name}"
        params = self._params(node.child_by_field_name("parameters"), generics)
        result_node = node.child_by_field_name("result")
        named_results = self._params(result_node, generics) if result_node is not None else []
        fn = FuncDecl(
            fid=fid, name=name, package_path=self.pkg, receiver=receiver,
            params=params, results=[t for _, t in named_results], body=[],
            location=self.loc(node), receiver_name=receiver_name,
        )
        body = node.child_by_field_name("body")
        _FuncLowerer(self, fn, generics, named_results).lower(body)
        self.funcs.append(fn)


def _wrap(kind: str, inner: TypeRef) -> TypeRef:
    return TypeRef(inner.package_path, inner.name, inner.resolution, (kind,) + inner.wrappers)


def _iter_type(node: Node, types) -> List[Node]:
    if isinstance(types, str):
        types = (types,)
    out: List[Node] = []
    stack = [node]
    while stack:
        n = stack.pop()
        if n.type in types:
            out.append(n)
            continue
        stack.extend(reversed(n.children))
    return out


def _type_param_names(node: Optional[Node]) -> Set[str]:
    if node is None:
        return set()
    names: Set[str] = set()
    for d in _iter_type(node, "type_parameter_declaration"):
        for n in d.children_by_field_name("name"):
            names.add(_text(n))
    return names


def _receiver_generics(rtype: Optional[Node]) -> Set[str]:
    # func (r *List[T]) ... declares T through the receiver
    if rtype is None:
        return set()
    names: Set[str] = set()
    for g in _iter_type(rtype, "type_arguments"):
        for c in _named(g):
            names.add(_text(c))
    return names


class _Scope:
    __slots__ = ("names",)

    def __init__(self) -> None:
        self.names: Dict[str, Place] = {}


class _FuncLowerer:
    """Lowers one function (or closure) body into ``fn.body``."""

    def __init__(
        self,
        unit: _UnitLowerer,
        fn: FuncDecl,
        generics: Set[str],
        named_results: Sequence[Tuple[str, TypeRef]] = (),
        parent: Optional["_FuncLowerer"] = None,
    ):
        self.u = unit
        self.fn = fn
        self.generics = generics
        self.parent = parent
        self.scopes: List[_Scope] = [_Scope()]
        self.used_names: Set[str] = set()
        self.closure_of: Dict[str, str] = {}  # local unique name -> closure fid
        self.temp_counter = 0
        self.closure_counter = 0
        self.named_results: List[Place] = []
        if fn.receiver is not None and fn.receiver_name not in ("", "_"):
            self.scopes[0].names[fn.receiver_name] = Place.param(RECEIVER_INDEX)
        for i, (name, _t) in enumerate(fn.params):
            if name and name != "_":
                self.scopes[0].names[name] = Place.param(i)
                self.used_names.add(name)
        for name, t in named_results:
            if name and name != "_":
                p = self.declare(name, t)
                self.named_results.append(p)

    # -- scopes ------------------------------------------------------------

    def lookup(self, name: str) -> Optional[Place]:
        for s in reversed(self.scopes):
            if name in s.names:
                return s.names[name]
        if self.parent is not None:
            outer = self.parent.lookup(name)
            if outer is not None:
                inner = Place.local("^" + name)
                if all(n != inner.key for n, _ in self.fn.captures):
                    self.fn.captures.append((inner.key, outer))
                self.scopes[0].names[name] = inner
                return inner
        return None

    def fresh(self, name: str, tref: Optional[TypeRef] = None) -> Place:
        unique = name
        n = 1
        while unique in self.used_names:
            n += 1
            unique = f"{name}#{n}"
        self.used_names.add(unique)
        if tref is not None:
            self.fn.local_types[unique] = tref
        return Place.local(unique)

    def declare(self, name: str, tref: Optional[TypeRef] = None) -> Place:
        p = self.fresh(name, tref)
        self.scopes[-1].names[name] = p
        return p

    def bind(self, pending: List[Tuple[str, Place]]) -> None:
        for name, p in pending:
            self.scopes[-1].names[name] = p

    def temp(self) -> Place:
        self.temp_counter += 1
        return Place.local(f"$t{self.temp_counter}")

    def emit(self, instr: Instr) -> None:
        self.fn.body.append(instr)

    def loc(self, node: Node) -> Location:
        return self.u.loc(node)

    def is_package_alias(self, name: str) -> bool:
        return name in self.u.imports and self.lookup(name) is None

    # -- statements --------------------------------------------------------

    def lower(self, body: Optional[Node]) -> None:
        if body is None:
            return
        self.block(body)

    def block(self, node: Node) -> None:
        self.scopes.append(_Scope())
        for c in _named(node):
            if c.type == "statement_list":
                for s in _named(c):
                    self.stmt(s)
            else:
                self.stmt(c)
        self.scopes.pop()

    def stmt(self, node: Node) -> None:
        t = node.type
        if t in ("block", "statement_list"):
            self.block(node)
            return
        if t == "empty_statement":
            return
        self.fn.statement_count += 1
        before = len(self.fn.body)
        handler = getattr(self, "s_" + t, None)
        if handler is not None:
            handler(node)
        if len(self.fn.body) == before:
            self.emit(OpaqueStmt(t, self.loc(node)))

    def s_expression_statement(self, node: Node) -> None:
        for c in _named(node):
            self.expr(c, discard=True)

    def s_go_statement(self, node: Node) -> None:
        self.s_expression_statement(node)

    s_defer_statement = s_go_statement

    def s_short_var_declaration(self, node: Node) -> None:
        self.assignment(node, define=True)

    def s_assignment_statement(self, node: Node) -> None:
        op = ""
        for c in node.children:
            if not c.is_named:
                op = _text(c)
        self.assignment(node, define=False, compound=op not in ("=", ":="))

    def s_receive_statement(self, node: Node) -> None:
        left = node.child_by_field_name("left")
        right = node.child_by_field_name("right")
        value = self.expr(right) if right is not None else Const("")
        if left is None:
            return
        targets = _named(left)
        define = any(_text(c) == ":=" for c in node.children if not c.is_named)
        for i, t in enumerate(targets):
            dst = self.target(t, define)
            if dst is not None:
                self.emit(Assign(dst, value if i == 0 else Const("ok"), self.loc(node)))

    def assignment(self, node: Node, define: bool, compound: bool = False) -> None:
        left = _named(node.child_by_field_name("left"))
        right = _named(node.child_by_field_name("right"))
        location = self.loc(node)
        if len(right) == 1 and len(left) > 1:
            rhs = right[0]
            inner = _strip_parens(rhs)
            if inner.type == "call_expression" and not self._is_conversion_or_builtin(inner):
                pending: List[Tuple[str, Place]] = []
                dsts = [self.target(t, define, pending) or self.temp() for t in left]
                self.call(inner, tuple(dsts))
                self.bind(pending)
                return
            value = self.expr(rhs)
            for i, t in enumerate(left):
                dst = self.target(t, define)
                if dst is not None:
                    self.emit(Assign(dst, value if i == 0 else Const("ok"), location))
            return
        if len(left) == 1 and len(right) == 1 and not compound:
            if self._direct_init(left[0], right[0], define):
                return
        values = [self.expr(r) for r in right]
        for t, v in zip(left, values):
            dst = self.target(t, define)
            if dst is None:
                continue
            if compound:
                v = Opaque((PlaceRead(dst), v))
            self.emit(Assign(dst, v, location))

    def _direct_init(self, left: Node, right: Node, define: bool) -> bool:
        """``x := T{...}`` and ``x := f(...)`` write straight into ``x``."""
        inner = _strip_parens(right)
        if inner.type == "unary_expression" and _unary_op(inner) == "&":
            inner = _strip_parens(inner.child_by_field_name("operand"))
        if inner.type == "composite_literal" or (
            inner.type == "call_expression" and not self._is_conversion_or_builtin(inner)
        ):
            pending: List[Tuple[str, Place]] = []
            dst = self.target(left, define, pending)
            if dst is None:
                return False
            if inner.type == "composite_literal":
                self.composite(inner, dst)
            else:
                self.call(inner, (dst,))
            self.bind(pending)
            return True
        if inner.type == "func_literal" and left.type == "identifier" and _text(left) != "_":
            dst = self.target(left, define)
            if dst is None:
                return False
            fid = self.closure(inner)
            self.closure_of[dst.key] = fid
            self.emit(Assign(dst, Const("func"), self.loc(left)))
            return True
        return False

    def target(
        self, node: Node, define: bool, pending: Optional[List[Tuple[str, Place]]] = None
    ) -> Optional[Place]:
        """Place written by an assignment target, declaring it for ``:=``.

        With ``pending`` the new name is bound only when the caller calls
        ``bind`` so the right-hand side still sees any outer variable.
        """
        node = _strip_parens(node)
        t = node.type
        if t == "identifier":
            name = _text(node)
            if name == "_":
                return None
            if define and name not in self.scopes[-1].names:
                if pending is not None:
                    p = self.fresh(name)
                    pending.append((name, p))
                    return p
                return self.declare(name)
            p = self.lookup(name)
            if p is None:
                return Place(RootKind.GLOBAL, f"{self.u.pkg}.{name}")
            return p
        value = self.expr(node)
        if isinstance(value, PlaceRead):
            return value.place
        return None

    def s_var_declaration(self, node: Node) -> None:
        for spec in _iter_type(node, "var_spec"):
            names = spec.children_by_field_name("name")
            tnode = spec.child_by_field_name("type")
            tref = self.u.type_ref(tnode, self.generics) if tnode is not None else None
            value_list = spec.child_by_field_name("value")
            values = _named(value_list) if value_list is not None else []
            if len(values) == 1 and len(names) > 1:
                inner = _strip_parens(values[0])
                if inner.type == "call_expression":
                    dsts = tuple(self.fresh(_text(n), tref) for n in names)
                    self.call(inner, dsts)
                    self.bind([(_text(n), d) for n, d in zip(names, dsts) if _text(n) != "_"])
                    continue
            for i, n in enumerate(names):
                name = _text(n)
                if i < len(values):
                    if name != "_":
                        dst = self.fresh(name, tref)
                        v = _strip_parens(values[i])
                        if v.type == "unary_expression" and _unary_op(v) == "&":
                            v = _strip_parens(v.child_by_field_name("operand"))
                        if v.type == "composite_literal":
                            self.composite(v, dst)
                        elif v.type == "call_expression" and not self._is_conversion_or_builtin(v):
                            self.call(v, (dst,))
                        else:
                            self.emit(Assign(dst, self.expr(values[i]), self.loc(spec)))
                        self.bind([(name, dst)])
                    else:
                        self.expr(values[i], discard=True)
                elif name != "_":
                    dst = self.declare(name, tref)
                    self.emit(Assign(dst, Const("zero"), self.loc(spec)))

    def s_const_declaration(self, node: Node) -> None:
        for spec in _iter_type(node, "const_spec"):
            for n in spec.children_by_field_name("name"):
                dst = self.declare(_text(n))
                self.emit(Assign(dst, Const(_text(spec)), self.loc(spec)))

    def s_type_declaration(self, node: Node) -> None:
        pass

    def s_return_statement(self, node: Node) -> None:
        values: List[Expr] = []
        for c in _named(node):
            if c.type == "expression_list":
                values.extend(self.expr(e) for e in _named(c))
            else:
                values.append(self.expr(c))
        if not values and self.named_results:
            values = [PlaceRead(p) for p in self.named_results]
        self.emit(Return(tuple(values), self.loc(node)))

    def _header(self, node: Node, fields: Sequence[str]) -> None:
        before = len(self.fn.body)
        for f in fields:
            c = node.child_by_field_name(f)
            if c is None:
                continue
            if c.type in STATEMENT_NODES or c.type.endswith("_statement") or c.type == "short_var_declaration":
                self.stmt(c)
            else:
                self.expr(c, discard=True)
        if len(self.fn.body) == before:
            self.emit(OpaqueStmt(node.type, self.loc(node)))

    def s_if_statement(self, node: Node) -> None:
        self.scopes.append(_Scope())
        self._header(node, ("initializer", "condition"))
        cons = node.child_by_field_name("consequence")
        if cons is not None:
            self.block(cons)
        alt = node.child_by_field_name("alternative")
        if alt is not None:
            if alt.type == "block":
                self.block(alt)
            else:
                self.stmt(alt)
        self.scopes.pop()

    def s_for_statement(self, node: Node) -> None:
        self.scopes.append(_Scope())
        header = [c for c in _named(node) if c is not node.child_by_field_name("body")]
        emitted = len(self.fn.body)
        for h in header:
            if h.type == "range_clause":
                self._range(h)
            elif h.type == "for_clause":
                for f in ("initializer", "condition", "update"):
                    c = h.child_by_field_name(f)
                    if c is None:
                        continue
                    if c.type.endswith("_statement") or c.type == "short_var_declaration":
                        self.stmt(c)
                    else:
                        self.expr(c, discard=True)
            else:
                self.expr(h, discard=True)
        if len(self.fn.body) == emitted:
            self.emit(OpaqueStmt("for_statement", self.loc(node)))
        body = node.child_by_field_name("body")
        if body is not None:
            self.block(body)
        self.scopes.pop()

    def _range(self, clause: Node) -> None:
        right = clause.child_by_field_name("right")
        value = self.expr(right) if right is not None else Const("")
        left = clause.child_by_field_name("left")
        if left is None:
            self.emit(OpaqueStmt("range", self.loc(clause)))
            return
        define = any(_text(c) == ":=" for c in clause.children if not c.is_named)
        targets = _named(left)
        location = self.loc(clause)
        for i, t in enumerate(targets):
            dst = self.target(t, define)
            if dst is None:
                continue
            if i == 0:
                src: Expr = Opaque((value,))
            elif isinstance(value, PlaceRead):
                src = PlaceRead(value.place, elem=True)
            else:
                src = value
            self.emit(Assign(dst, src, location))
        if len(targets) == 0 or all(_text(t) == "_" for t in targets):
            self.emit(OpaqueStmt("range", location))

    def s_expression_switch_statement(self, node: Node) -> None:
        self.scopes.append(_Scope())
        self._header(node, ("initializer", "value"))
        for case in _named(node):
            if case.type in ("expression_case", "default_case"):
                self.scopes.append(_Scope())
                v = case.child_by_field_name("value")
                if v is not None:
                    for e in _named(v):
                        self.expr(e, discard=True)
                for s in _named(case):
                    if s.type == "statement_list":
                        for x in _named(s):
                            self.stmt(x)
                    elif s is not v and s.type not in ("expression_list",):
                        self.stmt(s)
                self.scopes.pop()
        self.scopes.pop()

    def s_type_switch_statement(self, node: Node) -> None:
        self.scopes.append(_Scope())
        init = node.child_by_field_name("initializer")
        if init is not None:
            self.stmt(init)
        value_node = node.child_by_field_name("value")
        value = self.expr(value_node) if value_node is not None else Const("")
        alias = node.child_by_field_name("alias")
        alias_names = [_text(a) for a in _named(alias)] if alias is not None else []
        if not alias_names:
            self.emit(OpaqueStmt("type_switch", self.loc(node)))
        for case in _named(node):
            if case.type not in ("type_case", "default_case"):
                continue
            self.scopes.append(_Scope())
            for name in alias_names:
                if name != "_":
                    dst = self.declare(name)
                    self.emit(Assign(dst, value, self.loc(case)))
            for s in _named(case):
                if s.type == "statement_list":
                    for x in _named(s):
                        self.stmt(x)
            self.scopes.pop()
        self.scopes.pop()

    def s_select_statement(self, node: Node) -> None:
        self.emit(OpaqueStmt("select", self.loc(node)))
        for case in _named(node):
            self.scopes.append(_Scope())
            comm = case.child_by_field_name("communication")
            if comm is not None:
                self.stmt(comm)
            for s in _named(case):
                if s.type == "statement_list":
                    for x in _named(s):
                        self.stmt(x)
            self.scopes.pop()

    def s_labeled_statement(self, node: Node) -> None:
        self.emit(OpaqueStmt("label", self.loc(node)))
        for c in _named(node):
            if c.type != "label_name":
                self.stmt(c)

    def s_inc_statement(self, node: Node) -> None:
        for c in _named(node):
            dst = self.target(c, False)
            if dst is not None:
                self.emit(Assign(dst, Opaque((PlaceRead(dst),)), self.loc(node)))

    s_dec_statement = s_inc_statement

    def s_send_statement(self, node: Node) -> None:
        ch = node.child_by_field_name("channel")
        val = node.child_by_field_name("value")
        dst = self.target(ch, False) if ch is not None else None
        v = self.expr(val) if val is not None else Const("")
        if dst is not None:
            self.emit(Assign(dst, Opaque((PlaceRead(dst), v)), self.loc(node)))

    # -- expressions -------------------------------------------------------

    def expr(self, node: Optional[Node], discard: bool = False) -> Expr:
        if node is None:
            return Const("")
        t = node.type
        if t in LITERAL_NODES:
            return Const(_text(node))
        if t == "identifier":
            name = _text(node)
            p = self.lookup(name)
            if p is not None:
                return PlaceRead(p)
            if name in ("true", "false", "nil", "iota"):
                return Const(name)
            return PlaceRead(Place(RootKind.GLOBAL, f"{self.u.pkg}.{name}"))
        if t == "parenthesized_expression":
            inner = _named(node)
            return self.expr(inner[0] if inner else None, discard)
        if t == "selector_expression":
            return self.selector(node)
        if t == "call_expression":
            if self._is_conversion_or_builtin(node):
                args = node.child_by_field_name("arguments")
                ops = tuple(self.expr(a) for a in _named(args)) if args is not None else ()
                ops = tuple(o for o in ops if not isinstance(o, Const))
                return Opaque(ops)
            if discard:
                self.call(node, ())
                return Const("")
            dst = self.temp()
            self.call(node, (dst,))
            return PlaceRead(dst)
        if t == "composite_literal":
            dst = self.temp()
            self.composite(node, dst)
            return PlaceRead(dst)
        if t == "unary_expression":
            operand = self.expr(node.child_by_field_name("operand"))
            op = _unary_op(node)
            if op in ("&", "*"):
                return operand
            if op == "<-":
                return Opaque((operand,))
            return Opaque((operand,))
        if t == "binary_expression":
            left = self.expr(node.child_by_field_name("left"))
            right = self.expr(node.child_by_field_name("right"))
            return _opaque(left, right)
        if t == "index_expression":
            operand = self.expr(node.child_by_field_name("operand"))
            self.expr(node.child_by_field_name("index"), discard=True)
            if isinstance(operand, PlaceRead):
                return PlaceRead(operand.place, elem=True)
            return operand
        if t == "slice_expression":
            operand = self.expr(node.child_by_field_name("operand"))
            for f in ("start", "end", "capacity"):
                c = node.child_by_field_name(f)
                if c is not None:
                    self.expr(c, discard=True)
            return operand
        if t == "type_assertion_expression":
            return self.expr(node.child_by_field_name("operand"))
        if t == "type_conversion_expression":
            return _opaque(self.expr(node.child_by_field_name("operand")))
        if t == "func_literal":
            self.closure(node, invoked=True)
            return Const("func")
        if t in ("type_instantiation_expression", "generic_type"):
            return Const(_text(node))
        if t == "literal_value":
            dst = self.temp()
            self.composite(node, dst)
            return PlaceRead(dst)
        return Opaque(())

    def selector(self, node: Node) -> Expr:
        operand = node.child_by_field_name("operand")
        fname = _text(node.child_by_field_name("field"))
        if operand is not None and operand.type == "identifier" and self.is_package_alias(_text(operand)):
            path = self.u.imports[_text(operand)]
            return Const(f"{path}.{fname}")
        base = self.expr(operand)
        if isinstance(base, PlaceRead):
            if base.elem:
                return PlaceRead(base.place.child(fname))
            return PlaceRead(base.place.child(fname))
        return _opaque(base)

    def _is_conversion_or_builtin(self, node: Node) -> bool:
        fn = _strip_parens(node.child_by_field_name("function"))
        if fn is None:
            return True
        if fn.type in TYPE_NODES and fn.type not in ("type_identifier", "qualified_type"):
            return True
        if fn.type == "identifier":
            name = _text(fn)
            if self.lookup(name) is not None:
                return False
            return name in BUILTIN_FUNCS or name in PREDECLARED_TYPES
        return False

    def call(self, node: Node, dsts: Tuple[Place, ...]) -> None:
        fn_node = _strip_parens(node.child_by_field_name("function"))
        args_node = node.child_by_field_name("arguments")
        location = self.loc(node)
        if fn_node is not None and fn_node.type in ("index_expression", "type_instantiation_expression", "generic_type"):
            inner = fn_node.child_by_field_name("operand") or fn_node.child_by_field_name("type")
            if inner is None:
                inner = _named(fn_node)[0] if _named(fn_node) else None
            fn_node = inner
        receiver: Optional[Expr] = None
        if fn_node is None:
            callee = CalleeRef(CalleeKind.DYNAMIC, "?")
        elif fn_node.type == "selector_expression":
            operand = fn_node.child_by_field_name("operand")
            mname = _text(fn_node.child_by_field_name("field"))
            if operand is not None and operand.type == "identifier" and self.is_package_alias(_text(operand)):
                path = self.u.imports[_text(operand)]
                callee = CalleeRef(CalleeKind.FUNCTION, mname, f"{path}.{mname}")
            else:
                receiver = self.expr(operand)
                callee = CalleeRef(CalleeKind.METHOD, mname)
        elif fn_node.type == "identifier":
            name = _text(fn_node)
            p = self.lookup(name)
            if p is not None:
                closure = self._closure_for(p)
                if closure is not None:
                    callee = CalleeRef(CalleeKind.CLOSURE, name, closure)
                else:
                    callee = CalleeRef(CalleeKind.DYNAMIC, name)
                    receiver = PlaceRead(p)
            else:
                callee = CalleeRef(CalleeKind.FUNCTION, name, f"{self.u.pkg}.{name}")
        elif fn_node.type == "func_literal":
            fid = self.closure(fn_node)
            callee = CalleeRef(CalleeKind.CLOSURE, "func", fid)
        else:
            receiver = self.expr(fn_node)
            callee = CalleeRef(CalleeKind.DYNAMIC, "?")
        args: List[Expr] = []
        if args_node is not None:
            for a in _named(args_node):
                a = _strip_parens(a)
                if a.type == "func_literal":
                    fid = self.closure(a, invoked=True)
                    args.append(Const("func"))
                    continue
                args.append(self.expr(a))
        self.emit(Call(callee, receiver, tuple(args), dsts, location))

    def _closure_for(self, p: Place) -> Optional[str]:
        if p.fields:
            return None
        if p.key in self.closure_of:
            return self.closure_of[p.key]
        # captured closure variable: ask the defining function
        if p.key.startswith("^") and self.parent is not None:
            outer = dict(self.fn.captures).get(p.key)
            if outer is not None:
                return self.parent._closure_for(outer)
        return None

    def closure(self, node: Node, invoked: bool = False) -> str:
        """Lower a function literal into its own FuncDecl; return its fid.

        Closures handed to another call or deferred (``invoked``) also get a
        call instruction from the enclosing function so their bodies are
        reachable.
        """
        self.closure_counter += 1
        fid = f"{self.fn.fid}$func{self.closure_counter}"
        params = self.u._params(node.child_by_field_name("parameters"), self.generics)
        result = node.child_by_field_name("result")
        named_results = self.u._params(result, self.generics) if result is not None else []
        fn = FuncDecl(
            fid=fid, name=f"{self.fn.name}$func{self.closure_counter}",
            package_path=self.fn.package_path, receiver=None, params=params,
            results=[t for _, t in named_results], body=[], location=self.loc(node),
            parent=self.fn.fid,
        )
        sub = _FuncLowerer(self.u, fn, self.generics, named_results, parent=self)
        sub.lower(node.child_by_field_name("body"))
        self.u.funcs.append(fn)
        if invoked:
            self.emit(Call(CalleeRef(CalleeKind.CLOSURE, "func", fid), None, (), (), self.loc(node)))
        return fid

    def composite(self, node: Node, dst: Place, hint: Optional[TypeRef] = None) -> None:
        if node.type == "literal_value":
            tref, body = hint or UNKNOWN_TYPE, node
            is_struct = tref is not None and not tref.is_container
            type_node = None
        else:
            type_node = node.child_by_field_name("type")
            body = node.child_by_field_name("body")
            tref = self.u.type_ref(type_node, self.generics)
            is_struct = not tref.is_container and (type_node is None or type_node.type not in ("slice_type", "array_type", "map_type"))
        elem_hint = tref.elem() if tref.is_container else None
        inits: List[Tuple[Optional[str], Expr, Location]] = []
        if body is not None:
            for el in _named(body):
                eloc = self.loc(el)
                if el.type == "keyed_element":
                    key_el = el.child_by_field_name("key")
                    val_el = el.child_by_field_name("value")
                    key_node = _named(key_el)[0] if key_el is not None and _named(key_el) else key_el
                    val_node = _named(val_el)[0] if val_el is not None and _named(val_el) else val_el
                    value = self._element_value(val_node, elem_hint)
                    if is_struct and key_node is not None and key_node.type in ("identifier", "field_identifier"):
                        inits.append((_text(key_node), value, eloc))
                    else:
                        key_value = self._element_value(key_node, None)
                        if not isinstance(key_value, Const):
                            inits.append((None, key_value, eloc))
                        inits.append((None, value, eloc))
                elif el.type == "literal_element":
                    inner = _named(el)
                    value = self._element_value(inner[0] if inner else None, elem_hint)
                    inits.append((None, value, eloc))
        self.emit(CompositeInit(dst, tref, tuple(inits), self.loc(node)))

    def _element_value(self, node: Optional[Node], hint: Optional[TypeRef]) -> Expr:
        if node is None:
            return Const("")
        if node.type == "literal_value":
            dst = self.temp()
            self.composite(node, dst, hint)
            return PlaceRead(dst)
        if node.type == "unary_expression" and _unary_op(node) == "&":
            operand = _strip_parens(node.child_by_field_name("operand"))
            if operand.type == "literal_value":
                return self._element_value(operand, hint)
        return self.expr(node)


def _strip_parens(node: Optional[Node]) -> Optional[Node]:
    while node is not None and node.type == "parenthesized_expression":
        inner = _named(node)
        node = inner[0] if inner else None
    return node


def _unary_op(node: Node) -> str:
    for c in node.children:
        if not c.is_named:
            return _text(c)
    return ""


def _opaque(*ops: Expr) -> Expr:
    kept = tuple(o for o in ops if not isinstance(o, Const))
    return Opaque(kept)
