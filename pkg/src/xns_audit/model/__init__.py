from .callgraph import build_call_graph
from .corpus import DEFAULT_EXCLUDES, CorpusEmpty, IoError, SourceUnit, load_corpus
from .ir import (
    Assign,
    Call,
    CallGraph,
    CompositeInit,
    Const,
    ExternalCallee,
    FuncDecl,
    Location,
    Opaque,
    OpaqueStmt,
    Place,
    PlaceRead,
    Return,
    TypeDecl,
    TypeRef,
)
from .parser import ParsedUnit, parse_unit
from .program import ExternalTypes, ProgramModel, build_model

__all__ = [
    "Assign", "Call", "CallGraph", "CompositeInit", "Const", "CorpusEmpty",
    "DEFAULT_EXCLUDES", "ExternalCallee", "ExternalTypes", "FuncDecl", "IoError",
    "Location", "Opaque", "OpaqueStmt", "ParsedUnit", "Place", "PlaceRead",
    "ProgramModel", "Return", "SourceUnit", "TypeDecl", "TypeRef",
    "build_call_graph", "build_model", "load_corpus", "parse_unit",
]
