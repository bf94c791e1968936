from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional

from .model.ir import Location


class DiagnosticKind(str, Enum):
    PARSE_ERROR = "ParseError"
    IO_ERROR = "IoError"
    DEPTH_EXHAUSTED = "DepthExhausted"
    CONSTANT_NAMESPACE = "ConstantNamespace"
    SCOPE_CONFLICT = "ScopeConflict"


INFO_KINDS = frozenset({DiagnosticKind.CONSTANT_NAMESPACE})


@dataclass(frozen=True)
class Diagnostic:
    kind: DiagnosticKind
    message: str
    location: Optional[Location] = None

    @property
    def level(self) -> str:
        return "info" if self.kind in INFO_KINDS else "warning"

    def sort_key(self):
        loc = self.location
        return (loc.path if loc else "", loc.line if loc else 0, self.kind.value, self.message)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "level": self.level, "message": self.message}
        if self.location is not None:
            d["location"] = {"path": self.location.path, "line": self.location.line}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Diagnostic":
        loc = d.get("location")
        return cls(DiagnosticKind(d["kind"]), d["message"], Location(loc["path"], loc["line"]) if loc else None)

    def __str__(self) -> str:
        where = f"{self.location}: " if self.location else ""
        return f"{where}{self.level}: [{self.kind.value}] {self.message}"


def sorted_unique(diags: Iterable[Diagnostic]) -> List[Diagnostic]:
    return sorted(set(diags), key=Diagnostic.sort_key)
