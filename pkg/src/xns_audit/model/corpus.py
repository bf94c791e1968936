"""Source-tree ingestion."""

from __future__ import annotations

import fnmatch
import os
import re
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

DEFAULT_EXCLUDES: Tuple[str, ...] = ("vendor/**", "**/testdata/**")

_MODULE_RE = re.compile(r"^\s*module\s+(\S+)", re.MULTILINE)


class CorpusEmpty(Exception):
    def __init__(self, root: str):
        super().__init__(f"no Go source files under {root}")
        self.root = root


@dataclass(frozen=True)
class IoError:
    path: str
    message: str


@dataclass
class SourceUnit:
    path: str  # relative to the corpus root, posix separators
    package_path: str
    text: bytes
    parse_diagnostics: List[Tuple[int, str]] = field(default_factory=list)


def _matches(rel: str, patterns: Iterable[str]) -> bool:
    p = PurePosixPath(rel)
    for pat in patterns:
        if fnmatch.fnmatch(rel, pat) or p.match(pat):
            return True
        # "vendor/**" must also hit "a/vendor/x.go"; "**/x/**" must hit "x/y.go"
        bare = pat.strip("*/")
        if pat.endswith("/**") and bare and bare in p.parts[:-1]:
            return True
    return False


def read_module_path(root: Path) -> Optional[str]:
    gomod = root / "go.mod"
    try:
        m = _MODULE_RE.search(gomod.read_text(encoding="utf-8"))
    except OSError:
        return None
    return m.group(1) if m else None


def _module_roots(root: Path) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for dirpath, _dirs, files in os.walk(root):
        if "go.mod" in files:
            mod = read_module_path(Path(dirpath))
            if mod:
                rel = Path(dirpath).relative_to(root).as_posix()
                out["" if rel == "." else rel] = mod
    return out


def package_path_for(rel_dir: str, modules: Dict[str, str], fallback: str) -> str:
    """Import path of the package in ``rel_dir`` (posix, relative to root)."""
    best = None
    for mdir in modules:
        if mdir == "" or rel_dir == mdir or rel_dir.startswith(mdir + "/"):
            if best is None or len(mdir) > len(best):
                best = mdir
    if best is None:
        base, rest = fallback, rel_dir
    else:
        base = modules[best]
        rest = rel_dir[len(best):].lstrip("/") if best else rel_dir
    if rest in ("", "."):
        return base
    return f"{base}/{rest}"


def load_corpus(
    root_path: os.PathLike | str,
    excludes: Optional[Sequence[str]] = None,
    errors: Optional[List[IoError]] = None,
) -> List[SourceUnit]:
    """Collect ``.go`` files under ``root_path`` in lexicographic path order.

    Unreadable files are appended to ``errors`` and skipped. Raises
    ``CorpusEmpty`` when nothing is left.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise FileNotFoundError(str(root))
    patterns = DEFAULT_EXCLUDES if excludes is None else tuple(excludes)
    modules = _module_roots(root)
    fallback = root.resolve().name
    rels: List[str] = []
    for dirpath, dirs, files in os.walk(root):
        dirs.sort()
        for name in files:
            if not name.endswith(".go"):
                continue
            rel = (Path(dirpath) / name).relative_to(root).as_posix()
            if not _matches(rel, patterns):
                rels.append(rel)
    units: List[SourceUnit] = []
    for rel in sorted(rels):
        try:
            text = (root / rel).read_bytes()
        except OSError as exc:
            if errors is not None:
                errors.append(IoError(rel, exc.strerror or str(exc)))
            continue
        rel_dir = PurePosixPath(rel).parent.as_posix()
        units.append(SourceUnit(rel, package_path_for(rel_dir, modules, fallback), text))
    if not units:
        raise CorpusEmpty(str(root))
    return units
