from __future__ import annotations

import functools
import textwrap
from pathlib import Path

import pytest

from xns_audit.fixtures import default_fixture_dir
from xns_audit.knowledge import load_kb
from xns_audit.scan import ScanOptions, scan_tree

FIXTURES = default_fixture_dir()
GETTERS = FIXTURES.parent / "getters"
SARIF_SCHEMA = Path(__file__).parent / "data" / "sarif-2.1.0.json"


def fixture_names():
    return sorted(p.name for p in FIXTURES.iterdir() if p.is_dir())


def fixture_path(prefix: str) -> Path:
    """Fixture directory whose name starts with ``prefix`` (``a1``, ``s3``...)."""
    hits = [p for p in FIXTURES.iterdir() if p.is_dir() and p.name.split("_")[0] == prefix.lower()]
    assert len(hits) == 1, prefix
    return hits[0]


@functools.lru_cache(maxsize=None)
def default_kb():
    return load_kb()


@functools.lru_cache(maxsize=None)
def artifacts(prefix: str):
    return scan_tree(fixture_path(prefix), ScanOptions(kb=default_kb()))


def write_tree(root: Path, files: dict) -> Path:
    for rel, text in files.items():
        p = root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(textwrap.dedent(text).lstrip("\n"), encoding="utf-8")
    return root


@pytest.fixture
def kb():
    return default_kb()
