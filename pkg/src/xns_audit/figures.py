"""CSV tables and PNG charts for a corpus aggregate."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .report import CorpusAggregate, ScanReport, dumps, render  # noqa: E402

_PNG_META = {"Software": None}


def _write_csv(path: Path, header: Sequence[str], rows: List[Sequence]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_tables(agg: CorpusAggregate, out: Path) -> List[Path]:
    written = [
        _write_csv(out / "affected_split.csv", ["bucket", "operators"], [
            ("namespaced_only", agg.affected_namespaced_only),
            ("cluster_only", agg.affected_cluster_only),
            ("both", agg.affected_both),
            ("unaffected", agg.operators_total - agg.affected_namespaced_only
             - agg.affected_cluster_only - agg.affected_both),
        ]),
        _write_csv(out / "referenced_types.csv", ["scope", "kind", "operators"],
                   [(s, k, n) for s, t in agg.per_referenced_type.items() for k, n in t.items()]),
        _write_csv(out / "verbs.csv", ["scope", "verb", "operators"],
                   [(s, v, n) for s, t in agg.per_verb.items() for v, n in t.items()]),
        _write_csv(out / "verb_resource_pairs.csv", ["scope", "verb", "kind", "operators"],
                   [(s, *p.split("-", 1), n) for s, t in agg.verb_resource_pairs.items() for p, n in t.items()]),
        _write_csv(out / "builtin_vs_custom.csv", ["class", "origin", "cases"],
                   [(c, o, n) for c, t in agg.builtin_vs_custom.items() for o, n in t.items()]),
    ]
    return written


def _barh(ax, table: Dict[str, int], title: str, color: str) -> None:
    labels = list(table)[::-1]
    ax.barh(labels, [table[k] for k in labels], color=color)
    ax.set_title(title)
    ax.set_xlabel("operators")
    ax.xaxis.get_major_locator().set_params(integer=True)


def write_figures(agg: CorpusAggregate, out: Path) -> List[Path]:
    paths = []

    fig, ax = plt.subplots(figsize=(5, 3))
    buckets = {
        "namespaced only": agg.affected_namespaced_only,
        "cluster only": agg.affected_cluster_only,
        "both": agg.affected_both,
    }
    ax.bar(list(buckets), list(buckets.values()), color=["#4c72b0", "#dd8452", "#8172b2"])
    ax.set_ylabel("operators")
    ax.set_title(f"Affected operators (of {agg.operators_total})")
    ax.yaxis.get_major_locator().set_params(integer=True)
    fig.tight_layout()
    paths.append(out / "affected_split.png")
    fig.savefig(paths[-1], dpi=100, metadata=_PNG_META)
    plt.close(fig)

    for name, data, title in (
        ("referenced_types.png", agg.per_referenced_type, "Referenced resource types"),
        ("verb_resource_pairs.png", agg.verb_resource_pairs, "Verb and resource pairs"),
    ):
        scopes = [s for s in ("Namespaced", "Cluster") if data.get(s)]
        if not scopes:
            continue
        fig, axes = plt.subplots(1, len(scopes), figsize=(5 * len(scopes), 3.5), squeeze=False)
        for ax, scope, color in zip(axes[0], scopes, ("#4c72b0", "#dd8452")):
            _barh(ax, data[scope], f"{title}: {scope}", color)
        fig.tight_layout()
        paths.append(out / name)
        fig.savefig(paths[-1], dpi=100, metadata=_PNG_META)
        plt.close(fig)
    return paths


def write_corpus_outputs(agg: CorpusAggregate, reports: Sequence[ScanReport], out_dir) -> List[Path]:
    """Aggregate JSON, per-operator reports, CSV tables and figures under ``out_dir``."""
    out = Path(out_dir)
    (out / "reports").mkdir(parents=True, exist_ok=True)
    written = [out / "aggregate.json"]
    written[0].write_text(dumps(agg.to_dict()), encoding="utf-8")
    for r in reports:
        p = out / "reports" / f"{r.operator}.json"
        p.write_bytes(render(r, "structured"))
        written.append(p)
    written += write_tables(agg, out)
    written += write_figures(agg, out)
    return written
