from __future__ import annotations

from .ir import Call, CallEdge, CallGraph, ExternalCallee
from .program import ProgramModel


def build_call_graph(model: ProgramModel) -> CallGraph:
    """One edge per resolved target of every call instruction.

    Interface dispatch fans out to every corpus method with the same name and
    arity; anything unresolvable is kept as an ``ExternalCallee`` record.
    """
    graph = CallGraph()
    for fid in sorted(model.funcs):
        for idx, instr in enumerate(model.funcs[fid].body):
            if not isinstance(instr, Call):
                continue
            targets = model.resolve_call(fid, instr)
            graph.targets[(fid, idx)] = targets
            for t in targets:
                callee = t if isinstance(t, str) else f"ext:{t.identity}"
                graph.edges.append(CallEdge(fid, idx, instr.location, callee))
    graph.edges.sort()
    return graph


def external_calls(graph: CallGraph) -> list:
    return sorted({t.identity for ts in graph.targets.values() for t in ts if isinstance(t, ExternalCallee)})
