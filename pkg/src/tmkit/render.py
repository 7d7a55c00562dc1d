"""Graphviz DOT export for the static, dynamic and behavioral levels."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .model import ActionKind, Model
from .validate import ValidationReport, validate_all

LEVELS = ("static", "dynamic", "behavioral")

PALETTE = (
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
    "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f",
)


class RenderError(ValueError):
    def __init__(self, message: str, report: Optional[ValidationReport] = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class RenderOptions:
    level: str = "static"
    elide_rtr: bool = False
    highlight: tuple[str, ...] = ()


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def anchor_id(thimac: str) -> str:
    return f"@{thimac}"


@dataclass
class Chain:
    nodes: tuple[str, ...]
    src: str  # flanking action node or thimac anchor
    dst: str
    label: str


@dataclass
class ElidedGraph:
    """Static graph after collapsing release/transfer/receive chains."""

    hidden: set[str] = field(default_factory=set)
    chains: list[Chain] = field(default_factory=list)
    anchors: list[str] = field(default_factory=list)  # thimac ids needing an anchor node


def find_chains(model: Model) -> ElidedGraph:
    """Collapse each maximal release -> transfer+ -> receive path that nothing else touches.

    A chain qualifies when its interior carries no other edges, no store is
    attached to any of its nodes, the release has at most one predecessor and
    the receive at most one successor. The collapsed edge joins those
    flanking nodes, or the owning thimac when a side has none.
    """
    edges = [(e.src, e.dst, "flow") for e in model.flows] + [(e.src, e.dst, "trigger") for e in model.triggers]
    ins: dict[str, list[tuple[str, str]]] = {a.id: [] for a in model.actions}
    outs: dict[str, list[tuple[str, str]]] = {a.id: [] for a in model.actions}
    for s, d, kind in edges:
        outs[s].append((d, kind))
        ins[d].append((s, kind))
    act = model.action_map

    def single_flow_out(n: str) -> Optional[str]:
        if len(outs[n]) == 1 and outs[n][0][1] == "flow":
            return outs[n][0][0]
        return None

    candidates: list[Chain] = []
    for a in model.actions:
        if a.kind is not ActionKind.RELEASE or a.store is not None:
            continue
        nodes = [a.id]
        cur = single_flow_out(a.id)
        ok = cur is not None and act[cur].kind is ActionKind.TRANSFER
        while ok and act[cur].kind is ActionKind.TRANSFER:
            if len(ins[cur]) != 1 or act[cur].store is not None:
                ok = False
                break
            nodes.append(cur)
            cur = single_flow_out(cur)
            ok = cur is not None
        if not ok or act[cur].kind is not ActionKind.RECEIVE:
            continue
        if len(ins[cur]) != 1 or act[cur].store is not None or len(outs[cur]) > 1 or len(ins[a.id]) > 1:
            continue
        nodes.append(cur)
        src = ins[a.id][0][0] if ins[a.id] else anchor_id(a.owner)
        dst = outs[cur][0][0] if outs[cur] else anchor_id(act[cur].owner)
        label = next((act[n].label for n in nodes if act[n].label), "")
        candidates.append(Chain(tuple(nodes), src, dst, label))

    graph = ElidedGraph()
    flanks: set[str] = set()
    for c in candidates:
        if c.src in graph.hidden or c.dst in graph.hidden or flanks & set(c.nodes):
            continue
        graph.chains.append(c)
        graph.hidden |= set(c.nodes)
        flanks |= {c.src, c.dst}
    for c in graph.chains:
        for end in (c.src, c.dst):
            if end.startswith("@") and end[1:] not in graph.anchors:
                graph.anchors.append(end[1:])
    return graph


def _node_label(model: Model, node_id: str) -> str:
    a = model.action_map[node_id]
    text = f"{a.id}\n{a.kind.value}"
    if a.label:
        text += f"\n{a.label}"
    return text


def _static_body(model: Model, opts: RenderOptions, out: list[str]) -> None:
    graph = find_chains(model) if opts.elide_rtr else ElidedGraph()
    colors: dict[str, list[str]] = {}
    if opts.level == "dynamic":
        for i, e in enumerate(model.events):
            for n in e.region:
                colors.setdefault(n, []).append(e.id)
    event_color = {e.id: PALETTE[i % len(PALETTE)] for i, e in enumerate(model.events)}
    highlighted = set()
    for eid in opts.highlight:
        highlighted |= set(model.event_map[eid].region)

    def emit(tid: str, depth: int) -> None:
        t = model.thimac_map[tid]
        pad = "  " * depth
        out.append(f"{pad}subgraph {_q('cluster_' + t.id)} {{")
        out.append(f"{pad}  label={_q(t.name)};")
        if t.id in graph.anchors:
            out.append(f"{pad}  {_q(anchor_id(t.id))} [label={_q(t.name)}, shape=box, style=dashed];")
        for s in t.stores:
            out.append(f"{pad}  {_q('store:' + s)} [label={_q(s)}, shape=cylinder];")
        for aid in t.actions:
            if aid in graph.hidden:
                continue
            attrs = [f"label={_q(_node_label(model, aid))}", "shape=box"]
            if aid in colors:
                attrs.append("style=filled")
                attrs.append(f"fillcolor={_q(event_color[colors[aid][0]])}")
                attrs.append(f"xlabel={_q(','.join(colors[aid]))}")
            if aid in highlighted:
                attrs.append("penwidth=3")
            out.append(f"{pad}  {_q(aid)} [{', '.join(attrs)}];")
        for child in t.children:
            emit(child, depth + 1)
        out.append(f"{pad}}}")

    for root in model.roots():
        emit(root.id, 1)
    for a in model.actions:
        if a.store is not None and a.id not in graph.hidden:
            out.append(f"  {_q(a.id)} -> {_q('store:' + a.store)} [style=dotted, arrowhead=none];")
    for f in model.flows:
        if f.src in graph.hidden or f.dst in graph.hidden:
            continue
        out.append(f"  {_q(f.src)} -> {_q(f.dst)};")
    for t in model.triggers:
        if t.src in graph.hidden or t.dst in graph.hidden:
            continue
        attrs = ["style=dashed"]
        if t.guard is not None:
            attrs.append(f"label={_q(f'{t.guard.store} {t.guard.op} {t.guard.operand}')}")
        out.append(f"  {_q(t.src)} -> {_q(t.dst)} [{', '.join(attrs)}];")
    for c in graph.chains:
        out.append(f"  {_q(c.src)} -> {_q(c.dst)} [label={_q(c.label)}];")
    if opts.level == "dynamic" and model.events:
        out.append(f"  subgraph {_q('cluster_legend')} {{")
        out.append(f"    label={_q('events')};")
        for e in model.events:
            out.append(
                f"    {_q('legend:' + e.id)} [label={_q(e.id + ': ' + e.name)}, shape=note, "
                f"style=filled, fillcolor={_q(event_color[e.id])}];"
            )
        out.append("  }")


def _behavioral_body(model: Model, opts: RenderOptions, out: list[str]) -> None:
    for e in model.events:
        attrs = [f"label={_q(e.id + chr(10) + e.name)}", "shape=ellipse"]
        if e.id in opts.highlight:
            attrs.append("penwidth=3")
        out.append(f"  {_q(e.id)} [{', '.join(attrs)}];")
    for src, dst in model.behavior:
        out.append(f"  {_q(src)} -> {_q(dst)};")
    ids = [e.id for e in model.events]
    for e in model.events:
        for target in e.cancel_targets(ids):
            out.append(f"  {_q(e.id)} -> {_q(target)} [style=dashed, label={_q('not')}];")


def to_dot(model: Model, opts: RenderOptions = RenderOptions()) -> str:
    if opts.level not in LEVELS:
        raise RenderError(f"unknown level {opts.level!r}; expected one of {', '.join(LEVELS)}")
    report = validate_all(model)
    if not report.ok:
        raise RenderError(f"model {model.name} has {len(report.errors)} validation error(s)", report)
    unknown = [h for h in opts.highlight if h not in model.event_map]
    if unknown and opts.level != "static":
        raise RenderError(f"highlight names undeclared event(s): {', '.join(unknown)}")
    if unknown:
        opts = RenderOptions(opts.level, opts.elide_rtr, tuple(h for h in opts.highlight if h in model.event_map))
    out = [f"digraph {_q(model.name)} {{"]
    if opts.level == "behavioral":
        if model.events:
            out.append("  rankdir=LR;")
        _behavioral_body(model, opts, out)
    elif model.actions or model.thimacs:
        out.append("  compound=true;")
        out.append("  rankdir=LR;")
        _static_body(model, opts, out)
    out.append("}")
    return "\n".join(out) + "\n"


_EDGE = re.compile(r'^\s*"(?:[^"\\]|\\.)*" -> "')


def edge_lines(dot: str) -> list[str]:
    """The edge statements of a DOT text produced by :func:`to_dot`."""
    return [line.strip() for line in dot.splitlines() if _EDGE.match(line)]
