"""Graphviz export: one cluster per instance, dashed edges for interactions."""
from __future__ import annotations

from ..model import CompositeComponent
from .render import render_block, render_expr

_TEMP_MARK = "__bot_"


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _edge_label(port: str, guard, func) -> str:
    label = port
    g = render_expr(guard)
    if g != "true":
        label += f" [{g}]"
    if func:
        label += f" / {render_block(func)}"
    return label


def render_dot(c: CompositeComponent) -> str:
    lines = [f"digraph {_q(c.name)} {{"]
    if c.atoms:
        lines.append("  compound=true;")
    for a in c.atoms:
        lines.append(f"  subgraph {_q('cluster_' + a.name)} {{")
        lines.append(f"    label={_q(a.name)};")
        for loc in a.locations:
            attrs = [f"label={_q(loc)}"]
            if _TEMP_MARK in loc:
                attrs.append("shape=diamond")
            if loc == a.initial:
                attrs.append("peripheries=2")
            lines.append(f"    {_q(a.name + '.' + loc)} [{', '.join(attrs)}];")
        for t in a.transitions:
            lines.append(
                f"    {_q(a.name + '.' + t.src)} -> {_q(a.name + '.' + t.dest)} "
                f"[label={_q(_edge_label(t.port, t.guard, t.func))}];"
            )
        lines.append("  }")
    for i in c.interactions:
        node = _q("interaction:" + i.name)
        lines.append(f"  {node} [label={_q(i.name)}, shape=box, style=dashed];")
        for inst, port in i.ports:
            if not c.has_atom(inst):
                continue
            a = c.atom(inst)
            srcs = sorted({t.src for t in a.transitions if t.port == port}) or [a.initial]
            for loc in srcs:
                lines.append(
                    f"  {node} -> {_q(inst + '.' + loc)} [style=dashed, arrowhead=none, label={_q(port)}];"
                )
    lines.append("}")
    return "\n".join(lines) + "\n"
