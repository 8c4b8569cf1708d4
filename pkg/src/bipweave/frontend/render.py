"""Pretty-printer producing text that parses back to the same model."""
from __future__ import annotations

from typing import Sequence

from ..lang import Assign, Binary, Call, Const, Expr, Marker, Skip, Stmt, Unary, Var
from ..model import AtomicComponent, CompositeComponent, Interaction, Transition, Variable


def render_expr(e: Expr) -> str:
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "not":
            return f"(not {render_expr(e.arg)})"
        return f"-({render_expr(e.arg)})"
    if isinstance(e, Binary):
        return f"({render_expr(e.left)} {e.op} {render_expr(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(render_expr(a) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")


def render_stmt(s: Stmt) -> str:
    if isinstance(s, Assign):
        return f"{s.target} := {render_expr(s.expr)};"
    if isinstance(s, Marker):
        return f"__marker({s.tag}, {s.owner}, {s.role});"
    if isinstance(s, Skip):
        return "skip;"
    raise TypeError(f"not a statement: {s!r}")


def render_block(f: Sequence[Stmt]) -> str:
    if not f:
        return "{ }"
    return "{ " + " ".join(render_stmt(s) for s in f) + " }"


def _value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def render_var(v: Variable) -> str:
    return f"var {v.kind} {v.name} = {_value(v.init)};"


def _transition(t: Transition) -> str:
    return (
        f"transition {t.name}: {t.src} -> {t.dest} on {t.port} "
        f"when {render_expr(t.guard)} do {render_block(t.func)};"
    )


def render_atom(a: AtomicComponent) -> list[str]:
    lines = [f"atom {a.name} {{"]
    lines.extend(f"  {render_var(v)}" for v in a.variables)
    for p in a.ports:
        lines.append(f"  port {p.name}({', '.join(p.variables)});")
    lines.append(f"  location {', '.join(a.locations)};")
    lines.append(f"  initial {a.initial};")
    lines.extend(f"  {_transition(t)}" for t in a.transitions)
    lines.append("}")
    return lines


def _connector(i: Interaction) -> str:
    ports = ", ".join(f"{inst}.{p}" for inst, p in i.ports)
    return f"connector {i.name}({ports}) when {render_expr(i.guard)} do {render_block(i.func)};"


def render_model(c: CompositeComponent) -> str:
    lines = [f"module {c.name}", ""]
    for a in c.atoms:
        lines.extend(render_atom(a))
        lines.append("")
    lines.extend(_connector(i) for i in c.interactions)
    lines.extend(f"priority {lo} < {hi};" for lo, hi in c.priorities)
    return "\n".join(lines).rstrip("\n") + "\n"
