"""Domain types for component models: atoms, interactions, priorities."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .lang import (
    TRUE,
    Assign,
    Expr,
    Marker,
    Stmt,
    UpdateFunction,
    Value,
    calls_in,
    concat,
    infer_kind,
    var_read,
    var_write,
)

RESERVED_PREFIXES = ("b_aop", "ip", "__marker")


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "int" | "bool"
    init: Value


@dataclass(frozen=True)
class Port:
    name: str
    variables: tuple[str, ...] = ()


@dataclass(frozen=True)
class Transition:
    """A guarded transition ``src --port [guard] / func--> dest``.

    ``name`` identifies the transition inside its component; two transitions
    may otherwise be structurally equal.
    """

    name: str
    src: str
    port: str
    guard: Expr = TRUE
    func: UpdateFunction = ()
    dest: str = ""


@dataclass(frozen=True)
class AtomicComponent:
    name: str
    ports: tuple[Port, ...]
    locations: tuple[str, ...]
    initial: str
    variables: tuple[Variable, ...]
    transitions: tuple[Transition, ...]

    def port(self, name: str) -> Optional[Port]:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    def variable(self, name: str) -> Optional[Variable]:
        for v in self.variables:
            if v.name == name:
                return v
        return None

    def transition(self, name: str) -> Transition:
        for t in self.transitions:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def var_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def port_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.ports)


@dataclass(frozen=True)
class Interaction:
    """Multiparty rendez-vous over qualified ports ``(instance, port)``.

    Guard and function refer to variables as ``instance.var``.
    """

    name: str
    ports: tuple[tuple[str, str], ...]
    guard: Expr = TRUE
    func: UpdateFunction = ()

    @property
    def port_set(self) -> frozenset[tuple[str, str]]:
        return frozenset(self.ports)

    def instances(self) -> tuple[str, ...]:
        return tuple(i for i, _ in self.ports)


@dataclass(frozen=True)
class CompositeComponent:
    name: str
    atoms: tuple[AtomicComponent, ...]
    interactions: tuple[Interaction, ...]
    priorities: tuple[tuple[str, str], ...] = ()  # (low, high): high dominates

    def atom(self, name: str) -> AtomicComponent:
        for a in self.atoms:
            if a.name == name:
                return a
        raise KeyError(name)

    def has_atom(self, name: str) -> bool:
        return any(a.name == name for a in self.atoms)

    def interaction(self, name: str) -> Interaction:
        for a in self.interactions:
            if a.name == name:
                return a
        raise KeyError(name)

    def replace_atom(self, atom: AtomicComponent) -> "CompositeComponent":
        atoms = tuple(atom if a.name == atom.name else a for a in self.atoms)
        return replace(self, atoms=atoms)


@dataclass(frozen=True)
class LocalState:
    location: str
    values: tuple  # aligned with the component's variable order


GlobalState = tuple  # tuple[LocalState, ...] aligned with composite atoms


@dataclass(frozen=True)
class BIPSystem:
    composite: CompositeComponent
    q0: GlobalState = field(default=())

    @staticmethod
    def of(c: CompositeComponent) -> "BIPSystem":
        q0 = tuple(
            LocalState(a.initial, tuple(v.init for v in a.variables)) for a in c.atoms
        )
        return BIPSystem(c, q0)


# ---------------------------------------------------------------------------


def var_guard(t: Transition) -> frozenset[str]:
    """Variables read by the guard of ``t``."""
    return var_read(t.guard)


def qualify(instance: str, var: str) -> str:
    return f"{instance}.{var}"


def interaction_scope(c: CompositeComponent, a: Interaction) -> dict[str, str]:
    """Qualified variable names visible to ``a`` mapped to their kinds."""
    scope: dict[str, str] = {}
    for inst, pname in a.ports:
        if not c.has_atom(inst):
            continue
        atom = c.atom(inst)
        port = atom.port(pname)
        if port is None:
            continue
        for vn in port.variables:
            v = atom.variable(vn)
            if v is not None:
                scope[qualify(inst, vn)] = v.kind
    return scope


def _is_reserved(name: str) -> bool:
    return name.startswith(RESERVED_PREFIXES)


def _check_func(
    f: Sequence[Stmt], kind_of, where: str, diags: list[str], allow_markers: bool = True
) -> None:
    for s in f:
        if isinstance(s, Assign):
            errs: list[str] = []
            k = infer_kind(s.expr, kind_of, errs)
            tk = kind_of(s.target)
            if tk is None:
                errs.append(f"unknown assignment target '{s.target}'")
            elif k is not None and k != tk:
                errs.append(f"assigning {k} to {tk} variable '{s.target}'")
            diags.extend(f"{where}: {e}" for e in errs)
        elif isinstance(s, Marker):
            if not allow_markers:
                diags.append(f"{where}: marker statements are not allowed here")
            elif s.tag not in ("begin", "end"):
                diags.append(f"{where}: bad marker tag '{s.tag}'")


def _check_guard(g: Expr, kind_of, where: str, diags: list[str]) -> None:
    errs: list[str] = []
    k = infer_kind(g, kind_of, errs)
    if k is not None and k != "bool":
        errs.append("guard is not boolean")
    diags.extend(f"{where}: {e}" for e in errs)


def validate_atom(a: AtomicComponent, strict: bool = False) -> list[str]:
    diags: list[str] = []
    seen: set[str] = set()
    for v in a.variables:
        if v.name in seen:
            diags.append(f"atom {a.name}: duplicate variable '{v.name}'")
        seen.add(v.name)
        if v.kind not in ("int", "bool"):
            diags.append(f"atom {a.name}: variable '{v.name}' has unknown kind '{v.kind}'")
        elif (v.kind == "bool") != isinstance(v.init, bool):
            diags.append(f"atom {a.name}: variable '{v.name}' initial value does not match kind")
    kinds = {v.name: v.kind for v in a.variables}
    if len(set(a.port_names)) != len(a.ports):
        diags.append(f"atom {a.name}: duplicate port name")
    for p in a.ports:
        for vn in p.variables:
            if vn not in kinds:
                diags.append(f"atom {a.name}: port '{p.name}' attaches unknown variable '{vn}'")
    if len(set(a.locations)) != len(a.locations):
        diags.append(f"atom {a.name}: duplicate location")
    if a.initial not in a.locations:
        diags.append(f"atom {a.name}: initial location '{a.initial}' is not declared")
    tnames: set[str] = set()
    ports = set(a.port_names)
    locs = set(a.locations)
    for t in a.transitions:
        where = f"atom {a.name}: transition {t.name}"
        if t.name in tnames:
            diags.append(f"{where}: duplicate transition name")
        tnames.add(t.name)
        if t.src not in locs:
            diags.append(f"{where}: unknown source location '{t.src}'")
        if t.dest not in locs:
            diags.append(f"{where}: unknown destination location '{t.dest}'")
        if t.port not in ports:
            diags.append(f"{where}: unknown port '{t.port}'")
        _check_guard(t.guard, kinds.get, where, diags)
        _check_func(t.func, kinds.get, where, diags, allow_markers=not strict)
    if strict:
        names = [a.name, *a.port_names, *a.locations, *kinds, *tnames]
        for n in names:
            if _is_reserved(n):
                diags.append(f"atom {a.name}: reserved identifier '{n}'")
    return diags


def priority_cycle(pairs: Iterable[tuple[str, str]]) -> bool:
    """True if the priority relation (with closure) is not a strict order."""
    succ: dict[str, set[str]] = {}
    for lo, hi in pairs:
        if lo == hi:
            return True
        succ.setdefault(lo, set()).add(hi)
    state: dict[str, int] = {}

    def visit(n: str) -> bool:
        state[n] = 1
        for m in succ.get(n, ()):
            s = state.get(m, 0)
            if s == 1 or (s == 0 and visit(m)):
                return True
        state[n] = 2
        return False

    return any(state.get(n, 0) == 0 and visit(n) for n in list(succ))


def validate(c: CompositeComponent, strict: bool = False) -> list[str]:
    """Return diagnostics for every violated well-formedness rule.

    With ``strict`` the reserved identifier policy is also enforced and user
    functions may not contain markers.
    """
    diags: list[str] = []
    names = [a.name for a in c.atoms]
    if len(set(names)) != len(names):
        diags.append("duplicate atom instance name")
    for a in c.atoms:
        diags.extend(validate_atom(a, strict))
    inames: set[str] = set()
    for a in c.interactions:
        where = f"interaction {a.name}"
        if a.name in inames:
            diags.append(f"{where}: duplicate interaction name")
        inames.add(a.name)
        if strict and _is_reserved(a.name):
            diags.append(f"{where}: reserved identifier")
        insts = [i for i, _ in a.ports]
        if len(set(insts)) != len(insts):
            diags.append(f"{where}: more than one port of the same instance")
        for inst, pname in a.ports:
            if not c.has_atom(inst):
                diags.append(f"{where}: unknown instance '{inst}'")
            elif c.atom(inst).port(pname) is None:
                diags.append(f"{where}: unknown port '{inst}.{pname}'")
        scope = interaction_scope(c, a)
        _check_guard(a.guard, scope.get, where, diags)
        _check_func(a.func, scope.get, where, diags, allow_markers=not strict)
    for lo, hi in c.priorities:
        for n in (lo, hi):
            if n not in inames:
                diags.append(f"priority {lo} < {hi}: unknown interaction '{n}'")
    if priority_cycle(c.priorities):
        diags.append("priority relation is reflexive or cyclic")
    return diags


def validate_system(s: BIPSystem) -> list[str]:
    diags = validate(s.composite)
    if len(s.q0) != len(s.composite.atoms):
        diags.append("initial state does not cover every instance")
        return diags
    for a, q in zip(s.composite.atoms, s.q0):
        if q.location not in a.locations:
            diags.append(f"initial state of {a.name}: unknown location '{q.location}'")
        if len(q.values) != len(a.variables):
            diags.append(f"initial state of {a.name}: wrong number of values")
    return diags


def used_builtins(c: CompositeComponent) -> set[str]:
    out: set[str] = set()
    exprs: list[Expr] = []
    for a in c.atoms:
        for t in a.transitions:
            exprs.append(t.guard)
            exprs.extend(s.expr for s in t.func if isinstance(s, Assign))
    for i in c.interactions:
        exprs.append(i.guard)
        exprs.extend(s.expr for s in i.func if isinstance(s, Assign))
    for e in exprs:
        out.update(call.name for call in calls_in(e))
    return out


__all__ = [
    "Variable",
    "Port",
    "Transition",
    "AtomicComponent",
    "Interaction",
    "CompositeComponent",
    "LocalState",
    "GlobalState",
    "BIPSystem",
    "var_guard",
    "var_read",
    "var_write",
    "concat",
    "validate",
    "validate_atom",
    "validate_system",
    "interaction_scope",
    "qualify",
]
