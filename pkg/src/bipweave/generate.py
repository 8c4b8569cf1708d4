"""Random small models, pointcuts and aspects for property-based checks."""
from __future__ import annotations

import random
from typing import Optional

from .dynamics import as_system, explore, map_event
from .global_aop import GlobalAdvice, GlobalAspect, GlobalPointcut
from .lang import (
    Assign,
    Binary,
    Const,
    Expr,
    TRUE,
    Unary,
    Var,
    var_read,
    var_write,
)
from .local_aop import (
    And,
    AtLocation,
    LocalAdvice,
    LocalAspect,
    LocalPointcut,
    PortEnabled,
    PortExecute,
    ReadVarFunc,
    ReadVarGuard,
    Write,
    match_local,
)
from .model import (
    AtomicComponent,
    CompositeComponent,
    Interaction,
    Port,
    Transition,
    Variable,
    priority_cycle,
    validate,
)

INT_RANGE = 3  # integer variables stay in 0..2


def _guard(rng: random.Random, ints: list[str], bools: list[str]) -> Expr:
    r = rng.random()
    if r < 0.4 or not (ints or bools):
        return TRUE
    if bools and (r < 0.6 or not ints):
        v = Var(rng.choice(bools))
        return v if rng.random() < 0.5 else Unary("not", v)
    x = Var(rng.choice(ints))
    c = Const(rng.randrange(INT_RANGE))
    op = rng.choice(["<", "==", "!=", "<="])
    return Binary(op, x, c)


def _update(rng: random.Random, ints: list[str], bools: list[str]) -> tuple:
    out = []
    for _ in range(rng.choice([0, 0, 1, 1, 2])):
        if ints and (not bools or rng.random() < 0.6):
            x = rng.choice(ints)
            kind = rng.random()
            if kind < 0.5:
                e: Expr = Binary("%", Binary("+", Var(x), Const(1)), Const(INT_RANGE))
            elif kind < 0.75 and len(ints) > 1:
                e = Var(rng.choice([y for y in ints if y != x]))
            else:
                e = Const(rng.randrange(INT_RANGE))
            out.append(Assign(x, e))
        elif bools:
            f = rng.choice(bools)
            out.append(Assign(f, Unary("not", Var(f))))
    return tuple(out)


def random_atom(rng: random.Random, name: str, max_locations: int = 5) -> AtomicComponent:
    nloc = rng.randint(2, max_locations)
    locs = [f"L{i}" for i in range(nloc)]
    variables = [Variable("x", "int", rng.randrange(INT_RANGE))]
    if rng.random() < 0.5:
        variables.append(Variable("y", "int", 0))
    if rng.random() < 0.6:
        variables.append(Variable("f", "bool", rng.random() < 0.5))
    ints = [v.name for v in variables if v.kind == "int"]
    bools = [v.name for v in variables if v.kind == "bool"]
    nports = rng.randint(1, 3)
    ports = []
    for i in range(nports):
        attached = tuple(v for v in ints if rng.random() < 0.5)
        ports.append(Port(f"p{i}", attached))
    transitions = []
    k = 0
    for loc in locs:
        for _ in range(rng.choice([1, 1, 2, 2, 3])):
            transitions.append(
                Transition(
                    f"t{k}",
                    loc,
                    rng.choice(ports).name,
                    _guard(rng, ints, bools),
                    _update(rng, ints, bools),
                    rng.choice(locs),
                )
            )
            k += 1
    return AtomicComponent(name, tuple(ports), tuple(locs), locs[0], tuple(variables), tuple(transitions))


def random_model(
    rng: random.Random, max_atoms: int = 4, max_locations: int = 5, name: str = "Gen"
) -> CompositeComponent:
    natoms = rng.randint(1, max_atoms)
    atoms = [random_atom(rng, f"C{i}", max_locations) for i in range(natoms)]
    inters: list[Interaction] = []
    seen: set = set()
    # every port gets a chance to take part in some interaction
    for a in atoms:
        for p in a.ports:
            partners = [b for b in atoms if b is not a and rng.random() < 0.4]
            ports = [(a.name, p.name)] + [(b.name, rng.choice(b.ports).name) for b in partners]
            ports.sort(key=lambda ip: [x.name for x in atoms].index(ip[0]))
            key = frozenset(ports)
            if key in seen:
                continue
            seen.add(key)
            func = []
            if len(ports) > 1 and rng.random() < 0.6:
                (i1, p1), (i2, p2) = rng.sample(ports, 2)
                v1 = _atom(atoms, i1).port(p1).variables
                v2 = _atom(atoms, i2).port(p2).variables
                if v1 and v2:
                    func.append(Assign(f"{i2}.{rng.choice(v2)}", Var(f"{i1}.{rng.choice(v1)}")))
            guard: Expr = TRUE
            attached = [(i, v) for i, p in ports for v in _atom(atoms, i).port(p).variables]
            if attached and rng.random() < 0.2:
                i, v = rng.choice(attached)
                guard = Binary("!=", Var(f"{i}.{v}"), Const(rng.randrange(INT_RANGE)))
            inters.append(Interaction(f"a{len(inters)}", tuple(ports), guard, tuple(func)))
    pri: list[tuple[str, str]] = []
    if len(inters) > 1 and rng.random() < 0.3:
        lo, hi = rng.sample([a.name for a in inters], 2)
        if not priority_cycle([(lo, hi)]):
            pri.append((lo, hi))
    c = CompositeComponent(name, tuple(atoms), tuple(inters), tuple(pri))
    diags = validate(c, strict=True)
    if diags:
        raise AssertionError(f"generator produced an invalid model: {diags}")
    return c


def _atom(atoms, name):
    return next(a for a in atoms if a.name == name)


# ---------------------------------------------------------------------------
# Pointcuts and aspects


def random_lpc_atom(rng: random.Random, b: AtomicComponent, port_enabled: bool = True) -> LocalPointcut:
    kinds = ["loc", "rguard", "rfunc", "write", "exec"] + (["enabled"] if port_enabled else [])
    k = rng.choice(kinds)
    if k == "loc":
        return AtLocation(rng.choice(b.locations))
    if k == "rguard":
        return ReadVarGuard(rng.choice(b.var_names))
    if k == "rfunc":
        return ReadVarFunc(rng.choice(b.var_names))
    if k == "write":
        return Write(rng.choice(b.var_names))
    if k == "exec":
        return PortExecute(rng.choice(b.port_names))
    return PortEnabled(rng.choice(b.port_names))


def random_lpc(
    rng: random.Random, b: AtomicComponent, port_enabled: bool = True, max_size: int = 3
) -> LocalPointcut:
    parts = [random_lpc_atom(rng, b, port_enabled) for _ in range(rng.randint(1, max_size))]
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def random_local_aspect(
    rng: random.Random,
    b: AtomicComponent,
    aid: str,
    lpc: Optional[LocalPointcut] = None,
    port_enabled: bool = True,
) -> LocalAspect:
    """Aspect whose advice touches only its own inter-type variable."""
    m = f"m_{aid}"
    V = (Variable(m, "int", 0),)
    before = (Assign(m, Binary("%", Binary("+", Var(m), Const(1)), Const(4))),)
    after = (Assign(m, Binary("%", Binary("*", Var(m), Const(2)), Const(4))),)
    resets: list = []
    if rng.random() < 0.4:
        g: Expr = rng.choice(
            [TRUE, Binary("==", Var(m), Const(2)), Binary("<", Var("x"), Const(2))]
        )
        resets.append((rng.choice(b.locations), g))
    return LocalAspect(
        aid, b.name, lpc if lpc is not None else random_lpc(rng, b, port_enabled), V,
        LocalAdvice(before, after, tuple(resets)),
    )


def random_gpc(rng: random.Random, c: CompositeComponent) -> GlobalPointcut:
    if not c.interactions or rng.random() < 0.1:
        a = rng.choice(c.atoms)
        return GlobalPointcut(frozenset({(a.name, rng.choice(a.port_names))}))
    a = rng.choice(c.interactions)
    ports = frozenset(p for p in a.ports if rng.random() < 0.6) or frozenset({rng.choice(a.ports)})
    reads = frozenset(v for v in var_read(a.func) if rng.random() < 0.5)
    writes = frozenset(v for v in var_write(a.func) if rng.random() < 0.5)
    scope = {f"{i}.{v}" for i, p in ports for v in c.atom(i).port(p).variables}
    return GlobalPointcut(ports, reads & scope, writes & scope)


def random_global_aspect(rng: random.Random, c: CompositeComponent, aid: str) -> GlobalAspect:
    g = f"{aid}.g"
    V = (Variable("g", "int", 0),)
    before = (Assign(g, Binary("%", Binary("+", Var(g), Const(1)), Const(INT_RANGE))),)
    after = (Assign(g, Binary("%", Binary("+", Var(g), Const(2)), Const(INT_RANGE))),)
    return GlobalAspect(aid, random_gpc(rng, c), V, GlobalAdvice(before, after), component=aid)


# ---------------------------------------------------------------------------
# Helpers for negative controls: only aspects with reachable joinpoints make
# a dropped or misplaced advice observable.


def reachable_local_match(c: CompositeComponent, asp: LocalAspect, depth: int = 5) -> bool:
    ex = explore(c, depth)
    sys = as_system(c)
    b = c.atom(asp.target)
    for E in ex.events:
        e = map_event(sys, E, asp.target)
        if e is not None and match_local(e, asp.pointcut, b):
            return True
    return False


def executed_interactions(c: CompositeComponent, depth: int = 5) -> set[str]:
    return {E.interaction.name for E in explore(c, depth).events}
