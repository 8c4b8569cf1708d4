"""Global pointcuts over interactions, inter-type components and global weaving."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Union

from .lang import TRUE, UpdateFunction, ends_with, starts_with, var_read, var_write, wrap
from .model import (
    AtomicComponent,
    CompositeComponent,
    Interaction,
    Port,
    Transition,
    Variable,
    qualify,
)

INTERTYPE_PORT = "pV"
INTERTYPE_LOCATION = "l0"


class GlobalWeaveError(Exception):
    pass


@dataclass(frozen=True)
class GlobalPointcut:
    """Ports that must all take part, plus variables read and written."""

    ports: frozenset[tuple[str, str]] = frozenset()
    reads: frozenset[str] = frozenset()
    writes: frozenset[str] = frozenset()


@dataclass(frozen=True)
class GlobalAdvice:
    before: UpdateFunction = ()
    after: UpdateFunction = ()


@dataclass(frozen=True)
class GlobalAspect:
    aid: str
    pointcut: GlobalPointcut
    intertype: tuple[Variable, ...] = ()
    advice: GlobalAdvice = field(default_factory=GlobalAdvice)
    component: str = ""  # name of the inter-type instance; defaults to aid

    @property
    def intertype_name(self) -> str:
        return self.component or self.aid


def match_global(a: Interaction, gpc: GlobalPointcut) -> bool:
    return (
        gpc.ports <= a.port_set
        and gpc.reads <= var_read(a.func)
        and gpc.writes <= var_write(a.func)
    )


def select_global(c: CompositeComponent, gpc: GlobalPointcut) -> list[Interaction]:
    """Interactions of ``c`` matched by ``gpc``, in declaration order."""
    return [a for a in c.interactions if match_global(a, gpc)]


def make_intertype(V: Sequence[Variable], name: str = "intertype") -> AtomicComponent:
    """Single-location atom holding ``V``; its port is always enabled."""
    names = tuple(v.name for v in V)
    return AtomicComponent(
        name,
        (Port(INTERTYPE_PORT, names),),
        (INTERTYPE_LOCATION,),
        INTERTYPE_LOCATION,
        tuple(V),
        (Transition("stay", INTERTYPE_LOCATION, INTERTYPE_PORT, TRUE, (), INTERTYPE_LOCATION),),
    )


def advice_scope(
    c: CompositeComponent, gpc: GlobalPointcut, V: Sequence[Variable], intertype: str
) -> set[str]:
    """Qualified names an advice may touch: inter-type vars and vars of ``gpc`` ports."""
    scope = {qualify(intertype, v.name) for v in V}
    for inst, pname in gpc.ports:
        if not c.has_atom(inst):
            continue
        port = c.atom(inst).port(pname)
        if port is not None:
            scope.update(qualify(inst, v) for v in port.variables)
    return scope


def weave_global(
    c: CompositeComponent,
    I: Iterable[Union[Interaction, str]],
    V: Sequence[Variable],
    adv: GlobalAdvice,
    aid: str,
    gpc: Optional[GlobalPointcut] = None,
    intertype: Optional[str] = None,
) -> tuple[CompositeComponent, dict[str, str]]:
    """Attach the inter-type port and advice to the interactions in ``I``.

    Returns the woven composite and the interaction map (old name to new
    name; names are stable, so the map is the identity on ``I``).
    """
    bv_name = intertype or aid
    names = {x if isinstance(x, str) else x.name for x in I}
    known = {a.name: a for a in c.interactions}
    for x in I:
        n = x if isinstance(x, str) else x.name
        if n not in known or (not isinstance(x, str) and known[n] != x):
            raise GlobalWeaveError(f"interaction {n} is not part of the composite")
    if gpc is not None:
        scope = advice_scope(c, gpc, V, bv_name)
        for label, f in (("before", adv.before), ("after", adv.after)):
            bad = sorted((var_read(f) | var_write(f)) - scope)
            if bad:
                raise GlobalWeaveError(
                    f"{label} advice of {aid} uses variables outside its scope: {', '.join(bad)}"
                )
    bv = make_intertype(V, bv_name)
    if c.has_atom(bv_name):
        if c.atom(bv_name) != bv:
            raise GlobalWeaveError(f"instance name '{bv_name}' is already used")
        atoms = c.atoms
    else:
        atoms = c.atoms + (bv,)
    pv = (bv_name, INTERTYPE_PORT)
    fb = wrap(adv.before, aid, "before")
    fa = wrap(adv.after, aid, "after")
    new_inters = []
    gmap: dict[str, str] = {}
    for a in c.interactions:
        if a.name in names:
            ports = a.ports if pv in a.ports else a.ports + (pv,)
            a = replace(a, ports=ports, func=fb + a.func + fa)
        gmap[a.name] = a.name
        new_inters.append(a)
    pri = tuple((gmap[lo], gmap[hi]) for lo, hi in c.priorities)
    return CompositeComponent(c.name, atoms, tuple(new_inters), pri), gmap


def weave_global_aspect(c: CompositeComponent, asp: GlobalAspect) -> CompositeComponent:
    I = select_global(c, asp.pointcut)
    return weave_global(
        c, I, asp.intertype, asp.advice, asp.aid, asp.pointcut, asp.intertype_name
    )[0]


def rem_global(
    a: Interaction, fb: UpdateFunction, fa: UpdateFunction, intertype: Optional[str] = None
) -> Optional[Interaction]:
    """Undo a global advice given its wrapped before/after functions.

    Returns ``None`` when ``a.func`` is not of the form ``fb + F + fa``.
    """
    f = a.func
    if len(f) < len(fb) + len(fa) or not starts_with(f, fb) or not ends_with(f, fa):
        return None
    core = tuple(f[len(fb) : len(f) - len(fa)])
    ports = tuple(p for p in a.ports if not (p[1] == INTERTYPE_PORT and p[0] == intertype))
    return Interaction(a.name, ports, a.guard, core)


def wrapped(asp: GlobalAspect) -> tuple[UpdateFunction, UpdateFunction]:
    return wrap(asp.advice.before, asp.aid, "before"), wrap(asp.advice.after, asp.aid, "after")
