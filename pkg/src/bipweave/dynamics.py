"""Operational semantics: enabledness, priorities, execution, traces, projection."""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .lang import EvalError, Value, compile_expr, compile_func
from .model import (
    AtomicComponent,
    BIPSystem,
    CompositeComponent,
    GlobalState,
    Interaction,
    LocalState,
    Transition,
)


class DynamicsError(Exception):
    """Runtime failure while evaluating guards or update functions."""


@dataclass(frozen=True)
class GlobalEvent:
    """One execution step ``q --a--> q2``.

    ``choice`` records, per involved instance, the transition that fired.
    """

    q: GlobalState
    interaction: Interaction
    choice: tuple[tuple[str, Transition], ...]
    q2: GlobalState

    def transition_of(self, instance: str) -> Optional[Transition]:
        for inst, t in self.choice:
            if inst == instance:
                return t
        return None


@dataclass(frozen=True)
class LocalEvent:
    """A projected step ``<<l, v>, tau, <l', v'>>`` of one instance."""

    instance: str
    q: LocalState
    tau: Transition
    q2: LocalState
    names: tuple[str, ...]

    @property
    def l(self) -> str:
        return self.q.location

    @property
    def l2(self) -> str:
        return self.q2.location

    @property
    def v(self) -> dict[str, Value]:
        return dict(zip(self.names, self.q.values))

    @property
    def v2(self) -> dict[str, Value]:
        return dict(zip(self.names, self.q2.values))


@dataclass
class BIPTrace:
    q0: GlobalState
    events: list[GlobalEvent] = field(default_factory=list)
    deadlock: bool = False
    error: Optional[str] = None

    @property
    def states(self) -> list[GlobalState]:
        return [self.q0, *(e.q2 for e in self.events)]


@dataclass
class Exploration:
    """Result of a bounded breadth-first exploration."""

    states: set
    events: list[GlobalEvent]
    deadlocks: set
    truncated: bool
    depth_of: dict
    parent: dict  # state -> (previous state, event) on a shortest path

    def path_to(self, q: GlobalState) -> list[GlobalEvent]:
        out: list[GlobalEvent] = []
        while q in self.parent and self.parent[q] is not None:
            prev, ev = self.parent[q]
            out.append(ev)
            q = prev
        return list(reversed(out))


class _CompiledInteraction:
    __slots__ = ("inter", "parts", "guard", "func", "slots")

    def __init__(self, inter: Interaction, parts, guard, func, slots):
        self.inter = inter
        self.parts = parts  # list of (atom index, port name)
        self.guard = guard
        self.func = func
        self.slots = slots  # list of (atom index, var index)


class Engine:
    """Precompiled evaluator for one :class:`BIPSystem`."""

    def __init__(self, system: BIPSystem):
        self.system = system
        c = system.composite
        self.composite = c
        self.atoms: tuple[AtomicComponent, ...] = c.atoms
        self.atom_index = {a.name: i for i, a in enumerate(c.atoms)}
        self.var_index = [{v.name: j for j, v in enumerate(a.variables)} for a in c.atoms]
        # per atom: location -> port -> list of (transition, guard fn, func fn)
        self.trans: list[dict[str, dict[str, list]]] = []
        for i, a in enumerate(c.atoms):
            table: dict[str, dict[str, list]] = {}
            vi = self.var_index[i]
            for t in a.transitions:
                g = compile_expr(t.guard, self._slot(vi, a.name))
                f = compile_func(t.func, self._slot(vi, a.name))
                table.setdefault(t.src, {}).setdefault(t.port, []).append((t, g, f))
            self.trans.append(table)
        self.inters: list[_CompiledInteraction] = []
        for inter in c.interactions:
            slots: list[tuple[int, int]] = []
            names: dict[str, int] = {}

            def slot(n: str, _names=names, _slots=slots) -> int:
                if n not in _names:
                    inst, _, var = n.partition(".")
                    if inst not in self.atom_index:
                        raise DynamicsError(f"interaction {inter.name}: unknown instance in '{n}'")
                    ai = self.atom_index[inst]
                    if var not in self.var_index[ai]:
                        raise DynamicsError(f"interaction {inter.name}: unknown variable '{n}'")
                    _names[n] = len(_slots)
                    _slots.append((ai, self.var_index[ai][var]))
                return _names[n]

            g = compile_expr(inter.guard, slot)
            f = compile_func(inter.func, slot)
            parts = [(self.atom_index[i], p) for i, p in inter.ports]
            self.inters.append(_CompiledInteraction(inter, parts, g, f, slots))
        # transitive dominance: name -> names of interactions that dominate it
        higher: dict[str, set[str]] = {}
        for lo, hi in c.priorities:
            higher.setdefault(lo, set()).add(hi)
        changed = True
        while changed:
            changed = False
            for lo, his in higher.items():
                extra = set()
                for h in his:
                    extra |= higher.get(h, set())
                if not extra <= his:
                    his |= extra
                    changed = True
        self.dominators = higher

    @staticmethod
    def _slot(vi: dict[str, int], owner: str) -> Callable[[str], int]:
        def slot(n: str) -> int:
            if n not in vi:
                raise DynamicsError(f"atom {owner}: unbound variable '{n}'")
            return vi[n]

        return slot

    # -- enabledness -------------------------------------------------------

    def enabled_transitions(self, i: int, s: LocalState) -> list[Transition]:
        out = []
        env = list(s.values)
        for per_port in self.trans[i].get(s.location, {}).values():
            for t, g, _ in per_port:
                if self._guard(g, env, t):
                    out.append(t)
        return out

    def _guard(self, g, env, t) -> bool:
        try:
            return bool(g(env))
        except EvalError as exc:
            raise DynamicsError(f"guard of transition {t.name}: {exc}") from None

    def _candidates(self, q: GlobalState, i: int, port: str) -> list:
        s = q[i]
        env = list(s.values)
        return [
            (t, f)
            for t, g, f in self.trans[i].get(s.location, {}).get(port, ())
            if self._guard(g, env, t)
        ]

    def enabled(self, q: GlobalState) -> list[tuple[_CompiledInteraction, list]]:
        """Enabled interactions after priority filtering, with candidates."""
        pre: list[tuple[_CompiledInteraction, list]] = []
        for ci in self.inters:
            cands = []
            for ai, port in ci.parts:
                c = self._candidates(q, ai, port)
                if not c:
                    break
                cands.append(c)
            else:
                env = [q[ai].values[vj] for ai, vj in ci.slots]
                try:
                    ok = bool(ci.guard(env))
                except EvalError as exc:
                    raise DynamicsError(f"guard of interaction {ci.inter.name}: {exc}") from None
                if ok:
                    pre.append((ci, cands))
        if not self.dominators or len(pre) < 2:
            return pre
        names = {ci.inter.name for ci, _ in pre}
        return [
            (ci, cands)
            for ci, cands in pre
            if not (self.dominators.get(ci.inter.name, set()) & names)
        ]

    # -- execution ---------------------------------------------------------

    def fire(self, q: GlobalState, ci: _CompiledInteraction, picks: Sequence) -> GlobalState:
        """Execute ``ci`` with the chosen ``(transition, func)`` per port."""
        values = [list(s.values) for s in q]
        env = [values[ai][vj] for ai, vj in ci.slots]
        try:
            ci.func(env)
        except EvalError as exc:
            raise DynamicsError(f"interaction {ci.inter.name}: {exc}") from None
        for (ai, vj), val in zip(ci.slots, env):
            values[ai][vj] = val
        new = list(q)
        for (ai, _), (t, f) in zip(ci.parts, picks):
            vals = values[ai]
            try:
                f(vals)
            except EvalError as exc:
                raise DynamicsError(f"transition {t.name}: {exc}") from None
            new[ai] = LocalState(t.dest, tuple(vals))
        return tuple(new)

    def successors(self, q: GlobalState) -> list[GlobalEvent]:
        out: list[GlobalEvent] = []
        for ci, cands in self.enabled(q):
            for picks in _product(cands):
                q2 = self.fire(q, ci, picks)
                choice = tuple(
                    (self.atoms[ai].name, t) for (ai, _), (t, _) in zip(ci.parts, picks)
                )
                out.append(GlobalEvent(q, ci.inter, choice, q2))
        return out


def _product(lists: Sequence[Sequence]) -> Iterable[tuple]:
    if not lists:
        yield ()
        return
    for x in lists[0]:
        for rest in _product(lists[1:]):
            yield (x, *rest)


_ENGINES: dict[int, tuple[BIPSystem, Engine]] = {}


def engine(system: BIPSystem | CompositeComponent) -> Engine:
    """Cached engine for ``system`` (a composite is wrapped on first use)."""
    hit = _ENGINES.get(id(system))
    if hit is not None and hit[0] is system:
        return hit[1]
    if len(_ENGINES) > 256:
        _ENGINES.clear()
    e = Engine(as_system(system))
    _ENGINES[id(system)] = (system, e)
    return e


def as_system(x) -> BIPSystem:
    if isinstance(x, BIPSystem):
        return x
    if isinstance(x, CompositeComponent):
        return BIPSystem.of(x)
    raise TypeError(f"expected a system or composite, got {type(x).__name__}")


# ---------------------------------------------------------------------------
# Public operations


def enabled_transitions(b: AtomicComponent, s: LocalState) -> list[Transition]:
    """Transitions of ``b`` leaving ``s.location`` whose guard holds."""
    sysm = BIPSystem.of(CompositeComponent("_", (b,), ()))
    return engine(sysm).enabled_transitions(0, s)


def enabled_interactions(system: BIPSystem, q: GlobalState) -> list[Interaction]:
    return [ci.inter for ci, _ in engine(system).enabled(q)]


def step(
    system: BIPSystem,
    q: GlobalState,
    a: Interaction | str,
    choice: Optional[dict[str, str]] = None,
    rng: Optional[random.Random] = None,
) -> GlobalState:
    """Execute interaction ``a`` from ``q``.

    When an involved instance has several enabled transitions on its port,
    ``choice`` (instance -> transition name) or ``rng`` must settle it.
    """
    return step_event(system, q, a, choice, rng).q2


def step_event(system, q, a, choice=None, rng=None) -> GlobalEvent:
    eng = engine(system)
    name = a if isinstance(a, str) else a.name
    for ci, cands in eng.enabled(q):
        if ci.inter.name != name:
            continue
        picks = []
        for (ai, port), cs in zip(ci.parts, cands):
            inst = eng.atoms[ai].name
            if choice and inst in choice:
                sel = [c for c in cs if c[0].name == choice[inst]]
                if not sel:
                    raise DynamicsError(f"transition {choice[inst]} of {inst} is not enabled")
                picks.append(sel[0])
            elif len(cs) == 1:
                picks.append(cs[0])
            elif rng is not None:
                picks.append(cs[rng.randrange(len(cs))])
            else:
                names = ", ".join(t.name for t, _ in cs)
                raise DynamicsError(
                    f"instance {inst} has several enabled transitions on {port}: {names}"
                )
        q2 = eng.fire(q, ci, picks)
        ch = tuple((eng.atoms[ai].name, t) for (ai, _), (t, _) in zip(ci.parts, picks))
        return GlobalEvent(q, ci.inter, ch, q2)
    raise DynamicsError(f"interaction {name} is not enabled")


def run(system: BIPSystem, max_steps: int, seed: int = 0) -> BIPTrace:
    """Random run of at most ``max_steps`` steps, reproducible from ``seed``."""
    system = as_system(system)
    eng = engine(system)
    rng = random.Random(seed)
    trace = BIPTrace(system.q0)
    q = system.q0
    for _ in range(max_steps):
        try:
            en = eng.enabled(q)
            if not en:
                trace.deadlock = True
                break
            ci, cands = en[rng.randrange(len(en))]
            picks = [cs[rng.randrange(len(cs))] for cs in cands]
            q2 = eng.fire(q, ci, picks)
        except DynamicsError as exc:
            trace.error = str(exc)
            break
        ch = tuple((eng.atoms[ai].name, t) for (ai, _), (t, _) in zip(ci.parts, picks))
        trace.events.append(GlobalEvent(q, ci.inter, ch, q2))
        q = q2
    else:
        if max_steps >= 0 and not eng.enabled(q):
            trace.deadlock = True
    return trace


def global_trace(rho: BIPTrace) -> list[Interaction]:
    return [e.interaction for e in rho.events]


def map_event(system: BIPSystem, E: GlobalEvent, instance: str) -> Optional[LocalEvent]:
    """Project ``E`` onto ``instance``; ``None`` stands for the empty event."""
    system = as_system(system)
    t = E.transition_of(instance)
    if t is None:
        return None
    c = system.composite
    i = next(k for k, a in enumerate(c.atoms) if a.name == instance)
    return LocalEvent(instance, E.q[i], t, E.q2[i], c.atoms[i].var_names)


def map_trace(system: BIPSystem, events: Iterable[GlobalEvent], instance: str) -> list[LocalEvent]:
    out = []
    for E in events:
        e = map_event(system, E, instance)
        if e is not None:
            out.append(e)
    return out


def explore(system: BIPSystem, depth: int, max_states: int = 200_000) -> Exploration:
    """Breadth-first exploration of all behaviours up to ``depth`` steps."""
    system = as_system(system)
    eng = engine(system)
    q0 = system.q0
    depth_of = {q0: 0}
    parent: dict = {q0: None}
    events: list[GlobalEvent] = []
    seen_events: set = set()
    deadlocks: set = set()
    truncated = False
    frontier = deque([q0])
    while frontier:
        q = frontier.popleft()
        d = depth_of[q]
        succ = eng.successors(q)
        if not succ:
            deadlocks.add(q)
            continue
        if d >= depth:
            continue
        for ev in succ:
            key = (ev.q, ev.interaction.name, tuple((i, t.name) for i, t in ev.choice), ev.q2)
            if key not in seen_events:
                seen_events.add(key)
                events.append(ev)
            if ev.q2 not in depth_of:
                if len(depth_of) >= max_states:
                    truncated = True
                    continue
                depth_of[ev.q2] = d + 1
                parent[ev.q2] = (q, ev)
                frontier.append(ev.q2)
    return Exploration(set(depth_of), events, deadlocks, truncated, depth_of, parent)


# ---------------------------------------------------------------------------
# Text rendering of states and traces


def _fmt_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def format_local(a: AtomicComponent, s: LocalState) -> str:
    vals = ",".join(f"{n}={_fmt_value(v)}" for n, v in zip(a.var_names, s.values))
    return f"{a.name}@{s.location}{{{vals}}}"


def format_state(system: BIPSystem, q: GlobalState) -> str:
    system = as_system(system)
    return " ".join(format_local(a, s) for a, s in zip(system.composite.atoms, q))


def dump_trace(system: BIPSystem, rho: BIPTrace) -> str:
    """One line per step: ``q_i | interaction | q_{i+1}``."""
    system = as_system(system)
    lines = [
        f"{format_state(system, e.q)} | {e.interaction.name} | {format_state(system, e.q2)}"
        for e in rho.events
    ]
    return "\n".join(lines) + ("\n" if lines else "")
