"""Executable correctness oracles for weaving, checked by bounded exploration.

Every check is phrased as a *monitor*: a small state machine stepped over the
global events of the woven system. The search explores the product of the
system states and monitor states breadth-first, so a violation comes with a
shortest trace that :meth:`ConformanceVerdict.replay` can re-execute.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Union

from .dynamics import (
    DynamicsError,
    GlobalEvent,
    as_system,
    engine,
    format_state,
    map_event,
    step_event,
)
from .global_aop import GlobalAspect, match_global, rem_global, wrapped
from .lang import EvalError, Marker, ends_with, evaluate, starts_with
from .local_aop import (
    LocalAspect,
    LocalPointcut,
    PortEnabled,
    PortExecute,
    And,
    Instrument,
    conjuncts,
    early,
    match_local,
    rem_local,
    select_local,
)
from .model import AtomicComponent, BIPSystem, CompositeComponent

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"

DEFAULT_DEPTH = 12
DEFAULT_MAX_STATES = 200_000

SystemLike = Union[BIPSystem, CompositeComponent]


@dataclass(frozen=True)
class Counterexample:
    events: tuple[GlobalEvent, ...]  # the last event is the offending one
    reason: str

    @property
    def prefix(self) -> tuple[GlobalEvent, ...]:
        return self.events[:-1]

    @property
    def event(self) -> GlobalEvent:
        return self.events[-1]


@dataclass
class ConformanceVerdict:
    proposition: str
    subject: str
    status: str
    counterexample: Optional[Counterexample] = None
    states: int = 0
    events: int = 0
    truncated: bool = False
    warnings: list[str] = field(default_factory=list)
    system: Optional[BIPSystem] = field(default=None, repr=False)
    monitor: Any = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def replay(self) -> Optional[str]:
        """Re-execute the counterexample; return the reproduced violation."""
        if self.counterexample is None or self.system is None:
            return None
        return replay(self.system, self.monitor, self.counterexample)

    def format(self) -> str:
        head = (
            f"{self.proposition} [{self.subject}]: {self.status} "
            f"(states={self.states}, events={self.events}"
            + (", truncated" if self.truncated else "")
            + ")"
        )
        lines = [head]
        lines.extend(f"  warning: {w}" for w in self.warnings)
        cex = self.counterexample
        if cex is not None and self.system is not None:
            lines.append(f"  reason: {cex.reason}")
            lines.append("  trace:")
            for e in cex.events:
                lines.append(
                    f"    {format_state(self.system, e.q)} | {e.interaction.name} | "
                    f"{format_state(self.system, e.q2)}"
                )
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Product search


def _search(
    system: BIPSystem, monitor, depth: int, max_states: int, proposition: str, subject: str
) -> ConformanceVerdict:
    eng = engine(system)
    start = (system.q0, monitor.initial)
    parent: dict = {start: None}
    depth_of = {start: 0}
    frontier = deque([start])
    checked = 0
    deadlocks = 0
    truncated = False
    verdict = ConformanceVerdict(proposition, subject, PASS, system=system, monitor=monitor)
    while frontier:
        node = frontier.popleft()
        q, flags = node
        d = depth_of[node]
        try:
            succ = eng.successors(q)
        except (DynamicsError, EvalError) as exc:
            verdict.warnings.append(f"evaluation error: {exc}")
            truncated = True
            continue
        if not succ:
            deadlocks += 1
            continue
        if d >= depth:
            continue
        for ev in succ:
            flags2, reason = monitor.step(flags, ev)
            checked += 1
            if reason is not None:
                path = [ev]
                cur = node
                while parent[cur] is not None:
                    cur, e = parent[cur]
                    path.append(e)
                verdict.status = FAIL
                verdict.counterexample = Counterexample(tuple(reversed(path)), reason)
                verdict.states, verdict.events = len(depth_of), checked
                return verdict
            nxt = (ev.q2, flags2)
            if nxt not in depth_of:
                if len(depth_of) >= max_states:
                    truncated = True
                    continue
                depth_of[nxt] = d + 1
                parent[nxt] = (node, ev)
                frontier.append(nxt)
    verdict.states, verdict.events, verdict.truncated = len(depth_of), checked, truncated
    if deadlocks:
        verdict.warnings.append(f"{deadlocks} deadlock state(s) reached")
    if truncated or depth <= 0:
        verdict.status = INCONCLUSIVE
    return verdict


def replay(system: BIPSystem, monitor, cex: Counterexample) -> Optional[str]:
    """Step the recorded choices again and return the monitor's final verdict.

    Raises :class:`DynamicsError` if the recorded trace cannot be reproduced.
    """
    q = system.q0
    flags = monitor.initial
    reason = None
    for E in cex.events:
        if E.q != q:
            raise DynamicsError("counterexample does not start from the reached state")
        choice = {inst: t.name for inst, t in E.choice}
        E2 = step_event(system, q, E.interaction.name, choice)
        if E2.q2 != E.q2:
            raise DynamicsError(f"replaying {E.interaction.name} reached a different state")
        flags, reason = monitor.step(flags, E2)
        q = E2.q2
    return reason


# ---------------------------------------------------------------------------
# Global weaving


class GlobalMonitor:
    """Advice present on an executed interaction iff its stripped form matches."""

    initial = ()

    def __init__(self, original: CompositeComponent, asp: GlobalAspect):
        self.gpc = asp.pointcut
        self.fb, self.fa = wrapped(asp)
        self.intertype = asp.intertype_name
        self.orig = {a.name: a for a in original.interactions}

    def step(self, flags, E: GlobalEvent):
        a = E.interaction
        f = a.func
        shaped = (
            len(f) >= len(self.fb) + len(self.fa)
            and starts_with(f, self.fb)
            and ends_with(f, self.fa)
        )
        rem = rem_global(a, self.fb, self.fa, self.intertype)
        matched = rem is not None and match_global(rem, self.gpc)
        if shaped != matched:
            return flags, f"interaction {a.name} carries the advice but does not match the pointcut"
        base = self.orig.get(a.name)
        if shaped and base is not None and rem != base:
            return flags, f"removing the advice from {a.name} does not give back the original interaction"
        if not shaped and base is not None and match_global(base, self.gpc):
            return flags, f"interaction {a.name} matches the pointcut but carries no advice"
        return flags, None


def check_global(
    original: SystemLike,
    woven: SystemLike,
    aspect: GlobalAspect,
    depth: int = DEFAULT_DEPTH,
    max_states: int = DEFAULT_MAX_STATES,
) -> ConformanceVerdict:
    o, w = as_system(original), as_system(woven)
    mon = GlobalMonitor(o.composite, aspect)
    return _search(w, mon, depth, max_states, "global-apply", aspect.aid)


# ---------------------------------------------------------------------------
# Local weaving


class LocalMonitor:
    """Before/after placement and reset behaviour along the projected trace.

    Monitor state: (seen an event of the instance, previous event ends with
    the before advice, previous event was a match that owes a reset check).
    """

    initial = (False, False, False)

    def __init__(self, system: BIPSystem, original: AtomicComponent, asp: LocalAspect):
        self.system = system
        self.original = original
        self.asp = asp
        ins = Instrument(asp.aid)
        self.fb = ins.before(asp.advice.before)
        self.fa = ins.after(asp.advice.after)
        self.d = early(asp.pointcut)
        self.V = tuple(v.name for v in asp.intertype)
        self.resets = asp.advice.resets

    def _base(self, loc: str) -> str:
        # a temporary location stands for the base location it precedes
        suffix = f"__bot_{self.asp.aid}"
        return loc[: -len(suffix)] if loc.endswith(suffix) else loc

    def step(self, flags, E: GlobalEvent):
        e = map_event(self.system, E, self.asp.target)
        if e is None:
            return flags, None
        seen, prev_fb, owed = flags
        if owed:
            ok = False
            for loc, g in self.resets:
                try:
                    holds = bool(evaluate(g, e.v))
                except EvalError:
                    holds = True
                if not holds or self._base(e.l2) == loc:
                    ok = True
                    break
            if not ok:
                return flags, (
                    f"a reset guard holds after a match but {self.asp.target} moved to {e.l2} "
                    f"through {e.tau.name}"
                )
        rem = rem_local(e, self.original, self.asp.aid, self.V)
        matched = rem is not None and match_local(rem, self.asp.pointcut, self.original)
        f = e.tau.func
        if self.d:
            before = (not seen) or prev_fb
            after = starts_with(f, self.fa)
        else:
            before = starts_with(f, self.fb)
            after = ends_with(f, self.fa)
        new = (True, ends_with(f, self.fb), matched and bool(self.resets))
        if matched != (before and after):
            what = "is a joinpoint but misses" if matched else "is not a joinpoint but carries"
            return new, f"event {e.tau.name} of {e.instance} {what} the advice (before={before}, after={after})"
        return new, None


def check_local(
    original: SystemLike,
    woven: SystemLike,
    aspect: LocalAspect,
    depth: int = DEFAULT_DEPTH,
    max_states: int = DEFAULT_MAX_STATES,
) -> ConformanceVerdict:
    o, w = as_system(original), as_system(woven)
    mon = LocalMonitor(w, o.composite.atom(aspect.target), aspect)
    return _search(w, mon, depth, max_states, "local-apply", aspect.aid)


# ---------------------------------------------------------------------------
# Local matching


def uses_port_enabled(lpc: LocalPointcut) -> bool:
    return any(isinstance(p, PortEnabled) for p in conjuncts(lpc))


class MatchMonitor:
    initial = ()

    def __init__(self, system: BIPSystem, instance: str, lpc: LocalPointcut):
        self.system = system
        self.instance = instance
        self.lpc = lpc
        self.b = system.composite.atom(instance)
        self.selected = select_local(self.b, lpc)

    def step(self, flags, E: GlobalEvent):
        e = map_event(self.system, E, self.instance)
        if e is None:
            return flags, None
        dynamic = match_local(e, self.lpc, self.b)
        static = e.tau in self.selected
        if dynamic != static:
            return flags, (
                f"event {e.tau.name} of {self.instance}: runtime match is {dynamic} "
                f"but selection membership is {static}"
            )
        return flags, None


def check_match_equivalence(
    system: SystemLike,
    instance: str,
    lpc: LocalPointcut,
    depth: int = DEFAULT_DEPTH,
    max_states: int = DEFAULT_MAX_STATES,
) -> ConformanceVerdict:
    """Runtime matching agrees with syntactic selection (portEnabled-free)."""
    if uses_port_enabled(lpc):
        raise ValueError("match equivalence only holds for pointcuts without portEnabled")
    s = as_system(system)
    return _search(s, MatchMonitor(s, instance, lpc), depth, max_states, "local-match", instance)


class EnabledMonitor:
    """Every executed transition on ``port`` was enabled when it fired."""

    initial = ()

    def __init__(self, system: BIPSystem, instance: str, port: str):
        self.system = system
        self.instance = instance
        self.port = port
        self.b = system.composite.atom(instance)

    def step(self, flags, E: GlobalEvent):
        e = map_event(self.system, E, self.instance)
        if e is None or not match_local(e, PortExecute(self.port), self.b):
            return flags, None
        if not match_local(e, PortEnabled(self.port), self.b):
            return flags, f"{e.tau.name} executed {self.port} while the port was not enabled"
        return flags, None


def check_simplification(
    system: SystemLike,
    instance: str,
    port: str,
    depth: int = DEFAULT_DEPTH,
    max_states: int = DEFAULT_MAX_STATES,
) -> ConformanceVerdict:
    """``portExecute(p) and portEnabled(p)`` selects and matches like ``portExecute(p)``."""
    s = as_system(system)
    b = s.composite.atom(instance)
    both = select_local(b, And(PortExecute(port), PortEnabled(port)))
    only = select_local(b, PortExecute(port))
    if both != only:
        return ConformanceVerdict(
            "simplification", f"{instance}.{port}", FAIL,
            Counterexample((), f"selections differ: {sorted(t.name for t in both ^ only)}"),
            system=s,
        )
    return _search(s, EnabledMonitor(s, instance, port), depth, max_states,
                   "simplification", f"{instance}.{port}")


# ---------------------------------------------------------------------------
# Negative controls: deliberately broken weaves


def strip_role(f, owner: str, role: str):
    """Remove the ``(owner, role)`` marker block, markers included."""
    out = []
    depth = 0
    for s in f:
        if isinstance(s, Marker) and s.owner == owner and s.role == role:
            depth += 1 if s.tag == "begin" else -1
            continue
        if depth == 0:
            out.append(s)
    return tuple(out)


def drop_local_advice(c: CompositeComponent, target: str, aid: str, role: str) -> CompositeComponent:
    """Remove the ``role`` advice of local aspect ``aid`` everywhere in ``target``."""
    b = c.atom(target)
    ts = tuple(replace(t, func=strip_role(t.func, aid, role)) for t in b.transitions)
    return c.replace_atom(replace(b, transitions=ts))


def drop_global_advice(c: CompositeComponent, aid: str) -> CompositeComponent:
    inters = tuple(
        replace(a, func=strip_role(strip_role(a.func, aid, "before"), aid, "after"))
        for a in c.interactions
    )
    return replace(c, interactions=inters)


def misplace_global_advice(
    c: CompositeComponent, asp: GlobalAspect, source: str, target: str
) -> CompositeComponent:
    """Move the advice of ``asp`` from interaction ``source`` onto ``target``."""
    fb, fa = wrapped(asp)
    pv = (asp.intertype_name, "pV")
    out = []
    for a in c.interactions:
        if a.name == source:
            a = rem_global(a, fb, fa, asp.intertype_name) or a
        elif a.name == target:
            ports = a.ports if pv in a.ports else a.ports + (pv,)
            a = replace(a, ports=ports, func=fb + a.func + fa)
        out.append(a)
    return replace(c, interactions=tuple(out))


__all__ = [
    "Counterexample",
    "ConformanceVerdict",
    "check_global",
    "check_local",
    "check_match_equivalence",
    "check_simplification",
    "drop_global_advice",
    "drop_local_advice",
    "early",
    "misplace_global_advice",
    "replay",
]
