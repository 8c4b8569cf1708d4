"""Local pointcuts, selection, edit frames and weaving into a single atom."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Union

from .dynamics import LocalEvent
from .lang import (
    FALSE,
    TRUE,
    Assign,
    Binary,
    Expr,
    Stmt,
    UpdateFunction,
    Var,
    compile_expr,
    concat,
    conj,
    disj,
    neg,
    strip_blocks,
    var_read,
    var_write,
    wrap,
)
from .model import (
    AtomicComponent,
    CompositeComponent,
    Interaction,
    LocalState,
    Port,
    Transition,
    Variable,
    var_guard,
)


class WeaveError(Exception):
    """A weave could not be performed (bad input or name collision)."""


# ---------------------------------------------------------------------------
# Pointcut syntax


@dataclass(frozen=True)
class AtLocation:
    loc: str


@dataclass(frozen=True)
class ReadVarGuard:
    var: str


@dataclass(frozen=True)
class ReadVarFunc:
    var: str


@dataclass(frozen=True)
class Write:
    var: str


@dataclass(frozen=True)
class PortEnabled:
    port: str


@dataclass(frozen=True)
class PortExecute:
    port: str


@dataclass(frozen=True)
class And:
    left: "LocalPointcut"
    right: "LocalPointcut"


LocalPointcut = Union[AtLocation, ReadVarGuard, ReadVarFunc, Write, PortEnabled, PortExecute, And]
ATOM_KINDS = (AtLocation, ReadVarGuard, ReadVarFunc, Write, PortEnabled, PortExecute)


def conjuncts(lpc: LocalPointcut) -> list[LocalPointcut]:
    if isinstance(lpc, And):
        return conjuncts(lpc.left) + conjuncts(lpc.right)
    return [lpc]


def and_all(parts: Sequence[LocalPointcut]) -> LocalPointcut:
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def pointcut_names(lpc: LocalPointcut) -> list[tuple[str, str]]:
    """``(kind, name)`` pairs referenced by the pointcut."""
    out = []
    for a in conjuncts(lpc):
        if isinstance(a, AtLocation):
            out.append(("location", a.loc))
        elif isinstance(a, (ReadVarGuard, ReadVarFunc, Write)):
            out.append(("variable", a.var))
        else:
            out.append(("port", a.port))
    return out


def check_pointcut(b: AtomicComponent, lpc: LocalPointcut) -> list[str]:
    errs = []
    for kind, name in pointcut_names(lpc):
        ok = (
            name in b.locations
            if kind == "location"
            else (name in b.var_names if kind == "variable" else name in b.port_names)
        )
        if not ok:
            errs.append(f"pointcut refers to unknown {kind} '{name}' of {b.name}")
    return errs


# ---------------------------------------------------------------------------
# Edit points and frames


class EditPoint(enum.IntEnum):
    PE = 0
    CB = 1
    CE = 2
    RUN = 3


EditFrame = tuple  # tuple[EditPoint, EditPoint]

PE_CB = (EditPoint.PE, EditPoint.CB)
CB_CE = (EditPoint.CB, EditPoint.CE)
RUN_CB = (EditPoint.RUN, EditPoint.CB)
RUN_CE = (EditPoint.RUN, EditPoint.CE)
CANONICAL_FRAMES = frozenset({PE_CB, CB_CE, RUN_CB, RUN_CE})


def edit_frame(lpc: LocalPointcut) -> EditFrame:
    if isinstance(lpc, (AtLocation, ReadVarGuard)):
        return PE_CB
    if isinstance(lpc, (ReadVarFunc, Write, PortExecute)):
        return CB_CE
    if isinstance(lpc, PortEnabled):
        return RUN_CB
    if isinstance(lpc, And):
        a, b = edit_frame(lpc.left), edit_frame(lpc.right)
        return (max(a[0], b[0]), max(a[1], b[1]))
    raise TypeError(f"not a pointcut: {lpc!r}")


def early(lpc: LocalPointcut) -> bool:
    """Whether the before advice runs on the event preceding the joinpoint."""
    return edit_frame(lpc) not in (CB_CE, RUN_CE)


def selected_ports(lpc: LocalPointcut) -> frozenset[str]:
    if isinstance(lpc, PortEnabled):
        return frozenset({lpc.port})
    if isinstance(lpc, And):
        return selected_ports(lpc.left) | selected_ports(lpc.right)
    return frozenset()


def simplify_lpc(lpc: LocalPointcut) -> LocalPointcut:
    """Drop ``portEnabled(p)`` conjuncts made redundant by ``portExecute(p)``."""
    parts = conjuncts(lpc)
    executed = {a.port for a in parts if isinstance(a, PortExecute)}
    kept = [a for a in parts if not (isinstance(a, PortEnabled) and a.port in executed)]
    if len(kept) == len(parts):
        return lpc
    return and_all(kept)


# ---------------------------------------------------------------------------
# Syntactic neighbourhoods


def origin(M: Iterable[Transition]) -> frozenset[str]:
    return frozenset(t.src for t in M)


def dest(M: Iterable[Transition]) -> frozenset[str]:
    return frozenset(t.dest for t in M)


def siblings(b: AtomicComponent, M: Iterable[Transition]) -> frozenset[Transition]:
    o = origin(M)
    return frozenset(t for t in b.transitions if t.src in o)


def predecessors(b: AtomicComponent, M: Iterable[Transition]) -> frozenset[Transition]:
    o = origin(M)
    return frozenset(t for t in b.transitions if t.dest in o)


def syntactic_neighborhood(b: AtomicComponent, M: Iterable[Transition], kind: str):
    M = list(M)
    if kind == "origin":
        return origin(M)
    if kind == "dest":
        return dest(M)
    if kind == "siblings":
        return siblings(b, M)
    if kind == "predecessors":
        return predecessors(b, M)
    raise ValueError(f"unknown neighbourhood kind '{kind}'")


# ---------------------------------------------------------------------------
# Selection and matching


def select_local(b: AtomicComponent, lpc: LocalPointcut) -> frozenset[Transition]:
    T = b.transitions
    if isinstance(lpc, AtLocation):
        return frozenset(t for t in T if t.src == lpc.loc)
    if isinstance(lpc, ReadVarGuard):
        return siblings(b, [t for t in T if lpc.var in var_guard(t)])
    if isinstance(lpc, ReadVarFunc):
        return frozenset(t for t in T if lpc.var in var_read(t.func))
    if isinstance(lpc, Write):
        return frozenset(t for t in T if lpc.var in var_write(t.func))
    if isinstance(lpc, PortEnabled):
        return siblings(b, [t for t in T if t.port == lpc.port])
    if isinstance(lpc, PortExecute):
        return frozenset(t for t in T if t.port == lpc.port)
    if isinstance(lpc, And):
        return select_local(b, lpc.left) & select_local(b, lpc.right)
    raise TypeError(f"not a pointcut: {lpc!r}")


@lru_cache(maxsize=4096)
def _guard_fn(guard: Expr, names: tuple[str, ...]):
    index = {n: i for i, n in enumerate(names)}
    return compile_expr(guard, index.__getitem__)


def port_enabled_at(b: AtomicComponent, port: str, s: LocalState, names: Sequence[str]) -> bool:
    """Some transition of ``b`` on ``port`` leaves ``s.location`` with a true guard."""
    names = tuple(names)
    env = list(s.values)
    for t in b.transitions:
        if t.src == s.location and t.port == port and _guard_fn(t.guard, names)(env):
            return True
    return False


def match_local(e: LocalEvent, lpc: LocalPointcut, b: AtomicComponent) -> bool:
    """Does the local event ``e`` of component ``b`` match ``lpc``?"""
    if isinstance(lpc, AtLocation):
        return e.l == lpc.loc
    if isinstance(lpc, ReadVarGuard):
        return any(t.src == e.l and lpc.var in var_guard(t) for t in b.transitions)
    if isinstance(lpc, ReadVarFunc):
        return lpc.var in var_read(e.tau.func)
    if isinstance(lpc, Write):
        return lpc.var in var_write(e.tau.func)
    if isinstance(lpc, PortEnabled):
        return port_enabled_at(b, lpc.port, e.q, e.names)
    if isinstance(lpc, PortExecute):
        return e.tau.port == lpc.port
    if isinstance(lpc, And):
        return match_local(e, lpc.left, b) and match_local(e, lpc.right, b)
    raise TypeError(f"not a pointcut: {lpc!r}")


# ---------------------------------------------------------------------------
# Advice, aspects and instrumentation helpers


@dataclass(frozen=True)
class LocalAdvice:
    before: UpdateFunction = ()
    after: UpdateFunction = ()
    resets: tuple[tuple[str, Expr], ...] = ()  # (destination location, guard)


@dataclass(frozen=True)
class LocalAspect:
    aid: str
    target: str
    pointcut: LocalPointcut
    intertype: tuple[Variable, ...] = ()
    advice: LocalAdvice = field(default_factory=LocalAdvice)


@dataclass(frozen=True)
class Instrument:
    """Names and helper functions owned by one woven local aspect."""

    aid: str

    @property
    def ip(self) -> str:
        return f"ip_{self.aid}"

    @property
    def flag(self) -> str:
        return f"b_aop_{self.aid}"

    @property
    def interaction(self) -> str:
        return f"ip_{self.aid}"

    @property
    def f_set(self) -> UpdateFunction:
        return wrap((Assign(self.flag, TRUE),), self.aid, "set")

    @property
    def f_clear(self) -> UpdateFunction:
        return wrap((Assign(self.flag, FALSE),), self.aid, "clear")

    def before(self, f: Sequence[Stmt]) -> UpdateFunction:
        return wrap(f, self.aid, "before")

    def after(self, f: Sequence[Stmt]) -> UpdateFunction:
        return wrap(f, self.aid, "after")

    def temp(self, loc: str) -> str:
        return f"{loc}__bot_{self.aid}"


def mk_guard(SP: Iterable[str], loc: str, M: Iterable[Transition]) -> Expr:
    """Conjunction over ports of the disjunction of their guards at ``loc``."""
    Ms = sorted(M, key=lambda t: t.name)
    parts = []
    for p in sorted(SP):
        parts.append(disj(*[t.guard for t in Ms if t.src == loc and t.port == p]))
    return conj(*parts)


def weave_reset(
    R: Sequence[tuple[str, Expr]], L_R: Iterable[str], ins: Instrument
) -> list[Transition]:
    """One ``ip`` transition per reset pair and anchor location."""
    out = []
    anchors = sorted(L_R)
    for k, (target, g) in enumerate(R):
        for loc in anchors:
            out.append(
                Transition(
                    f"reset_{ins.aid}_{k}_{loc}",
                    loc,
                    ins.ip,
                    conj(Var(ins.flag), g),
                    ins.f_clear,
                    target,
                )
            )
    return out


@dataclass
class FrameResult:
    transitions: list[Transition]
    locations: list[str]
    temp: list[str]
    anchors: frozenset[str]
    gmap: dict[str, tuple[Transition, ...]]
    initial: str
    temp_of: dict[str, str] = field(default_factory=dict)


@dataclass
class WeaveReport:
    """Audit trail of one local weave."""

    aid: str
    target: str
    frame: EditFrame
    matched: frozenset[str]
    transitions: tuple[Transition, ...]
    locations: tuple[str, ...]
    temp: tuple[str, ...]
    anchors: frozenset[str]
    gmap: dict[str, tuple[Transition, ...]]
    resets: tuple[Transition, ...]
    ip: str
    flag: str
    interaction: str

    def image(self, names: Iterable[str]) -> frozenset[str]:
        out: set[str] = set()
        for n in names:
            if n not in self.gmap:
                raise WeaveError(f"transition {n} is outside the weave map domain")
            out.update(t.name for t in self.gmap[n])
        return frozenset(out)

    def summary(self) -> str:
        changed = sum(1 for n, ts in self.gmap.items() if len(ts) != 1 or ts[0].name != n)
        return (
            f"aspect {self.aid} on {self.target}: frame <{self.frame[0].name},{self.frame[1].name}>, "
            f"{len(self.matched)} matched, {len(self.temp)} temporary location(s), "
            f"{len(self.resets)} reset transition(s), {changed} duplicated/renamed"
        )


def _fresh(name: str, used: set[str]) -> str:
    out = name
    k = 1
    while out in used:
        k += 1
        out = f"{name}_{k}"
    used.add(out)
    return out


def _frame_cur(b, M, fb, fa, ins) -> FrameResult:
    Mn = {t.name for t in M}
    O = origin(M)
    T: list[Transition] = []
    g: dict[str, tuple[Transition, ...]] = {}
    for t in b.transitions:
        if t.name in Mn:
            n = replace(t, func=concat(fb, t.func, ins.f_set, fa))
        elif t.dest in O:
            n = replace(t, func=concat(t.func, ins.f_clear))
        else:
            n = t
        T.append(n)
        g[t.name] = (n,)
    return FrameResult(T, list(b.locations), [], dest(M), g, b.initial)


def _frame_prev(b, M, fb, fa, ins, used) -> FrameResult:
    Mn = {t.name for t in M}
    O = origin(M)
    loops = [t for t in M if t.dest in O]
    loop_dests = sorted({t.dest for t in loops})
    temp = {l: _fresh(ins.temp(l), used) for l in loop_dests}
    T: list[Transition] = []
    g: dict[str, tuple[Transition, ...]] = {}
    for t in b.transitions:
        if t.name in Mn and t.dest in O:
            n = replace(t, func=concat(fa, ins.f_set, t.func), dest=temp[t.dest])
        elif t.name in Mn:
            n = replace(t, func=concat(fa, ins.f_set, t.func))
        elif t.dest in O:
            n = replace(t, func=concat(t.func, ins.f_clear, fb))
        else:
            n = t
        T.append(n)
        g[t.name] = (n,)
    tnames = {t.name for t in b.transitions}
    for l in loop_dests:
        T.append(
            Transition(
                _fresh(f"{l}__bridge_{ins.aid}", tnames), temp[l], ins.ip, TRUE,
                concat(ins.f_clear, fb), l,
            )
        )
    if loops:
        anchors = (dest(M) - frozenset(loop_dests)) | frozenset(temp.values())
    else:
        anchors = dest(M)
    temps = [temp[l] for l in loop_dests]
    return FrameResult(T, list(b.locations) + temps, temps, anchors, g, b.initial, temp)


def _frame_run(b, M, fb, fa, ins, lpc, used, with_before_on_entry: bool) -> FrameResult:
    Mn = {t.name for t in M}
    O = sorted(origin(M))
    temp = {l: _fresh(ins.temp(l), used) for l in O}
    sp = selected_ports(lpc)
    sib = siblings(b, M)
    flag = Var(ins.flag)
    tnames = {t.name for t in b.transitions}
    T: list[Transition] = []
    g: dict[str, tuple[Transition, ...]] = {}
    for t in b.transitions:
        d = temp.get(t.dest, t.dest)
        if t.name in Mn:
            f_on = concat(fa, t.func) if with_before_on_entry else concat(fb, t.func, fa)
            on = replace(t, name=_fresh(f"{t.name}__on", tnames), guard=conj(flag, t.guard),
                         func=f_on, dest=d)
            off = replace(t, name=_fresh(f"{t.name}__off", tnames), guard=conj(neg(flag), t.guard),
                          dest=d)
            T.extend((on, off))
            g[t.name] = (on, off)
        elif t.dest in temp:
            n = replace(t, dest=d)
            T.append(n)
            g[t.name] = (n,)
        else:
            T.append(t)
            g[t.name] = (t,)
    for l in O:
        cond = mk_guard(sp, l, sib)
        enter = concat(ins.f_set, fb) if with_before_on_entry else ins.f_set
        T.append(Transition(_fresh(f"{l}__pre_{ins.aid}", tnames), temp[l], ins.ip, cond, enter, l))
        T.append(Transition(_fresh(f"{l}__skip_{ins.aid}", tnames), temp[l], ins.ip, neg(cond),
                            ins.f_clear, l))
    anchors = (dest(M) - frozenset(O)) | frozenset(temp.values())
    init = temp.get(b.initial, b.initial)
    temps = [temp[l] for l in O]
    return FrameResult(T, list(b.locations) + temps, temps, anchors, g, init, temp)


def weave_frame(
    b: AtomicComponent,
    M: Iterable[Transition],
    fb: UpdateFunction,
    fa: UpdateFunction,
    frame: EditFrame,
    lpc: LocalPointcut,
    ins: Instrument,
) -> FrameResult:
    """Instrument ``b`` for one edit frame; ``fb``/``fa`` are already wrapped."""
    M = frozenset(M)
    if not M <= frozenset(b.transitions):
        raise WeaveError("match set contains transitions outside the component")
    used = set(b.locations)
    if frame == CB_CE:
        return _frame_cur(b, M, fb, fa, ins)
    if frame == PE_CB:
        return _frame_prev(b, M, fb, fa, ins, used)
    if frame == RUN_CB:
        return _frame_run(b, M, fb, fa, ins, lpc, used, True)
    if frame == RUN_CE:
        return _frame_run(b, M, fb, fa, ins, lpc, used, False)
    raise WeaveError(f"non-canonical edit frame {frame}")


def check_advice(b: AtomicComponent, V: Sequence[Variable], adv: LocalAdvice) -> list[str]:
    allowed = set(b.var_names) | {v.name for v in V}
    errs = []
    for label, f in (("before", adv.before), ("after", adv.after)):
        used = var_read(f) | var_write(f)
        for n in sorted(used - allowed):
            errs.append(f"{label} advice uses '{n}', which is neither a variable of {b.name} nor inter-type")
    for loc, gexpr in adv.resets:
        if loc not in b.locations:
            errs.append(f"reset location '{loc}' is not a location of {b.name}")
        for n in sorted(var_read(gexpr) - allowed):
            errs.append(f"reset guard uses unknown variable '{n}'")
    return errs


def weave_local(
    c: CompositeComponent,
    target: str,
    V: Sequence[Variable],
    lpc: LocalPointcut,
    M: Iterable[Transition],
    adv: LocalAdvice,
    aid: str,
) -> tuple[CompositeComponent, WeaveReport]:
    """Weave a local advice on the transitions ``M`` of instance ``target``."""
    if not c.has_atom(target):
        raise WeaveError(f"unknown instance '{target}'")
    b = c.atom(target)
    ins = Instrument(aid)
    if ins.ip in b.port_names or b.variable(ins.flag) is not None:
        raise WeaveError(f"aspect id '{aid}' collides with existing names in {target}")
    if any(a.name == ins.interaction for a in c.interactions):
        raise WeaveError(f"interaction name '{ins.interaction}' already exists")
    errs = check_pointcut(b, lpc) + check_advice(b, V, adv)
    if errs:
        raise WeaveError("; ".join(errs))
    new_vars = list(b.variables)
    for v in V:
        old = b.variable(v.name)
        if old is None:
            new_vars.append(v)
        elif old != v:
            raise WeaveError(f"inter-type variable '{v.name}' collides with {target}.{v.name}")
    new_vars.append(Variable(ins.flag, "bool", False))

    M = frozenset(M)
    frame = edit_frame(lpc)
    fb, fa = ins.before(adv.before), ins.after(adv.after)
    res = weave_frame(b, M, fb, fa, frame, lpc, ins)
    resets = weave_reset(adv.resets, res.anchors, ins)
    O = origin(M)
    temp_of = res.temp_of
    if frame == PE_CB:
        # entering a matched location through a reset still counts as a predecessor
        resets = [replace(t, func=concat(t.func, fb)) if t.dest in O else t for t in resets]
    elif frame in (RUN_CB, RUN_CE):
        resets = [replace(t, dest=temp_of[t.dest]) if t.dest in O else t for t in resets]
    # resets leaving a temporary location take precedence over its ip bridges
    temps = set(res.temp)
    if resets and temps:
        block = {}
        for t in resets:
            if t.src in temps:
                block.setdefault(t.src, []).append(neg(t.guard))
        patched = []
        for t in res.transitions:
            if t.src in block and t.port == ins.ip:
                t = replace(t, guard=conj(t.guard, *block[t.src]))
            patched.append(t)
        res.transitions = patched
    tnames = {t.name for t in res.transitions}
    renamed = []
    for t in resets:
        renamed.append(replace(t, name=_fresh(t.name, tnames)))
    resets = renamed

    new_b = AtomicComponent(
        b.name,
        b.ports + (Port(ins.ip, ()),),
        tuple(res.locations),
        res.initial,
        tuple(new_vars),
        tuple(res.transitions) + tuple(resets),
    )
    a_ip = Interaction(ins.interaction, ((target, ins.ip),), TRUE, ())
    pri = c.priorities + tuple((a.name, a_ip.name) for a in c.interactions)
    c2 = CompositeComponent(
        c.name,
        tuple(new_b if a.name == target else a for a in c.atoms),
        c.interactions + (a_ip,),
        pri,
    )
    report = WeaveReport(
        aid, target, frame, frozenset(t.name for t in M), tuple(res.transitions),
        tuple(res.locations), tuple(res.temp), res.anchors, res.gmap, tuple(resets),
        ins.ip, ins.flag, ins.interaction,
    )
    return c2, report


def weave_aspect(c: CompositeComponent, asp: LocalAspect) -> tuple[CompositeComponent, WeaveReport]:
    """Select on ``c`` and weave: the single-aspect operator."""
    if not c.has_atom(asp.target):
        raise WeaveError(f"unknown instance '{asp.target}'")
    b = c.atom(asp.target)
    errs = check_pointcut(b, asp.pointcut)
    if errs:
        raise WeaveError("; ".join(errs))
    M = select_local(b, asp.pointcut)
    return weave_local(c, asp.target, asp.intertype, asp.pointcut, M, asp.advice, asp.aid)


# ---------------------------------------------------------------------------
# Advice removal


def strip_flag(guard: Expr, flag: str) -> Expr:
    """Remove conjuncts mentioning the aspect flag from a guard."""
    parts: list[Expr] = []

    def walk(e: Expr) -> None:
        if isinstance(e, Binary) and e.op == "and":
            walk(e.left)
            walk(e.right)
        else:
            parts.append(e)

    walk(guard)
    kept = [p for p in parts if flag not in var_read(p)]
    if len(kept) == len(parts):
        return guard
    return conj(*kept) if kept else TRUE


def rem_local(
    e: LocalEvent, original: AtomicComponent, aid: str, intertype: Iterable[str] = ()
) -> Optional[LocalEvent]:
    """Strip the advice of aspect ``aid`` from ``e``; ``None`` if impossible."""
    if e.l not in original.locations:
        return None
    ins = Instrument(aid)
    drop = set(intertype) | {ins.flag}
    keep = [i for i, n in enumerate(e.names) if n not in drop]
    names = tuple(e.names[i] for i in keep)
    q = LocalState(e.q.location, tuple(e.q.values[i] for i in keep))
    q2 = LocalState(e.q2.location, tuple(e.q2.values[i] for i in keep))
    tau = replace(
        e.tau,
        guard=strip_flag(e.tau.guard, ins.flag),
        func=strip_blocks(e.tau.func, aid),
    )
    return LocalEvent(e.instance, q, tau, q2, names)
