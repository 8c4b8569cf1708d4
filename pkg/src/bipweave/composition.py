"""Containers and strategies for weaving sequences of aspects."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .global_aop import GlobalAspect, select_global, weave_global
from .lang import Marker
from .local_aop import LocalAspect, WeaveError, WeaveReport, select_local, weave_local
from .model import CompositeComponent, Variable


@dataclass(frozen=True)
class LocalContainer:
    name: str
    target: str
    intertype: tuple[Variable, ...]
    aspects: tuple[LocalAspect, ...]


@dataclass(frozen=True)
class GlobalContainer:
    name: str
    intertype: tuple[Variable, ...]
    aspects: tuple[GlobalAspect, ...]


Container = Union[LocalContainer, GlobalContainer]


class CompositionError(Exception):
    def __init__(self, index: int, aid: str, cause: Exception):
        super().__init__(f"aspect #{index} ({aid}): {cause}")
        self.index = index
        self.aid = aid
        self.cause = cause


@dataclass
class WeaveLog:
    """Everything produced while weaving a sequence of containers."""

    reports: list[WeaveReport] = field(default_factory=list)
    global_matches: dict[str, list[str]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _weave_one_local(c, asp: LocalAspect, M, index: int):
    try:
        return weave_local(c, asp.target, asp.intertype, asp.pointcut, M, asp.advice, asp.aid)
    except WeaveError as exc:
        raise CompositionError(index, asp.aid, exc) from exc


def weave_serial_local(
    c: CompositeComponent, aspects: Sequence[LocalAspect], log: Optional[WeaveLog] = None
) -> CompositeComponent:
    """Fold the local weave, matching each pointcut on the intermediate model."""
    log = log if log is not None else WeaveLog()
    base_names = {a.name: {t.name for t in a.transitions} for a in c.atoms}
    for i, asp in enumerate(aspects):
        if not c.has_atom(asp.target):
            raise CompositionError(i, asp.aid, WeaveError(f"unknown instance '{asp.target}'"))
        M = select_local(c.atom(asp.target), asp.pointcut)
        fresh = sorted(t.name for t in M if t.name not in base_names.get(asp.target, set()))
        if fresh:
            log.warnings.append(
                f"aspect {asp.aid} matches transitions introduced by earlier weaves: {', '.join(fresh)}"
            )
        c, rep = _weave_one_local(c, asp, M, i)
        log.reports.append(rep)
    return c


def weave_serial_global(
    c: CompositeComponent, aspects: Sequence[GlobalAspect], log: Optional[WeaveLog] = None
) -> CompositeComponent:
    log = log if log is not None else WeaveLog()
    for i, asp in enumerate(aspects):
        I = select_global(c, asp.pointcut)
        try:
            c, _ = weave_global(
                c, I, asp.intertype, asp.advice, asp.aid, asp.pointcut, asp.intertype_name
            )
        except Exception as exc:
            raise CompositionError(i, asp.aid, exc) from exc
        log.global_matches[asp.aid] = [a.name for a in I]
    return c


def project_match(M: Iterable[str], maps: Sequence[Union[WeaveReport, dict]]) -> frozenset[str]:
    """Transport transition names through successive weave maps."""
    cur = frozenset(M)
    for g in maps:
        if isinstance(g, WeaveReport):
            cur = g.image(cur)
        else:
            out: set[str] = set()
            for n in cur:
                if n not in g:
                    raise WeaveError(f"transition {n} is outside the weave map domain")
                out.update(t if isinstance(t, str) else t.name for t in g[n])
            cur = frozenset(out)
    return cur


def weave_all(
    c: CompositeComponent, aspects: Sequence[LocalAspect], log: Optional[WeaveLog] = None
) -> tuple[CompositeComponent, list[WeaveReport]]:
    """Match every pointcut on the original model, then weave in order."""
    log = log if log is not None else WeaveLog()
    c0 = c
    matches = []
    for i, asp in enumerate(aspects):
        if not c0.has_atom(asp.target):
            raise CompositionError(i, asp.aid, WeaveError(f"unknown instance '{asp.target}'"))
        matches.append(frozenset(t.name for t in select_local(c0.atom(asp.target), asp.pointcut)))
    reports: list[WeaveReport] = []
    for i, asp in enumerate(aspects):
        prior = [r for r in reports if r.target == asp.target]
        names = project_match(matches[i], prior)
        b = c.atom(asp.target)
        M = frozenset(t for t in b.transitions if t.name in names)
        c, rep = _weave_one_local(c, asp, M, i)
        reports.append(rep)
        log.reports.append(rep)
    return c, reports


def weave_containers(
    c: CompositeComponent,
    containers: Sequence[Container],
    strategy: str = "serial",
    log: Optional[WeaveLog] = None,
) -> CompositeComponent:
    """Weave containers in order, local containers before global ones."""
    if strategy not in ("serial", "all"):
        raise ValueError(f"unknown strategy '{strategy}'")
    log = log if log is not None else WeaveLog()
    ordered = [k for k in containers if isinstance(k, LocalContainer)] + [
        k for k in containers if isinstance(k, GlobalContainer)
    ]
    for k in ordered:
        if isinstance(k, LocalContainer):
            if strategy == "serial":
                c = weave_serial_local(c, k.aspects, log)
            else:
                c, _ = weave_all(c, k.aspects, log)
        else:
            c = weave_serial_global(c, k.aspects, log)
    return c


# ---------------------------------------------------------------------------
# Coverage of a group of containers over the base model


@dataclass
class Coverage:
    concern: str
    transitions: int
    interactions: int
    added_resets: int
    overlap_transitions: int = 0
    overlap_interactions: int = 0
    touched_transitions: frozenset = frozenset()
    touched_interactions: frozenset = frozenset()


def _owners(func) -> set[str]:
    return {s.owner for s in func if isinstance(s, Marker) and s.role in ("before", "after")}


def coverage(
    base: CompositeComponent,
    woven: CompositeComponent,
    log: WeaveLog,
    concerns: dict[str, Sequence[Container]],
) -> list[Coverage]:
    """Count base transitions and interactions carrying each concern's advice."""
    images: dict[tuple[str, str], set[str]] = {
        (a.name, t.name): {t.name} for a in base.atoms for t in a.transitions
    }
    for rep in log.reports:
        for key, names in images.items():
            if key[0] == rep.target:
                images[key] = set(rep.image(names))
    woven_t = {(a.name, t.name): t for a in woven.atoms for t in a.transitions}
    out: list[Coverage] = []
    for concern, conts in concerns.items():
        aids = {asp.aid for k in conts for asp in k.aspects}
        touched_t = frozenset(
            key
            for key, names in images.items()
            if any(_owners(woven_t[(key[0], n)].func) & aids for n in names)
        )
        base_i = {a.name for a in base.interactions}
        touched_i = frozenset(
            a.name for a in woven.interactions if a.name in base_i and _owners(a.func) & aids
        )
        resets = sum(len(r.resets) for r in log.reports if r.aid in aids)
        out.append(Coverage(concern, len(touched_t), len(touched_i), resets,
                            touched_transitions=touched_t, touched_interactions=touched_i))
    for cov in out:
        others_t = set().union(*(o.touched_transitions for o in out if o is not cov))
        others_i = set().union(*(o.touched_interactions for o in out if o is not cov))
        cov.overlap_transitions = len(cov.touched_transitions & others_t)
        cov.overlap_interactions = len(cov.touched_interactions & others_i)
    return out


def format_coverage(rows: Sequence[Coverage]) -> str:
    lines = [f"{'concern':<20} {'transitions':>11} {'interactions':>12} {'resets':>6} {'OT':>4} {'OI':>4}"]
    for r in rows:
        lines.append(
            f"{r.concern:<20} {r.transitions:>11} {r.interactions:>12} {r.added_resets:>6} "
            f"{r.overlap_transitions:>4} {r.overlap_interactions:>4}"
        )
    return "\n".join(lines) + "\n"
