"""Parsers for ``.bip`` model files and ``.abip`` aspect files."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..composition import GlobalContainer, LocalContainer
from ..global_aop import GlobalAdvice, GlobalAspect, GlobalPointcut
from ..lang import INT_MAX, INT_MIN, TRUE, Expr
from ..local_aop import (
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
    check_advice,
    check_pointcut,
)
from ..model import (
    AtomicComponent,
    BIPSystem,
    CompositeComponent,
    Interaction,
    Port,
    Transition,
    Variable,
    validate,
)
from .exprs import parse_block, parse_dotted_rest, parse_expr
from .lexer import ParseError, SourceSpan, Token, TokenStream, tokenize


@dataclass(frozen=True)
class Diagnostic:
    message: str
    span: Optional[SourceSpan] = None

    def __str__(self) -> str:
        return f"{self.span}: {self.message}" if self.span else self.message


class ValidationError(Exception):
    """The text parsed but the model it describes is not well formed."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("\n".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass
class ParsedModel:
    composite: CompositeComponent
    system: BIPSystem
    spans: dict[str, SourceSpan] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Model files


def _literal(ts: TokenStream, kind: str) -> Union[int, bool]:
    t = ts.peek()
    if kind == "bool":
        if ts.accept("true"):
            return True
        if ts.accept("false"):
            return False
        raise ParseError(f"expected a boolean literal, found '{t.text}'", t.span)
    neg = ts.accept("-")
    t = ts.peek()
    if t.kind != "int":
        raise ParseError(f"expected an integer literal, found '{t.text}'", t.span)
    ts.next()
    v = -int(t.text) if neg else int(t.text)
    if v < INT_MIN or v > INT_MAX:
        raise ParseError(f"integer literal {v} is out of the 64-bit range", t.span)
    return v


def parse_var_decl(ts: TokenStream) -> Variable:
    """``var int x = 0;`` (the ``var`` keyword is already consumed)."""
    kt = ts.ident("variable kind")
    if kt.text not in ("int", "bool"):
        raise ParseError(f"unknown variable kind '{kt.text}'", kt.span)
    name = ts.ident("variable name").text
    ts.expect("=")
    init = _literal(ts, kt.text)
    ts.expect(";")
    return Variable(name, kt.text, init)


def _ident_list(ts: TokenStream, what: str) -> list[str]:
    out = [ts.ident(what).text]
    while ts.accept(","):
        out.append(ts.ident(what).text)
    return out


def _parse_atom(ts: TokenStream, spans: dict[str, SourceSpan]) -> AtomicComponent:
    name_tok = ts.ident("atom name")
    spans[f"atom {name_tok.text}"] = name_tok.span
    ts.expect("{")
    variables: list[Variable] = []
    ports: list[Port] = []
    locations: list[str] = []
    initial: Optional[str] = None
    transitions: list[Transition] = []
    while not ts.accept("}"):
        t = ts.peek()
        if ts.accept("var"):
            variables.append(parse_var_decl(ts))
        elif ts.accept("port"):
            pname = ts.ident("port name").text
            attached: list[str] = []
            if ts.accept("("):
                if not ts.at(")"):
                    attached = _ident_list(ts, "variable name")
                ts.expect(")")
            ts.expect(";")
            ports.append(Port(pname, tuple(attached)))
        elif ts.accept("location") or ts.accept("place"):
            locations.extend(_ident_list(ts, "location name"))
            ts.expect(";")
        elif ts.accept("initial"):
            if initial is not None:
                raise ParseError("initial location declared twice", t.span)
            initial = ts.ident("location name").text
            ts.expect(";")
        elif ts.accept("transition"):
            tname = ts.ident("transition name")
            spans[f"atom {name_tok.text}: transition {tname.text}"] = tname.span
            ts.expect(":")
            src = ts.ident("source location").text
            ts.expect("->")
            dst = ts.ident("destination location").text
            ts.expect("on")
            port = ts.ident("port name").text
            guard: Expr = TRUE
            func: tuple = ()
            if ts.accept("when"):
                guard = parse_expr(ts)
            if ts.accept("do"):
                func = parse_block(ts)
            ts.expect(";")
            transitions.append(Transition(tname.text, src, port, guard, func, dst))
        elif t.kind == "eof":
            raise ParseError(f"unterminated atom '{name_tok.text}'", t.span)
        else:
            raise ParseError(f"unexpected '{t.text}' in atom body", t.span)
    if initial is None:
        if not locations:
            raise ParseError(f"atom '{name_tok.text}' declares no location", name_tok.span)
        initial = locations[0]
    return AtomicComponent(
        name_tok.text, tuple(ports), tuple(locations), initial, tuple(variables), tuple(transitions)
    )


def _qualified_port(ts: TokenStream) -> tuple[str, str]:
    inst = ts.ident("instance name").text
    ts.expect(".")
    return inst, ts.ident("port name").text


def _parse_connector(ts: TokenStream, spans: dict[str, SourceSpan]) -> Interaction:
    name = ts.ident("connector name")
    spans[f"interaction {name.text}"] = name.span
    ts.expect("(")
    ports = [_qualified_port(ts)]
    while ts.accept(","):
        ports.append(_qualified_port(ts))
    ts.expect(")")
    guard: Expr = TRUE
    func: tuple = ()
    if ts.accept("when"):
        guard = parse_expr(ts)
    if ts.accept("do"):
        func = parse_block(ts)
    ts.expect(";")
    return Interaction(name.text, tuple(ports), guard, func)


def _span_for(diag: str, spans: dict[str, SourceSpan]) -> Optional[SourceSpan]:
    best = None
    for key, span in spans.items():
        if diag.startswith(key) and (best is None or len(key) > len(best[0])):
            best = (key, span)
    return best[1] if best else None


def parse_model_ex(text: str, file: str = "<string>", strict: bool = True) -> ParsedModel:
    """Parse and validate a model, keeping source spans of declarations."""
    ts = TokenStream(tokenize(text, file))
    spans: dict[str, SourceSpan] = {}
    if ts.peek().kind == "eof":
        raise ParseError("empty model file", ts.peek().span)
    ts.expect("module")
    name = ts.ident("module name").text
    atoms: list[AtomicComponent] = []
    inters: list[Interaction] = []
    pri: list[tuple[str, str]] = []
    while ts.peek().kind != "eof":
        t = ts.peek()
        if ts.accept("atom"):
            atoms.append(_parse_atom(ts, spans))
        elif ts.accept("connector"):
            inters.append(_parse_connector(ts, spans))
        elif ts.accept("priority"):
            lo = ts.ident("interaction name")
            ts.expect("<")
            hi = ts.ident("interaction name")
            ts.expect(";")
            spans[f"priority {lo.text} < {hi.text}"] = lo.span
            pri.append((lo.text, hi.text))
        else:
            raise ParseError(f"unexpected '{t.text}' at top level", t.span)
    c = CompositeComponent(name, tuple(atoms), tuple(inters), tuple(pri))
    diags = validate(c, strict=strict)
    if diags:
        raise ValidationError([Diagnostic(d, _span_for(d, spans)) for d in diags])
    return ParsedModel(c, BIPSystem.of(c), spans)


def parse_model(text: str, file: str = "<string>", strict: bool = True) -> CompositeComponent:
    """Parse a ``.bip`` model.

    ``strict`` rejects reserved identifiers and marker statements, which only
    woven models may contain; reparsing rendered woven models needs
    ``strict=False``.
    """
    return parse_model_ex(text, file, strict).composite


# ---------------------------------------------------------------------------
# Aspect files


@dataclass
class AspectFile:
    header: str
    containers: list[Union[LocalContainer, GlobalContainer]]
    spans: dict[str, SourceSpan] = field(default_factory=dict)


_LPC_ATOMS = {
    "atLocation": AtLocation,
    "readVarGuard": ReadVarGuard,
    "readVarFunc": ReadVarFunc,
    "write": Write,
    "portEnabled": PortEnabled,
    "portExecute": PortExecute,
}


def parse_local_pointcut(ts: TokenStream) -> LocalPointcut:
    parts = [_lpc_atom(ts)]
    while ts.accept("and"):
        parts.append(_lpc_atom(ts))
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def _lpc_atom(ts: TokenStream) -> LocalPointcut:
    if ts.accept("("):
        inner = parse_local_pointcut(ts)
        ts.expect(")")
        return inner
    t = ts.ident("pointcut primitive")
    ctor = _LPC_ATOMS.get(t.text)
    if ctor is None:
        raise ParseError(f"unknown pointcut primitive '{t.text}'", t.span)
    ts.expect("(")
    arg = ts.ident("pointcut argument").text
    ts.expect(")")
    return ctor(arg)


class _AspectParser:
    def __init__(self, ts: TokenStream, model: Optional[CompositeComponent]):
        self.ts = ts
        self.model = model
        self.spans: dict[str, SourceSpan] = {}
        self.aids: set[str] = set()

    def file(self) -> AspectFile:
        ts = self.ts
        header = ""
        if ts.accept("header"):
            t = ts.peek()
            if t.kind != "header":
                raise ParseError("expected a '{{ ... }}' header block", t.span)
            header = ts.next().text
        containers = []
        names: set[str] = set()
        while ts.peek().kind != "eof":
            ts.expect("Aspect")
            name = ts.ident("container name")
            if name.text in names:
                raise ParseError(f"duplicate container name '{name.text}'", name.span)
            names.add(name.text)
            self.spans[f"container {name.text}"] = name.span
            kind = ts.ident("'global' or 'local'")
            if kind.text == "global":
                containers.append(self.global_container(name))
            elif kind.text == "local":
                containers.append(self.local_container(name))
            else:
                raise ParseError(f"expected 'global' or 'local', found '{kind.text}'", kind.span)
        return AspectFile(header, containers, self.spans)

    def intertype(self) -> tuple[Variable, ...]:
        ts = self.ts
        out: list[Variable] = []
        if ts.accept("intertype"):
            ts.expect("{")
            while not ts.accept("}"):
                ts.expect("var")
                v = parse_var_decl(ts)
                if any(o.name == v.name for o in out):
                    raise ts.error(f"duplicate inter-type variable '{v.name}'")
                out.append(v)
        return tuple(out)

    def aspect_id(self) -> Token:
        self.ts.expect("aspect")
        aid = self.ts.ident("aspect id")
        if aid.text in self.aids:
            raise ParseError(f"duplicate aspect id '{aid.text}'", aid.span)
        self.aids.add(aid.text)
        self.spans[f"aspect {aid.text}"] = aid.span
        return aid

    # -- local containers

    def local_container(self, name: Token) -> LocalContainer:
        ts = self.ts
        target = ts.ident("target instance")
        b: Optional[AtomicComponent] = None
        if self.model is not None:
            if not self.model.has_atom(target.text):
                raise ParseError(f"unknown component instance '{target.text}'", target.span)
            b = self.model.atom(target.text)
        ts.expect("{")
        V = self.intertype()
        vnames = {v.name for v in V}
        aspects = []
        while not ts.accept("}"):
            aid = self.aspect_id()
            ts.expect("{")
            ts.expect("pointcut")
            lpc_tok = ts.peek()
            lpc = parse_local_pointcut(ts)
            ts.expect(";")
            before: tuple = ()
            after: tuple = ()
            resets: list[tuple[str, Expr]] = []
            while not ts.accept("}"):
                if ts.accept("before"):
                    before = parse_block(ts)
                elif ts.accept("after"):
                    after = parse_block(ts)
                elif ts.accept("resetTo"):
                    loc = ts.ident("reset location").text
                    g: Expr = TRUE
                    if ts.accept("when"):
                        g = parse_expr(ts)
                    ts.expect(";")
                    resets.append((loc, g))
                else:
                    raise ts.error(f"unexpected '{ts.peek().text}' in aspect body")
            adv = LocalAdvice(before, after, tuple(resets))
            if b is not None:
                clash = sorted(vnames & set(b.var_names))
                if clash:
                    raise ParseError(
                        f"inter-type variable '{clash[0]}' shadows a variable of {b.name}", name.span
                    )
                errs = check_pointcut(b, lpc)
                if errs:
                    raise ParseError(errs[0], lpc_tok.span)
                errs = check_advice(b, V, adv)
                if errs:
                    raise ParseError(errs[0], aid.span)
            aspects.append(LocalAspect(aid.text, target.text, lpc, V, adv))
        return LocalContainer(name.text, target.text, V, tuple(aspects))

    # -- global containers

    def global_container(self, name: Token) -> GlobalContainer:
        ts = self.ts
        if self.model is not None and self.model.has_atom(name.text):
            raise ParseError(f"container name '{name.text}' clashes with an instance", name.span)
        ts.expect("{")
        V = self.intertype()
        aspects = []
        while not ts.accept("}"):
            aid = self.aspect_id()
            ts.expect("{")
            ts.expect("pointcut")
            aliases: dict[str, tuple[str, str]] = {}
            ports: list[tuple[str, str]] = []
            reads: list[str] = []
            writes: list[str] = []
            resolve = self._resolver(name.text, V, aliases)
            ts.expect("ports")
            ts.expect("(")
            if not ts.at(")"):
                ports.append(self.portspec(aliases))
                while ts.accept(","):
                    ports.append(self.portspec(aliases))
            ts.expect(")")
            for kw, acc in (("reads", reads), ("writes", writes)):
                if ts.accept(kw):
                    ts.expect("(")
                    if not ts.at(")"):
                        acc.append(self.port_var(aliases, ports))
                        while ts.accept(","):
                            acc.append(self.port_var(aliases, ports))
                    ts.expect(")")
            ts.expect(";")
            before: tuple = ()
            after: tuple = ()
            while not ts.accept("}"):
                if ts.accept("before"):
                    before = parse_block(ts, resolve)
                elif ts.accept("after"):
                    after = parse_block(ts, resolve)
                else:
                    raise ts.error(f"unexpected '{ts.peek().text}' in aspect body")
            gpc = GlobalPointcut(frozenset(ports), frozenset(reads), frozenset(writes))
            aspects.append(
                GlobalAspect(aid.text, gpc, V, GlobalAdvice(before, after), component=name.text)
            )
        return GlobalContainer(name.text, V, tuple(aspects))

    def portspec(self, aliases: dict[str, tuple[str, str]]) -> tuple[str, str]:
        ts = self.ts
        alias: Optional[Token] = None
        if ts.peek().kind == "ident" and ts.at(":", 1):
            alias = ts.next()
            ts.next()
        inst = ts.ident("instance name")
        ts.expect(".")
        port = ts.ident("port name")
        if self.model is not None:
            if not self.model.has_atom(inst.text):
                raise ParseError(f"unknown component instance '{inst.text}'", inst.span)
            if self.model.atom(inst.text).port(port.text) is None:
                raise ParseError(f"unknown port '{inst.text}.{port.text}'", port.span)
        if alias is not None:
            if alias.text in aliases or (self.model is not None and self.model.has_atom(alias.text)):
                raise ParseError(f"alias '{alias.text}' collides with another name", alias.span)
            aliases[alias.text] = (inst.text, port.text)
        return inst.text, port.text

    def port_var(self, aliases, ports) -> str:
        t = self.ts.ident("variable")
        name, span = parse_dotted_rest(self.ts, t.text, t.span)
        q = self._qualify(name, span, aliases)
        inst, var = q.split(".", 1)
        if not any(i == inst and self._attached(i, p, var) for i, p in ports):
            raise ParseError(f"variable '{name}' is not attached to a pointcut port", span)
        return q

    def _attached(self, inst: str, port: str, var: str) -> bool:
        if self.model is None:
            return True
        p = self.model.atom(inst).port(port)
        return p is not None and var in p.variables

    def _qualify(self, name: str, span: SourceSpan, aliases) -> str:
        if "." not in name:
            raise ParseError(f"variable '{name}' must be qualified", span)
        head, var = name.split(".", 1)
        if "." in var:
            raise ParseError(f"malformed variable reference '{name}'", span)
        if head in aliases:
            head = aliases[head][0]
        if self.model is not None:
            if not self.model.has_atom(head):
                raise ParseError(f"unknown component instance '{head}'", span)
            if self.model.atom(head).variable(var) is None:
                raise ParseError(f"unknown variable '{head}.{var}'", span)
        return f"{head}.{var}"

    def _resolver(self, container: str, V, aliases):
        vnames = {v.name for v in V}

        def resolve(name: str, span: SourceSpan) -> str:
            if "." not in name:
                if name in vnames:
                    return f"{container}.{name}"
                raise ParseError(f"unknown variable '{name}'", span)
            head = name.split(".", 1)[0]
            if head == container:
                if name.split(".", 1)[1] not in vnames:
                    raise ParseError(f"unknown inter-type variable '{name}'", span)
                return name
            return self._qualify(name, span, aliases)

        return resolve


def parse_aspects(
    text: str, model: Optional[CompositeComponent] = None, file: str = "<string>"
) -> AspectFile:
    """Parse an ``.abip`` file; names are checked against ``model`` if given."""
    ts = TokenStream(tokenize(text, file))
    return _AspectParser(ts, model).file()
