"""Expressions and statement blocks, shared by both languages."""
from __future__ import annotations

from typing import Callable, Optional

from ..lang import (
    INT_MAX,
    INT_MIN,
    Assign,
    Binary,
    Call,
    Const,
    Expr,
    Marker,
    Skip,
    Stmt,
    Unary,
    Var,
)
from .lexer import ParseError, SourceSpan, TokenStream

# resolver(name, span) -> resolved variable name
Resolver = Callable[[str, SourceSpan], str]

EXPR_KEYWORDS = frozenset({"true", "false", "not", "and", "or"})


def _plain(name: str, span: SourceSpan) -> str:
    return name


def parse_expr(ts: TokenStream, resolve: Optional[Resolver] = None) -> Expr:
    return _Expr(ts, resolve or _plain).disj()


class _Expr:
    def __init__(self, ts: TokenStream, resolve: Resolver):
        self.ts = ts
        self.resolve = resolve

    def disj(self) -> Expr:
        e = self.conj()
        while self.ts.accept("or"):
            e = Binary("or", e, self.conj())
        return e

    def conj(self) -> Expr:
        e = self.negation()
        while self.ts.accept("and"):
            e = Binary("and", e, self.negation())
        return e

    def negation(self) -> Expr:
        if self.ts.accept("not") or self.ts.accept("!"):
            return Unary("not", self.negation())
        return self.compare()

    def compare(self) -> Expr:
        e = self.additive()
        t = self.ts.peek()
        if t.kind == "punct" and t.text in ("==", "!=", "<", "<=", ">", ">="):
            self.ts.next()
            r = self.additive()
            if t.text == ">":
                return Binary("<", r, e)
            if t.text == ">=":
                return Binary("<=", r, e)
            return Binary(t.text, e, r)
        return e

    def additive(self) -> Expr:
        e = self.term()
        while self.ts.peek().kind == "punct" and self.ts.peek().text in ("+", "-"):
            op = self.ts.next().text
            e = Binary(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.ts.peek().kind == "punct" and self.ts.peek().text in ("*", "/", "%"):
            op = self.ts.next().text
            e = Binary(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.ts.at("-"):
            minus = self.ts.next()
            t = self.ts.peek()
            if t.kind == "int":
                self.ts.next()
                return Const(_int_literal("-" + t.text, minus.span))
            return Unary("neg", self.unary())
        return self.primary()

    def primary(self) -> Expr:
        ts = self.ts
        t = ts.peek()
        if t.kind == "int":
            ts.next()
            return Const(_int_literal(t.text, t.span))
        if ts.accept("("):
            e = self.disj()
            ts.expect(")")
            return e
        if t.kind == "ident":
            if t.text == "true":
                ts.next()
                return Const(True)
            if t.text == "false":
                ts.next()
                return Const(False)
            if t.text in EXPR_KEYWORDS:
                raise ParseError(f"unexpected keyword '{t.text}'", t.span)
            ts.next()
            if ts.at("("):
                ts.next()
                args = []
                if not ts.at(")"):
                    args.append(self.disj())
                    while ts.accept(","):
                        args.append(self.disj())
                ts.expect(")")
                return Call(t.text, tuple(args))
            name, span = parse_dotted_rest(ts, t.text, t.span)
            return Var(self.resolve(name, span))
        raise ts.error(f"expected an expression, found '{t.text}'" if t.text else "expected an expression")


def parse_dotted_rest(ts: TokenStream, first: str, span: SourceSpan) -> tuple[str, SourceSpan]:
    name = first
    end = span
    while ts.at(".") and ts.peek(1).kind == "ident":
        ts.next()
        tok = ts.next()
        name += "." + tok.text
        end = tok.span
    return name, SourceSpan(span.file, span.line, span.col_start, end.col_end)


def _int_literal(text: str, span: SourceSpan) -> int:
    v = int(text)
    if v < INT_MIN or v > INT_MAX:
        raise ParseError(f"integer literal {text} is out of the 64-bit range", span)
    return v


def parse_block(ts: TokenStream, resolve: Optional[Resolver] = None) -> tuple[Stmt, ...]:
    """``{ stmt* }`` where a statement is an assignment, ``skip`` or a marker."""
    resolve = resolve or _plain
    ts.expect("{")
    out: list[Stmt] = []
    while not ts.accept("}"):
        t = ts.peek()
        if t.kind == "eof":
            raise ParseError("unterminated block", t.span)
        if ts.accept("skip"):
            out.append(Skip())
        elif t.text == "__marker" and ts.at("(", 1):
            ts.next()
            ts.expect("(")
            tag = ts.ident("marker tag")
            if tag.text not in ("begin", "end"):
                raise ParseError(f"bad marker tag '{tag.text}'", tag.span)
            ts.expect(",")
            owner = ts.ident("marker owner").text
            ts.expect(",")
            role = ts.ident("marker role")
            if role.text not in ("before", "after", "set", "clear"):
                raise ParseError(f"bad marker role '{role.text}'", role.span)
            ts.expect(")")
            out.append(Marker(tag.text, owner, role.text))
        else:
            first = ts.ident("assignment target")
            name, span = parse_dotted_rest(ts, first.text, first.span)
            ts.expect(":=")
            out.append(Assign(resolve(name, span), parse_expr(ts, resolve)))
        ts.expect(";")
    return tuple(out)
