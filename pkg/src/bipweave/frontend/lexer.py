"""Tokenizer shared by the model and aspect languages."""
from __future__ import annotations

import re
from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    col_start: int
    col_end: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col_start}-{self.col_end}"


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


@dataclass(frozen=True)
class Token:
    kind: str  # ident, int, header, punct, eof
    text: str
    span: SourceSpan


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<header>\{\{.*?\}\})
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>:=|->|==|!=|<=|>=|[{}()\[\];,:.<>+\-*/%!=])
    """,
    re.VERBOSE | re.DOTALL,
)


def tokenize(text: str, file: str = "<string>") -> list[Token]:
    toks: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        for opener in ("/*", "{{"):
            if text.startswith(opener, pos) and (m is None or m.lastgroup not in ("comment", "header")):
                raise ParseError(f"unterminated '{opener}'", SourceSpan(file, line, col, col + 2))
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", SourceSpan(file, line, col, col + 1))
        kind = m.lastgroup
        s = m.group()
        if kind not in ("ws", "comment"):
            if kind == "header":
                s = s[2:-2]
            toks.append(Token(kind, s, SourceSpan(file, line, col, col + len(m.group()))))
        nl = m.group().count("\n")
        if nl:
            line += nl
            line_start = pos + m.group().rfind("\n") + 1
        pos = m.end()
    col = pos - line_start + 1
    toks.append(Token("eof", "", SourceSpan(file, line, col, col)))
    return toks


class TokenStream:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.i += 1
        return t

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("ident", "punct") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if not self.at(text):
            raise ParseError(f"expected '{text}', found {describe(t)}", t.span)
        self.i += 1
        return t

    def ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(f"expected {what}, found {describe(t)}", t.span)
        self.i += 1
        return t

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.peek().span)


def describe(t: Token) -> str:
    if t.kind == "eof":
        return "end of input"
    return f"'{t.text}'"
