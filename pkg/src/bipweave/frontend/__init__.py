"""Concrete syntax for models (``.bip``) and aspects (``.abip``)."""
from .dot import render_dot
from .lexer import ParseError, SourceSpan, tokenize
from .parser import (
    AspectFile,
    Diagnostic,
    ParsedModel,
    ValidationError,
    parse_aspects,
    parse_model,
    parse_model_ex,
)
from .render import render_expr, render_model

__all__ = [
    "AspectFile",
    "Diagnostic",
    "ParseError",
    "ParsedModel",
    "SourceSpan",
    "ValidationError",
    "parse_aspects",
    "parse_model",
    "parse_model_ex",
    "render_dot",
    "render_expr",
    "render_model",
    "tokenize",
]
