import random

import pytest
from hypothesis import given, settings, strategies as st

from bipweave import bundled
from bipweave.frontend import (
    ParseError,
    ValidationError,
    parse_aspects,
    parse_model,
    parse_model_ex,
    render_dot,
    render_expr,
    render_model,
    tokenize,
)
from bipweave.frontend.exprs import parse_expr
from bipweave.frontend.lexer import TokenStream
from bipweave.generate import random_model
from bipweave.global_aop import GlobalAspect
from bipweave.lang import Binary, Const, Unary, Var, evaluate
from bipweave.local_aop import And, AtLocation, LocalAspect, PortExecute


def expr(text):
    ts = TokenStream(tokenize(text))
    e = parse_expr(ts)
    assert ts.peek().kind == "eof"
    return e


def test_precedence():
    assert expr("1 + 2 * 3") == Binary("+", Const(1), Binary("*", Const(2), Const(3)))
    assert expr("a or b and c") == Binary("or", Var("a"), Binary("and", Var("b"), Var("c")))
    assert expr("not x < 1") == Unary("not", Binary("<", Var("x"), Const(1)))
    assert expr("-5") == Const(-5)
    assert expr("x > 2") == Binary("<", Const(2), Var("x"))
    assert expr("Server.p") == Var("Server.p")


values = st.integers(min_value=-20, max_value=20)


@st.composite
def int_exprs(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(st.one_of(values.map(Const), st.sampled_from([Var("x"), Var("y")])))
    op = draw(st.sampled_from(["+", "-", "*"]))
    if draw(st.integers(0, 5)) == 0:
        return Unary("-", draw(int_exprs(depth=depth - 1)))
    return Binary(op, draw(int_exprs(depth=depth - 1)), draw(int_exprs(depth=depth - 1)))


@given(int_exprs(), values, values)
def test_render_expr_round_trip(e, x, y):
    back = expr(render_expr(e))
    env = {"x": x, "y": y}
    assert evaluate(back, env) == evaluate(e, env)
    assert render_expr(back) == render_expr(e)


def test_bundled_models_round_trip():
    for name in bundled.names(".bip"):
        c = bundled.model(name[:-4])
        text = render_model(c)
        assert parse_model(text) == c
        assert render_model(parse_model(text)) == text


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=100_000))
def test_generated_models_round_trip(seed):
    c = random_model(random.Random(seed))
    assert parse_model(render_model(c)) == c


def test_counts():
    c = bundled.model("pingpong")
    assert (len(c.atoms), len(c.interactions)) == (2, 1)
    c = bundled.model("network")
    assert (len(c.atoms), len(c.interactions)) == (3, 5)


def test_spans_point_at_declarations():
    text = "module M\natom A {\n  location L;\n  transition t: L -> Q on p;\n}\n"
    with pytest.raises(ValidationError) as info:
        parse_model(text, file="m.bip")
    spans = {d.span.line for d in info.value.diagnostics}
    assert spans == {4}
    pm = parse_model_ex("module M\natom A { location L; }\n", file="m.bip")
    assert pm.spans["atom A"].line == 2


@pytest.mark.parametrize(
    "text, message",
    [
        ("", "empty model file"),
        ("module M atom", "expected"),
        ("module M /* open", "unterminated"),
        ("module M\natom A { location L; } $", "unexpected character"),
        ("module M\natom A { var int x = 99999999999999999999; location L; }", "range"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(ParseError) as info:
        parse_model(text, file="bad.bip")
    assert message in str(info.value)
    assert str(info.value).startswith("bad.bip:")


def test_reserved_identifiers_rejected_in_strict_mode():
    text = "module M\natom A { var bool b_aop_x = false; location L; }\n"
    with pytest.raises(ValidationError):
        parse_model(text)
    assert parse_model(text, strict=False).atoms[0].var_names == ("b_aop_x",)


def test_parse_aspect_file():
    base = bundled.model("procedures")
    af = parse_aspects(bundled.read_text("procedures.abip"), base)
    (container,) = af.containers
    a, ap = container.aspects
    assert isinstance(a, LocalAspect) and a.target == "B"
    assert a.pointcut == And(AtLocation("L0"), PortExecute("p2"))
    assert a.advice.resets == (("L0", Const(True)),)
    assert ap.aid == "ap" and ap.pointcut == AtLocation("L1")


def test_global_aspect_aliases_resolve():
    base = bundled.model("network")
    af = parse_aspects(bundled.read_text("authentication.abip"), base)
    carol = [a for k in af.containers for a in k.aspects if isinstance(a, GlobalAspect)][0]
    assert carol.pointcut.ports == {("Server", "send"), ("Channel", "add1")}
    assert carol.pointcut.reads == {"Server.p"}
    assert "Channel.r" in render_expr(Var(carol.advice.after[0].target))


@pytest.mark.parametrize(
    "text, message",
    [
        ("Aspect X local Nope { aspect q { pointcut atLocation(IDL1); } }", "unknown component instance"),
        ("Aspect X local Ping { aspect q { pointcut atLocation(ZZ); } }", "unknown location"),
        ("Aspect X local Ping { aspect q { pointcut atLocation(IDL1); } aspect q { pointcut atLocation(IDL1); } }",
         "duplicate aspect id"),
        ("Aspect G global { aspect g { pointcut ports(Ping.zz); } }", "unknown port"),
        ("Aspect G global { aspect g { pointcut ports(Ping.send1) reads(Pong.p2); } }", "not attached"),
    ],
)
def test_aspect_errors(text, message):
    with pytest.raises(ParseError) as info:
        parse_aspects(text, bundled.model("pingpong"))
    assert message in str(info.value)


def test_dot_output():
    dot = render_dot(bundled.model("pingpong"))
    assert dot.startswith('digraph "PingPong" {')
    assert dot.count("subgraph") == 2
    assert dot.count('[label="IDL1"') + dot.count('[label="SND"') + dot.count('[label="IDL2"') + dot.count(
        '[label="REP"'
    ) == 4
    assert dot.count("shape=box") == 1
    assert dot.rstrip().endswith("}")
