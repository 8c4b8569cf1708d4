import random

import pytest
from hypothesis import given, settings, strategies as st

from bipweave import bundled
from bipweave.dynamics import run
from bipweave.generate import random_global_aspect, random_model
from bipweave.global_aop import (
    GlobalAdvice,
    GlobalAspect,
    GlobalPointcut,
    GlobalWeaveError,
    make_intertype,
    match_global,
    rem_global,
    select_global,
    weave_global,
    weave_global_aspect,
    wrapped,
)
from bipweave.lang import Assign, Binary, Const, Var
from bipweave.model import Variable, validate


def counter_aspect(ports, aid="cnt"):
    adv = GlobalAdvice((), (Assign(f"{aid}.n", Binary("+", Var(f"{aid}.n"), Const(1))),))
    return GlobalAspect(aid, GlobalPointcut(frozenset(ports)), (Variable("n", "int", 0),), adv, component=aid)


def test_empty_pointcut_matches_everything():
    c = bundled.model("global_example")
    assert len(select_global(c, GlobalPointcut())) == len(c.interactions)


def test_match_requires_all_ports():
    c = bundled.model("global_example")
    a0 = c.interaction("a0")
    assert match_global(a0, GlobalPointcut(frozenset({("A", "pa1")})))
    assert not match_global(a0, GlobalPointcut(frozenset({("A", "pa1"), ("C", "pc1")})))


def test_writes_filter():
    c = bundled.model("global_example")
    gpc = GlobalPointcut(frozenset({("B", "pb2")}), frozenset(), frozenset({"C.x_c"}))
    assert [a.name for a in select_global(c, gpc)] == ["a3"]


def test_intertype_component_shape():
    it = make_intertype([Variable("n", "int", 0)], "Log")
    assert it.locations == ("l0",) and it.port_names == ("pV",)
    assert it.port("pV").variables == ("n",)


def test_weave_and_remove():
    c = bundled.model("pingpong")
    asp = counter_aspect({("Ping", "send1")})
    c2 = weave_global_aspect(c, asp)
    assert validate(c2) == []
    a0 = c2.interaction("a0")
    assert ("cnt", "pV") in a0.ports
    fb, fa = wrapped(asp)
    assert rem_global(a0, fb, fa, "cnt") == c.interaction("a0")
    rho = run(c2, 1)
    assert rho.events[0].q2[-1].values == (1,)


def test_rem_global_rejects_unshaped():
    c = bundled.model("pingpong")
    fb, fa = wrapped(counter_aspect({("Ping", "send1")}))
    assert rem_global(c.interaction("a0"), fb, fa, "cnt") is None


def test_advice_scope_enforced():
    c = bundled.model("pingpong")
    adv = GlobalAdvice((Assign("Pong.p2", Const(0)),), ())
    gpc = GlobalPointcut(frozenset({("Ping", "send1")}))
    with pytest.raises(GlobalWeaveError):
        weave_global(c, select_global(c, gpc), (), adv, "bad", gpc)


def test_instance_name_clash():
    c = bundled.model("pingpong")
    asp = GlobalAspect("Ping", GlobalPointcut(), (Variable("n", "int", 0),), GlobalAdvice((), ()), component="Ping")
    with pytest.raises(GlobalWeaveError):
        weave_global_aspect(c, asp)


def test_shared_intertype_reused():
    c = bundled.model("network")
    c2 = weave_global_aspect(c, counter_aspect({("Server", "cts")}))
    c3 = weave_global_aspect(c2, counter_aspect({("Server", "send")}))
    assert [a.name for a in c3.atoms].count("cnt") == 1
    assert ("cnt", "pV") in c3.interaction("a1").ports and ("cnt", "pV") in c3.interaction("a2").ports


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=100_000))
def test_random_weaves_are_invertible(seed):
    rng = random.Random(seed)
    c = random_model(rng)
    asp = random_global_aspect(rng, c, "w")
    c2 = weave_global_aspect(c, asp)
    assert validate(c2) == []
    fb, fa = wrapped(asp)
    matched = {a.name for a in select_global(c, asp.pointcut)}
    for a in c.interactions:
        woven = c2.interaction(a.name)
        if a.name in matched:
            assert rem_global(woven, fb, fa, "w") == a
        else:
            assert woven == a
