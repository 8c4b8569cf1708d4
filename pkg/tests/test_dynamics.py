import random

import pytest
from hypothesis import given, settings, strategies as st

from bipweave import bundled
from bipweave.dynamics import (
    DynamicsError,
    dump_trace,
    enabled_interactions,
    explore,
    global_trace,
    map_event,
    run,
    step,
    step_event,
)
from bipweave.frontend import parse_model
from bipweave.generate import random_model
from bipweave.model import BIPSystem, LocalState

PRIORITY = """
module P
atom A {
  var int x = 0;
  port p; port q;
  location L;
  transition t1: L -> L on p do { x := 1; };
  transition t2: L -> L on q do { x := 2; };
}
connector lo(A.p);
connector hi(A.q);
priority lo < hi;
"""


def test_pingpong_single_step():
    s = BIPSystem.of(bundled.model("pingpong"))
    assert [a.name for a in enabled_interactions(s, s.q0)] == ["a0"]
    q1 = step(s, s.q0, "a0")
    assert q1 == (LocalState("SND", (1,)), LocalState("REP", (2,)))
    # Pong reaches a terminal location: deadlock afterwards
    assert enabled_interactions(s, q1) == []


def test_transfer_runs_before_component_updates():
    E = step_event(bundled.model("pingpong"), BIPSystem.of(bundled.model("pingpong")).q0, "a0")
    # Pong.p2 := Ping.p1 (=1) then Pong increments it
    assert E.q2[1].values == (2,)


def test_priority_filters_dominated():
    c = parse_model(PRIORITY)
    s = BIPSystem.of(c)
    assert [a.name for a in enabled_interactions(s, s.q0)] == ["hi"]
    rho = run(c, 3, seed=1)
    assert [a.name for a in global_trace(rho)] == ["hi"] * 3


def test_step_rejects_disabled_interaction():
    s = BIPSystem.of(parse_model(PRIORITY))
    with pytest.raises(DynamicsError):
        step(s, s.q0, "lo")


def test_map_event_for_absent_instance():
    c = bundled.model("network")
    E = run(c, 1).events[0]
    assert map_event(c, E, "Client") is None
    e = map_event(c, E, "Server")
    assert e.tau.name == "S0" and e.l == "IDL" and e.l2 == "RDY"


def test_explore_depth_and_deadlock():
    ex = explore(bundled.model("pingpong"), 5)
    assert len(ex.states) == 2 and len(ex.events) == 1
    assert len(ex.deadlocks) == 1 and not ex.truncated
    (q,) = ex.deadlocks
    assert [E.interaction.name for E in ex.path_to(q)] == ["a0"]


def test_explore_truncation():
    ex = explore(bundled.model("dala"), 12, max_states=5)
    assert ex.truncated


def test_run_is_reproducible():
    c = bundled.model("dala")
    assert dump_trace(c, run(c, 15, seed=3)) == dump_trace(c, run(c, 15, seed=3))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_random_runs_are_explored_paths(seed):
    c = random_model(random.Random(seed), max_atoms=3, max_locations=3)
    rho = run(c, 4, seed=seed)
    ex = explore(c, 4)
    for E in rho.events:
        assert E in ex.events or E.q not in ex.depth_of or ex.depth_of[E.q] >= 4
