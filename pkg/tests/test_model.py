from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from arrival.corpus import random_instance, rng_for
from arrival.errors import ContractError, ModelError
from arrival.model import (
    GameState, InstanceBuilder, NodeKind, Outcome, Rng, run_play, splitmix64, step_probability,
    switch_step, valid_successors,
)
from arrival.expand import build_game_graph
from arrival.gadgets import gen_double_exp


def tiny_switch():
    b = InstanceBuilder()
    s = b.add_node("s", NodeKind.SWITCH)
    a = b.add_node("a", NodeKind.SWITCH)
    t = b.add_node("t", NodeKind.TARGET)
    b.set_order(s, [a, t])
    b.set_order(a, [s])
    b.start = s
    return b.build()


def test_switch_cycles_through_order():
    inst = tiny_switch()
    s0 = inst.initial_state
    s1 = switch_step(inst, s0)
    assert inst.names[s1.vertex] == "a"
    s2 = switch_step(inst, s1)
    s3 = switch_step(inst, s2)
    assert inst.names[s3.vertex] == "t"
    # the order wrapped back to its first entry
    assert s3.switches[inst.switch_slot[inst.vertex("s")]] == 0


def test_play_reaches_target_in_three_steps():
    tr = run_play(tiny_switch())
    assert tr.outcome is Outcome.REACHED_TARGET
    assert tr.steps == 3


def test_step_limit_truncates_and_rejects_zero():
    b = InstanceBuilder()
    x = b.add_node("x", NodeKind.SWITCH)
    y = b.add_node("y", NodeKind.SWITCH)
    b.add_node("t", NodeKind.TARGET)
    b.set_order(x, [y])
    b.set_order(y, [x])
    b.start = x
    inst = b.build()
    tr = run_play(inst, step_limit=10)
    assert tr.outcome is Outcome.TRUNCATED and tr.steps == 10
    with pytest.raises(ContractError):
        run_play(inst, step_limit=0)


def test_probabilities_must_sum_to_one():
    b = InstanceBuilder()
    r = b.add_node("r", NodeKind.RANDOM)
    t = b.add_node("t", NodeKind.TARGET)
    d = b.add_node("d", NodeKind.DEAD)
    b.add_edge(r, t, Fraction(1, 3))
    b.add_edge(r, d, Fraction(1, 3))
    b.start = r
    with pytest.raises(ModelError):
        b.build()


def test_switch_order_cannot_be_empty():
    b = InstanceBuilder()
    s = b.add_node("s", NodeKind.SWITCH)
    b.add_node("t", NodeKind.TARGET)
    b.start = s
    with pytest.raises(ModelError):
        b.build()


def test_step_probability_and_successors():
    inst = gen_double_exp(2)
    x = inst.vertex("x")
    s = GameState(x, inst.initial_state.switches)
    succ = valid_successors(inst, s)
    assert len(succ) == 2
    assert all(step_probability(inst, s, u) == Fraction(1, 2) for u in succ)


def test_rng_matches_reference_splitmix():
    # reference outputs of SplitMix64 seeded with 0
    st, a = splitmix64(0)
    _, b = splitmix64(st)
    assert a == 0xE220A8397B1DCDAF
    assert b == 0x6E789E6AA1B965F4


def test_rng_choice_is_exact_over_small_denominators():
    rng = Rng(7)
    counts = Counter(rng.choose(3, [1, 3]) for _ in range(30_000))
    assert abs(counts[0] / 30_000 - 1 / 3) < 0.02


def test_run_play_is_deterministic_per_run_index():
    inst = gen_double_exp(2)
    a = run_play(inst, seed=5, run_index=3)
    b = run_play(inst, seed=5, run_index=3)
    assert a == b
    outs = {run_play(inst, seed=5, run_index=i).outcome for i in range(50)}
    assert outs == {Outcome.REACHED_TARGET, Outcome.REACHED_DEAD}


def test_single_edge_and_dead_first_examples():
    b = InstanceBuilder()
    s = b.add_node("s", NodeKind.MAX)
    t = b.add_node("t", NodeKind.TARGET)
    b.add_edge(s, t)
    b.start = s
    tr = run_play(b.build())
    assert tr.outcome is Outcome.REACHED_TARGET and tr.steps == 1

    b = InstanceBuilder()
    s = b.add_node("s", NodeKind.SWITCH)
    t = b.add_node("t", NodeKind.TARGET)
    d = b.add_node("d", NodeKind.DEAD)
    b.set_order(s, [d, t])
    b.start = s
    assert run_play(b.build()).outcome is Outcome.REACHED_DEAD


def test_unknown_vertex_is_a_model_error():
    inst = tiny_switch()
    with pytest.raises(ModelError):
        valid_successors(inst, GameState(99, inst.initial_state.switches))



@given(st.integers(0, 100_000))
def test_transition_invariants(seed):
    kinds = (NodeKind.RANDOM, NodeKind.SWITCH, NodeKind.MAX, NodeKind.MIN)
    inst = random_instance(rng_for(seed), kinds=kinds, max_switches=2)
    g = build_game_graph(inst)
    for s in g.states:
        succ = valid_successors(inst, s)
        assert succ
        k = inst.kinds[s.vertex]
        for u in succ:
            changed = [j for j, (a, b) in enumerate(zip(s.switches, u.switches)) if a != b]
            if k is NodeKind.SWITCH:
                assert changed in ([], [inst.switch_slot[s.vertex]])
            else:
                assert not changed
        if k is NodeKind.RANDOM:
            assert sum(step_probability(inst, s, u) for u in succ) == 1
        if k is NodeKind.SWITCH:
            assert step_probability(inst, s, next(iter(succ))) == 1
