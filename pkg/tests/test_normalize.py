from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from arrival.corpus import random_instance, random_simple_rs, rng_for
from arrival.errors import ContractError
from arrival.gadgets import gen_double_exp
from arrival.model import InstanceBuilder, NodeKind
from arrival.normalize import (
    TO_DEAD, TO_TARGET, epsilon, geq_to_strict, is_simple_form, prefix_coin, prune_dead_edges,
    simple_form_violations, swap_target_dead, to_simple_form,
)
from arrival.solve import value

ALL = (NodeKind.RANDOM, NodeKind.SWITCH, NodeKind.MAX, NodeKind.MIN)


@given(st.integers(0, 100_000))
def test_simple_form_preserves_value(seed):
    rng = rng_for(seed)
    inst = random_instance(rng, kinds=ALL, max_switches=2, max_order=3, max_degree=3)
    out = to_simple_form(inst)
    assert is_simple_form(out), simple_form_violations(out)
    assert value(out) == value(inst)


def test_random_split_uses_coin_tree():
    b = InstanceBuilder()
    r = b.add_node("r", NodeKind.RANDOM)
    t = b.add_node("t", NodeKind.TARGET)
    d = b.add_node("d", NodeKind.DEAD)
    b.add_edge(r, t, Fraction(2, 5))
    b.add_edge(r, d, Fraction(3, 5))
    b.start = r
    inst = b.build()
    out = to_simple_form(inst)
    assert is_simple_form(out)
    assert value(out) == Fraction(2, 5)
    assert all(p == Fraction(1, 2) for ps in out.probs if ps for p in ps)


def test_switch_split_keeps_order():
    b = InstanceBuilder()
    s = b.add_node("s", NodeKind.SWITCH)
    a = b.add_node("a", NodeKind.SWITCH)
    t = b.add_node("t", NodeKind.TARGET)
    d = b.add_node("d", NodeKind.DEAD)
    # third visit wins, everything else comes back to s through a
    b.set_order(s, [a, a, t, d, d])
    b.set_order(a, [s])
    b.start = s
    inst = b.build()
    out = to_simple_form(inst)
    assert is_simple_form(out)
    assert value(inst) == value(out) == 1


def test_self_loops_are_removed():
    b = InstanceBuilder()
    r = b.add_node("r", NodeKind.RANDOM)
    t = b.add_node("t", NodeKind.TARGET)
    d = b.add_node("d", NodeKind.DEAD)
    b.add_edge(r, r, Fraction(1, 2))
    b.add_edge(r, t, Fraction(1, 4))
    b.add_edge(r, d, Fraction(1, 4))
    b.start = r
    inst = b.build()
    out = to_simple_form(inst)
    assert value(out) == value(inst) == Fraction(1, 2)


@given(st.integers(0, 100_000))
def test_swap_identity(seed):
    inst = random_simple_rs(rng_for(seed))
    assert value(swap_target_dead(inst)) == 1 - value(inst)


@given(st.integers(0, 100_000))
def test_prune_keeps_value_and_drops_dead_edges(seed):
    inst = random_instance(rng_for(seed), kinds=(NodeKind.RANDOM, NodeKind.SWITCH, NodeKind.MAX))
    out = prune_dead_edges(inst)
    assert value(out) == value(inst)


def test_swap_rejects_players():
    with pytest.raises(ContractError):
        swap_target_dead(random_instance(rng_for(1), kinds=(NodeKind.MAX,)))


@given(st.integers(0, 100_000))
def test_prefix_coin(seed):
    inst = random_instance(rng_for(seed), kinds=ALL, max_switches=2)
    v = value(inst)
    assert value(prefix_coin(inst, TO_TARGET)) == (1 + v) / 2
    assert value(prefix_coin(inst, TO_DEAD)) == v / 2


@pytest.mark.parametrize("l", [1, 2, 3])
def test_geq_shift(l):
    inst = gen_double_exp(2)
    v = value(inst)
    eps = epsilon(l)
    assert value(geq_to_strict(inst, l)) == v + eps * (1 - v)
    assert value(geq_to_strict(inst, l, toward_dead=True)) == v - eps * v


def test_geq_rejects_bad_depth():
    with pytest.raises(ContractError):
        geq_to_strict(gen_double_exp(1), 0)


@given(st.integers(0, 100_000))
def test_prefix_coins_compose(seed):
    inst = random_instance(rng_for(seed))
    v = value(inst)
    assert value(prefix_coin(prefix_coin(inst, TO_TARGET), TO_DEAD)) == (1 + v) / 4


def test_simple_instance_is_left_alone():
    inst = random_simple_rs(rng_for(4))
    out = to_simple_form(inst)
    assert out.n == inst.n
    assert out.succ == inst.succ and out.orders == inst.orders


def test_geq_from_zero_gives_epsilon():
    b = InstanceBuilder()
    r = b.add_node("r", NodeKind.RANDOM)
    b.add_node("t", NodeKind.TARGET)
    d = b.add_node("d", NodeKind.DEAD)
    b.add_edge(r, d, Fraction(1))
    b.start = r
    inst = b.build()
    assert value(geq_to_strict(inst, 2)) == Fraction(1, 8)
    assert value(geq_to_strict(prefix_coin(inst, TO_TARGET), 1)) == Fraction(3, 4)
