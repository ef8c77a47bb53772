import pytest
from hypothesis import given, strategies as st

from arrival.corpus import random_instance, rng_for
from arrival.errors import ContractError
from arrival.gadgets import gen_double_exp
from arrival.model import NodeKind
from arrival.reductions import (
    dual_identity_holds, dualize_players, end_components, player_to_random, random_to_player,
)
from arrival.expand import build_game_graph
from arrival.solve import value


@given(st.integers(0, 100_000))
def test_random_to_player_value_one_iff_positive(seed):
    rng = rng_for(seed)
    inst = random_instance(rng, kinds=(NodeKind.RANDOM, NodeKind.SWITCH, NodeKind.MAX), max_switches=2)
    if NodeKind.RANDOM not in inst.kind_set:
        return
    assert (value(inst) > 0) == (value(random_to_player(inst)) == 1)


@given(st.integers(0, 100_000))
def test_player_to_random_converse(seed):
    rng = rng_for(seed)
    inst = random_instance(rng, kinds=(NodeKind.MAX, NodeKind.SWITCH, NodeKind.RANDOM), max_switches=2)
    if NodeKind.MAX not in inst.kind_set:
        return
    assert (value(inst) > 0) == (value(player_to_random(inst)) > 0)


def test_reductions_need_their_kind():
    with pytest.raises(ContractError):
        random_to_player(random_instance(rng_for(0), kinds=(NodeKind.MAX,)))
    with pytest.raises(ContractError):
        player_to_random(gen_double_exp(2))


@given(st.integers(0, 100_000))
def test_dual_identity_when_plays_terminate(seed):
    rng = rng_for(seed)
    kinds = (NodeKind.RANDOM, NodeKind.SWITCH, NodeKind.MAX, NodeKind.MIN)
    inst = random_instance(rng, kinds=kinds, max_switches=2)
    dual = dualize_players(inst)
    assert dualize_players(dual).kind_set == inst.kind_set | {NodeKind.DEAD}
    if dual_identity_holds(inst):
        assert value(dual) == 1 - value(inst)


def test_end_component_blocks_dual_identity():
    from arrival.model import InstanceBuilder

    b = InstanceBuilder()
    x = b.add_node("x", NodeKind.MAX)
    y = b.add_node("y", NodeKind.MIN)
    t = b.add_node("t", NodeKind.TARGET)
    b.add_node("d", NodeKind.DEAD)
    b.add_edge(x, y)
    b.add_edge(y, x)
    b.add_edge(y, t)
    b.start = x
    inst = b.build()
    assert end_components(build_game_graph(inst))
    assert not dual_identity_holds(inst)
    # min loops forever in the original, and max does the same in the dual
    assert value(inst) == 0 and value(dualize_players(inst)) == 0


@given(st.integers(0, 100_000))
def test_round_trip_keeps_qual0(seed):
    inst = random_instance(rng_for(seed), kinds=(NodeKind.MAX, NodeKind.SWITCH), max_switches=2)
    if NodeKind.MAX not in inst.kind_set:
        return
    back = random_to_player(player_to_random(inst))
    assert (value(back) > 0) == (value(inst) > 0)


def test_sampled_winning_plays_replay_in_the_player_game():
    from arrival.model import GameState, Outcome, run_play, valid_successors

    for seed in range(20):
        inst = random_instance(rng_for(seed), kinds=(NodeKind.RANDOM, NodeKind.SWITCH), max_switches=2)
        if NodeKind.RANDOM not in inst.kind_set:
            continue
        game = random_to_player(inst)
        back = player_to_random(game)
        for run in range(30):
            tr = run_play(inst, seed=seed, run_index=run, step_limit=200)
            if tr.outcome is not Outcome.REACHED_TARGET:
                continue
            for a, b in zip(tr.states, tr.states[1:]):
                assert b in valid_successors(game, a)
                assert b in valid_successors(back, a)
