"""Reductions between instance variants.

random_to_player: positive-value questions about random nodes become
    questions about a maximizer who controls them.
player_to_random: the converse, replacing maximizer choices by uniform
    coins.
dualize_players: swap the roles of the players together with target and
    dead end.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ContractError
from .expand import DEFAULT_BUDGET, build_game_graph
from .model import InstanceBuilder, NodeKind


def _retype(inst, mapping):
    b = InstanceBuilder.from_instance(inst)
    for v in range(inst.n):
        new = mapping.get(b.kinds[v])
        if new is None or new is b.kinds[v]:
            continue
        if new.is_player:
            b.probs[v] = None
        elif new is NodeKind.RANDOM:
            k = len(b.succ[v])
            b.probs[v] = [Fraction(1, k)] * k
        b.kinds[v] = new
    return b


def random_to_player(inst):
    """Give the maximizer control of every random node."""
    if NodeKind.RANDOM not in inst.kind_set:
        raise ContractError("instance has no random nodes")
    # every stored edge has positive probability, so nothing is removed
    return _retype(inst, {NodeKind.RANDOM: NodeKind.MAX}).build()


def player_to_random(inst):
    """Replace every maximizer node by a uniform random node.

    Minimizer nodes are left alone, so a two-player game becomes a
    random/min game.
    """
    if NodeKind.MAX not in inst.kind_set:
        raise ContractError("instance has no max nodes")
    return _retype(inst, {NodeKind.MAX: NodeKind.RANDOM}).build()


def dualize_players(inst):
    """Swap max and min nodes and exchange target and dead end.

    A dead end is created first when the instance has none.  The value of
    the result is 1 - value whenever no strategy pair can avoid both
    terminals forever (see ``dual_identity_holds``).
    """
    b = _retype(inst, {NodeKind.MAX: NodeKind.MIN, NodeKind.MIN: NodeKind.MAX})
    if b.dead is None:
        b.add_node(b.fresh_name("d"), NodeKind.DEAD)
    t, d = b.target, b.dead
    b.kinds[t], b.kinds[d] = NodeKind.DEAD, NodeKind.TARGET
    b.target, b.dead = d, t
    return b.build()


def _sccs(nodes, succ):
    """Strongly connected components of the subgraph induced by ``nodes``."""
    index = {}
    low = {}
    stack = []
    on = set()
    comps = []
    counter = 0
    for root in sorted(nodes):
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in nodes:
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def end_components(g):
    """Maximal end components of the expanded game avoiding both terminals.

    Inside an end component the players can keep the play forever with
    probability one, so the target/dead swap identity may fail there.
    """
    region = {i for i in range(g.size) if not g.kind[i].is_terminal}
    while True:
        changed = False
        for comp in _sccs(region, g.succ):
            for i in list(comp):
                k = g.kind[i]
                if k.is_player:
                    ok = any(j in comp for j in g.succ[i])
                else:
                    ok = all(j in comp for j in g.succ[i])
                if not ok:
                    region.discard(i)
                    changed = True
        if not changed:
            break
    comps = []
    for comp in _sccs(region, g.succ):
        trivial = len(comp) == 1 and not any(j in comp for j in g.succ[next(iter(comp))])
        if not trivial:
            comps.append(sorted(comp))
    return comps


def dual_identity_holds(inst, budget=DEFAULT_BUDGET):
    """True when every strategy pair terminates almost surely."""
    return not end_components(build_game_graph(inst, budget))
