"""Explicit expansion over (vertex, switch positions) and the pruned matrix.

The reachable fragment is built by breadth-first search from the initial
state.  ``modified_matrix`` keeps only states that are reachable and can
still reach the target, folds every target state into one absorbing
column and drops everything else, which leaves a substochastic system.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .analysis import backward_reachable
from .errors import CapacityError, ContractError
from .model import ArrivalInstance, GameState, InstanceBuilder, NodeKind, switch_step

DEFAULT_BUDGET = 2_000_000

ONE = Fraction(1)


def state_radix(inst):
    """Mixed-radix weights for the switch positions."""
    radix = []
    w = 1
    for v in reversed(inst.switch_nodes):
        radix.append(w)
        w *= len(inst.orders[v])
    radix.reverse()
    return tuple(radix), w


def state_code(inst, s):
    """Invertible integer code: vertex * |Q| + mixed-radix(q)."""
    radix, qsize = state_radix(inst)
    return s.vertex * qsize + sum(p * r for p, r in zip(s.switches, radix))


def decode_state(inst, code):
    radix, qsize = state_radix(inst)
    v, rest = divmod(code, qsize)
    q = []
    for r in radix:
        d, rest = divmod(rest, r)
        q.append(d)
    return GameState(v, tuple(q))


def full_state_count(inst):
    _, qsize = state_radix(inst)
    return inst.n * qsize


def _all_positions(inst):
    sizes = [len(inst.orders[v]) for v in inst.switch_nodes]
    q = [0] * len(sizes)
    while True:
        yield tuple(q)
        i = len(q) - 1
        while i >= 0:
            q[i] += 1
            if q[i] < sizes[i]:
                break
            q[i] = 0
            i -= 1
        if i < 0:
            return


def expand_game(inst, budget=DEFAULT_BUDGET):
    """The full expanded game over V x Q plus a fresh target t'.

    Switch states become single-entry switches, every (t, q) is wired to
    t' and every (d, q) loops on itself, so values are preserved.
    """
    total = full_state_count(inst) + 1
    if total > budget:
        raise CapacityError(f"expanded game has {total} states, budget is {budget}", bound=budget)
    b = InstanceBuilder()
    positions = list(_all_positions(inst))
    name = {}
    for v in range(inst.n):
        for q in positions:
            s = GameState(v, q)
            label = inst.state_label(s)
            kind = inst.kinds[v]
            if kind.is_terminal:
                kind = NodeKind.SWITCH
            name[s] = b.add_node(label, kind)
    tprime = b.add_node(b.fresh_name(inst.names[inst.target] + "'"), NodeKind.TARGET)
    for v in range(inst.n):
        kind = inst.kinds[v]
        for q in positions:
            s = GameState(v, q)
            u = name[s]
            if kind is NodeKind.SWITCH:
                b.set_order(u, [name[switch_step(inst, s)]])
            elif kind is NodeKind.TARGET:
                b.set_order(u, [tprime])
            elif kind is NodeKind.DEAD:
                b.set_order(u, [u])
            elif kind is NodeKind.RANDOM:
                for w, p in zip(inst.succ[v], inst.probs[v]):
                    b.add_edge(u, name[GameState(w, q)], p)
            else:
                for w in inst.succ[v]:
                    b.add_edge(u, name[GameState(w, q)])
    b.start = name[inst.initial_state]
    return b.build()


@dataclass
class GameGraph:
    """Reachable fragment of the expanded game, states indexed from 0.

    ``succ[i]`` lists successor indices in adjacency order, ``prob[i]`` the
    matching probabilities for random states (None elsewhere).  Target and
    dead states are absorbing.
    """

    inst: ArrivalInstance
    states: list
    index: dict
    kind: list
    succ: list
    prob: list
    start: int = 0

    @property
    def size(self):
        return len(self.states)

    def is_target(self, i):
        return self.kind[i] is NodeKind.TARGET

    @property
    def target_states(self):
        return [i for i, k in enumerate(self.kind) if k is NodeKind.TARGET]

    def states_of(self, *kinds):
        return [i for i, k in enumerate(self.kind) if k in kinds]

    def vertex_of(self, i):
        return self.states[i].vertex

    def label(self, i):
        return self.inst.state_label(self.states[i])


def build_game_graph(inst, budget=DEFAULT_BUDGET, start=None):
    """Breadth-first reachable fragment from ``start`` (default: initial)."""
    s0 = inst.initial_state if start is None else start
    index = {s0: 0}
    states = [s0]
    kind, succ, prob = [], [], []
    kinds = inst.kinds
    i = 0
    while i < len(states):
        s = states[i]
        v = s.vertex
        k = kinds[v]
        if k is NodeKind.SWITCH:
            nxt = (switch_step(inst, s),)
            p = None
        elif k.is_terminal:
            nxt = (s,)
            p = None
        else:
            q = s.switches
            nxt = tuple(GameState(w, q) for w in inst.succ[v])
            p = inst.probs[v]
        ids = []
        for t in nxt:
            j = index.get(t)
            if j is None:
                j = len(states)
                if j >= budget:
                    raise CapacityError(f"more than {budget} reachable states", bound=budget)
                index[t] = j
                states.append(t)
            ids.append(j)
        kind.append(k)
        succ.append(tuple(ids))
        prob.append(p)
        i += 1
    return GameGraph(inst, states, index, kind, succ, prob, 0)


def reachable_states(inst, budget=DEFAULT_BUDGET):
    return frozenset(build_game_graph(inst, budget).states)


def _require_rs(inst, what):
    if inst.has_players:
        raise ContractError(f"{what} is defined for instances with random and switching nodes only")


class PotentialPredicate:
    """``pred(state)`` is True iff some play from ``state`` reaches the target."""

    def __init__(self, inst, budget=DEFAULT_BUDGET):
        _require_rs(inst, "potential")
        self.inst = inst
        self.budget = budget
        g = build_game_graph(inst, budget)
        good = backward_reachable(g.succ, g.target_states) if g.target_states else frozenset()
        self._known = {g.states[i]: (i in good) for i in range(g.size)}

    def __call__(self, s):
        hit = self._known.get(s)
        if hit is not None:
            return hit
        g = build_game_graph(self.inst, self.budget, start=s)
        good = backward_reachable(g.succ, g.target_states) if g.target_states else frozenset()
        for i in range(g.size):
            self._known[g.states[i]] = i in good
        return self._known[s]


def potential_states(inst, budget=DEFAULT_BUDGET):
    return PotentialPredicate(inst, budget)


@dataclass
class ExpandedSystem:
    """Pruned substochastic system.

    Indices ``0..len(states)-1`` are retained non-target states; index
    ``star`` is the absorbing target class whose row is empty.
    ``rows[i]`` maps column -> probability (columns may include ``star``).
    ``start`` is the index of the initial state, ``star`` if it is a target
    state, or None when it cannot reach the target at all.
    """

    inst: ArrivalInstance
    states: list
    index: dict
    rows: list
    kinds: list
    start: object
    star: int
    stats: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.star + 1

    def row_sum(self, i):
        return sum(self.rows[i].values(), Fraction(0))

    def target_column(self):
        return [self.rows[i].get(self.star, Fraction(0)) for i in range(self.star)]

    def triplets(self):
        for i, row in enumerate(self.rows):
            for j in sorted(row):
                yield i, j, row[j]

    def dump_triplets(self):
        lines = [f"# states {self.size} star {self.star} start {self.start}"]
        for i, j, p in self.triplets():
            lines.append(f"{i} {j} {p.numerator}/{p.denominator}")
        return "\n".join(lines) + "\n"

    def label(self, i):
        if i == self.star:
            return "*"
        return self.inst.state_label(self.states[i])


def modified_matrix(inst, budget=DEFAULT_BUDGET):
    _require_rs(inst, "the modified matrix")
    g = build_game_graph(inst, budget)
    return system_from_graph(g)


def system_from_graph(g):
    tset = set(g.target_states)
    good = backward_reachable(g.succ, tset) if tset else frozenset()
    keep = [i for i in range(g.size) if i in good and i not in tset]
    local = {i: r for r, i in enumerate(keep)}
    star = len(keep)
    rows = []
    for i in keep:
        row = {}
        if g.kind[i] is NodeKind.RANDOM:
            pairs = zip(g.succ[i], g.prob[i])
        else:
            pairs = ((g.succ[i][0], ONE),)
        for j, p in pairs:
            if j in tset:
                col = star
            else:
                col = local.get(j)
                if col is None:
                    continue
            row[col] = row.get(col, Fraction(0)) + p
        rows.append(row)
    rows.append({})
    if g.start in tset:
        start = star
    else:
        start = local.get(g.start)
    states = [g.states[i] for i in keep]
    return ExpandedSystem(
        inst=g.inst,
        states=states,
        index={s: r for r, s in enumerate(states)},
        rows=rows,
        kinds=[g.kind[i] for i in keep] + [NodeKind.TARGET],
        start=start,
        star=star,
        stats={"reachable": g.size, "retained": star + 1},
    )
