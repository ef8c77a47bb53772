"""Instance model, game states, valid transitions and sampled plays.

An instance is a directed graph whose vertices are partitioned into random,
switching, max-player and min-player nodes, plus one target and at most one
dead end.  Switching nodes walk cyclically through an ordered list of
successors; their current positions are part of the game state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .errors import ContractError, ModelError

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


class NodeKind(enum.Enum):
    RANDOM = "random"
    SWITCH = "switch"
    MAX = "max"
    MIN = "min"
    TARGET = "target"
    DEAD = "dead"

    @property
    def is_player(self):
        return self in (NodeKind.MAX, NodeKind.MIN)

    @property
    def is_terminal(self):
        return self in (NodeKind.TARGET, NodeKind.DEAD)


# integer codes used by the sampling kernels
KIND_CODE = {
    NodeKind.RANDOM: 0,
    NodeKind.SWITCH: 1,
    NodeKind.MAX: 2,
    NodeKind.MIN: 3,
    NodeKind.TARGET: 4,
    NodeKind.DEAD: 5,
}


class GameState(NamedTuple):
    """A vertex together with the position of every switching node.

    ``switches[j]`` is the position of ``inst.switch_nodes[j]``.
    """

    vertex: int
    switches: tuple


class Outcome(enum.Enum):
    REACHED_TARGET = "reached-target"
    REACHED_DEAD = "reached-dead"
    TRUNCATED = "truncated"


@dataclass(frozen=True)
class PlayTrace:
    states: tuple
    outcome: Outcome
    step_limit: int

    @property
    def steps(self):
        return len(self.states) - 1


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    raise ModelError(f"probabilities must be exact rationals, got {x!r}")


@dataclass(frozen=True)
class ArrivalInstance:
    """Immutable, validated instance.

    ``succ[v]`` lists the out-neighbours of ``v`` in adjacency order.  For a
    random node ``probs[v][i]`` is the probability of ``succ[v][i]``; for a
    switching node ``orders[v]`` is its cyclic order.  Other entries are None.
    """

    names: tuple
    kinds: tuple
    succ: tuple
    probs: tuple
    orders: tuple
    start: int
    target: int
    dead: Optional[int] = None

    def __post_init__(self):
        self._validate()

    # -- validation -----------------------------------------------------
    def _validate(self):
        n = len(self.names)
        if not (len(self.kinds) == len(self.succ) == len(self.probs) == len(self.orders) == n):
            raise ModelError("per-vertex tables have inconsistent lengths")
        if n == 0:
            raise ModelError("instance has no vertices")
        if len(set(self.names)) != n:
            raise ModelError("vertex names must be unique")
        for v in (self.start, self.target):
            if not 0 <= v < n:
                raise ModelError(f"unknown vertex {v}")
        targets = [v for v in range(n) if self.kinds[v] is NodeKind.TARGET]
        if targets != [self.target]:
            raise ModelError("exactly one target node is required and it must be the declared target")
        deads = [v for v in range(n) if self.kinds[v] is NodeKind.DEAD]
        if len(deads) > 1:
            raise ModelError("at most one dead node is allowed")
        if deads != ([] if self.dead is None else [self.dead]):
            raise ModelError("declared dead node does not match node kinds")
        for v in range(n):
            kind = self.kinds[v]
            out = self.succ[v]
            name = self.names[v]
            if not isinstance(kind, NodeKind):
                raise ModelError(f"{name}: bad kind {kind!r}")
            if len(out) == 0:
                raise ModelError(f"{name}: every vertex needs an out-edge")
            if len(set(out)) != len(out):
                raise ModelError(f"{name}: parallel edges are not allowed")
            for w in out:
                if not 0 <= w < n:
                    raise ModelError(f"{name}: edge to unknown vertex {w}")
            if kind.is_terminal and tuple(out) != (v,):
                raise ModelError(f"{name}: the only out-edge of a {kind.value} node is its self-loop")
            p = self.probs[v]
            if kind is NodeKind.RANDOM:
                if p is None or len(p) != len(out):
                    raise ModelError(f"{name}: random node needs one probability per out-edge")
                if any(not isinstance(x, Fraction) or x <= 0 for x in p):
                    raise ModelError(f"{name}: probabilities must be positive rationals")
                if sum(p) != 1:
                    raise ModelError(f"{name}: probabilities sum to {sum(p)}, not 1")
            elif p is not None:
                raise ModelError(f"{name}: only random nodes carry probabilities")
            o = self.orders[v]
            if kind is NodeKind.SWITCH:
                if not o:
                    raise ModelError(f"{name}: switching order must be non-empty")
                if set(o) != set(out):
                    raise ModelError(f"{name}: order entries must be exactly the out-neighbours")
            elif o is not None:
                raise ModelError(f"{name}: only switching nodes carry an order")

    # -- derived tables --------------------------------------------------
    @property
    def n(self):
        return len(self.names)

    @cached_property
    def switch_nodes(self):
        return tuple(v for v in range(self.n) if self.kinds[v] is NodeKind.SWITCH)

    @cached_property
    def switch_slot(self):
        return {v: j for j, v in enumerate(self.switch_nodes)}

    @cached_property
    def index(self):
        return {name: v for v, name in enumerate(self.names)}

    @cached_property
    def edges(self):
        """All edges ``(v, w)`` in vertex then adjacency order."""
        return tuple((v, w) for v in range(self.n) for w in self.succ[v])

    @cached_property
    def edge_id(self):
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def kind_set(self):
        return frozenset(self.kinds)

    def nodes_of(self, kind):
        return tuple(v for v in range(self.n) if self.kinds[v] is kind)

    @property
    def has_players(self):
        return NodeKind.MAX in self.kind_set or NodeKind.MIN in self.kind_set

    def prob(self, v, w):
        """Probability of edge (v, w) at a random node, 0 for non-edges."""
        if self.kinds[v] is not NodeKind.RANDOM:
            raise ContractError(f"{self.names[v]} is not a random node")
        try:
            return self.probs[v][self.succ[v].index(w)]
        except ValueError:
            return Fraction(0)

    @cached_property
    def sampling_table(self):
        """Per random node: (common denominator, cumulative numerators)."""
        table = {}
        for v in self.nodes_of(NodeKind.RANDOM):
            ps = self.probs[v]
            den = math.lcm(*(p.denominator for p in ps))
            cum, acc = [], 0
            for p in ps:
                acc += p.numerator * (den // p.denominator)
                cum.append(acc)
            table[v] = (den, tuple(cum))
        return table

    @property
    def initial_state(self):
        return GameState(self.start, (0,) * len(self.switch_nodes))

    def vertex(self, name):
        try:
            return self.index[name]
        except KeyError:
            raise ModelError(f"unknown vertex {name!r}") from None

    def state_label(self, s):
        q = ",".join(str(x) for x in s.switches)
        return f"{self.names[s.vertex]}|{q}"

    def order_total(self):
        return sum(len(self.orders[v]) for v in self.switch_nodes)


class InstanceBuilder:
    """Mutable staging area for instances; ``build()`` validates."""

    def __init__(self):
        self.names = []
        self.kinds = []
        self.succ = []
        self.probs = []
        self.orders = []
        self.start = None
        self.target = None
        self.dead = None
        self._index = {}

    @classmethod
    def from_instance(cls, inst):
        b = cls()
        for v in range(inst.n):
            b.names.append(inst.names[v])
            b.kinds.append(inst.kinds[v])
            b.succ.append(list(inst.succ[v]))
            b.probs.append(None if inst.probs[v] is None else list(inst.probs[v]))
            b.orders.append(None if inst.orders[v] is None else list(inst.orders[v]))
            b._index[inst.names[v]] = v
        b.start, b.target, b.dead = inst.start, inst.target, inst.dead
        return b

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self._index

    def id(self, name):
        return self._index[name]

    def fresh_name(self, stem):
        if stem not in self._index:
            return stem
        i = 1
        while f"{stem}_{i}" in self._index:
            i += 1
        return f"{stem}_{i}"

    def add_node(self, name, kind):
        if name in self._index:
            raise ModelError(f"duplicate vertex {name!r}")
        v = len(self.names)
        self.names.append(name)
        self.kinds.append(kind)
        self.succ.append([])
        self.probs.append([] if kind is NodeKind.RANDOM else None)
        self.orders.append([] if kind is NodeKind.SWITCH else None)
        self._index[name] = v
        if kind is NodeKind.TARGET:
            self.target = v
        elif kind is NodeKind.DEAD:
            self.dead = v
        if kind.is_terminal:
            self.succ[v].append(v)
        return v

    def add_edge(self, u, v, prob=None):
        """Add edge u->v; a repeated random edge accumulates probability."""
        out = self.succ[u]
        if self.kinds[u] is NodeKind.RANDOM:
            if prob is None:
                raise ModelError(f"{self.names[u]}: random edges need a probability")
            prob = _as_fraction(prob)
            if v in out:
                i = out.index(v)
                self.probs[u][i] += prob
            else:
                out.append(v)
                self.probs[u].append(prob)
        else:
            if prob is not None:
                raise ModelError(f"{self.names[u]}: only random edges carry probabilities")
            if v not in out:
                out.append(v)

    def set_order(self, v, seq):
        """Set the cyclic order of switch v, adding missing edges."""
        seq = list(seq)
        for w in seq:
            if w not in self.succ[v]:
                self.succ[v].append(w)
        self.orders[v] = seq

    def set_uniform(self, v, targets):
        targets = list(targets)
        k = len(targets)
        self.succ[v] = []
        self.probs[v] = []
        for w in targets:
            self.add_edge(v, w, Fraction(1, k))

    def build(self):
        if self.start is None:
            raise ModelError("no start vertex")
        if self.target is None:
            raise ModelError("no target vertex")
        return ArrivalInstance(
            names=tuple(self.names),
            kinds=tuple(self.kinds),
            succ=tuple(tuple(s) for s in self.succ),
            probs=tuple(None if p is None else tuple(p) for p in self.probs),
            orders=tuple(None if o is None else tuple(o) for o in self.orders),
            start=self.start,
            target=self.target,
            dead=self.dead,
        )


# -- transitions -----------------------------------------------------------

def _check_state(inst, s):
    if not 0 <= s.vertex < inst.n:
        raise ModelError(f"unknown vertex {s.vertex}")
    if len(s.switches) != len(inst.switch_nodes):
        raise ModelError("switch position vector has the wrong length")


def switch_step(inst, s):
    """The unique successor of a state at a switching node."""
    v = s.vertex
    j = inst.switch_slot[v]
    order = inst.orders[v]
    pos = s.switches[j]
    q = s.switches
    return GameState(order[pos], q[:j] + ((pos + 1) % len(order),) + q[j + 1:])


def valid_successors(inst, s):
    """All states reachable from ``s`` in one valid transition.

    Returned in adjacency order; the collection is never empty.
    """
    _check_state(inst, s)
    if inst.kinds[s.vertex] is NodeKind.SWITCH:
        return (switch_step(inst, s),)
    return tuple(GameState(w, s.switches) for w in inst.succ[s.vertex])


def step_probability(inst, frm, to):
    _check_state(inst, frm)
    _check_state(inst, to)
    kind = inst.kinds[frm.vertex]
    if kind.is_player:
        raise ContractError("player nodes have no fixed transition distribution")
    if kind is NodeKind.SWITCH:
        return Fraction(1) if switch_step(inst, frm) == to else Fraction(0)
    if to.switches != frm.switches:
        return Fraction(0)
    if kind is NodeKind.RANDOM:
        return inst.prob(frm.vertex, to.vertex)
    return Fraction(1) if to.vertex == frm.vertex else Fraction(0)


# -- seeded sampling ---------------------------------------------------------

def splitmix64(state):
    """One SplitMix64 step; returns (new_state, output)."""
    state = (state + GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def run_seed(seed, run_index):
    """Initial generator state of run ``run_index`` under a master seed."""
    _, mixed = splitmix64((seed * GOLDEN + run_index) & MASK64)
    return mixed


class Rng:
    """Counter-based 64-bit stream shared bit-for-bit with the kernels."""

    def __init__(self, seed, run_index=0):
        self.state = run_seed(seed, run_index)

    def next64(self):
        self.state, out = splitmix64(self.state)
        return out

    def choose(self, den, cum):
        """Index i with probability (cum[i]-cum[i-1])/den, exactly.

        Draws falling in the residual interval above the largest multiple
        of ``den`` below 2**64 are rejected and redrawn.
        """
        limit = ((1 << 64) // den) * den
        while True:
            u = self.next64()
            if u < limit:
                break
        r = u % den
        for i, c in enumerate(cum):
            if r < c:
                return i
        raise AssertionError("cumulative table does not reach the denominator")


def default_step_limit(inst):
    prod = 1
    for v in inst.switch_nodes:
        prod *= len(inst.orders[v])
    return 64 * inst.n * prod


def run_play(inst, strategies=None, seed=0, step_limit=None, run_index=0):
    """Sample one play from the initial state.

    ``strategies`` maps player states to the chosen successor vertex; player
    states it does not cover take their first out-edge.
    """
    if step_limit is None:
        step_limit = default_step_limit(inst)
    if step_limit <= 0:
        raise ContractError("step limit must be positive")
    strategies = strategies or {}
    rng = Rng(seed, run_index)
    table = inst.sampling_table
    s = inst.initial_state
    states = [s]
    outcome = Outcome.TRUNCATED
    for _ in range(step_limit + 1):
        kind = inst.kinds[s.vertex]
        if kind is NodeKind.TARGET:
            outcome = Outcome.REACHED_TARGET
            break
        if kind is NodeKind.DEAD:
            outcome = Outcome.REACHED_DEAD
            break
        if len(states) > step_limit:
            break
        if kind is NodeKind.SWITCH:
            s = switch_step(inst, s)
        elif kind is NodeKind.RANDOM:
            den, cum = table[s.vertex]
            s = GameState(inst.succ[s.vertex][rng.choose(den, cum)], s.switches)
        else:
            w = strategies.get(s, inst.succ[s.vertex][0])
            if w not in inst.succ[s.vertex]:
                raise ContractError(f"strategy picks non-successor {w} at {inst.state_label(s)}")
            s = GameState(w, s.switches)
        states.append(s)
    return PlayTrace(tuple(states), outcome, step_limit)


def encoding_size(inst):
    """Bit size of a plain binary encoding of the instance."""
    vbits = max(1, (inst.n).bit_length())
    bits = 3 * vbits
    for v in range(inst.n):
        bits += 3 + vbits * len(inst.succ[v])
        if inst.probs[v] is not None:
            bits += sum(p.numerator.bit_length() + p.denominator.bit_length() for p in inst.probs[v])
        if inst.orders[v] is not None:
            bits += vbits * len(inst.orders[v])
    return bits


def max_order_length(inst):
    return max((len(inst.orders[v]) for v in inst.switch_nodes), default=1)


def check_strategy(inst, strategy):
    for s, w in strategy.items():
        if not inst.kinds[s.vertex].is_player:
            raise ContractError(f"strategy defined at non-player state {inst.state_label(s)}")
        if w not in inst.succ[s.vertex]:
            raise ContractError(f"strategy picks non-successor at {inst.state_label(s)}")
