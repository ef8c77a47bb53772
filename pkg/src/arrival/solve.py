"""Exact values and the three decision problems.

Everything runs on the reachable expanded game.  Zero-player systems are
solved by sparse rational elimination; one-player games by policy
iteration; two-player games by strategy iteration with a best-responding
minimizer.  Values never touch floating point.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .analysis import attractor_ranks, backward_reachable
from .errors import ContractError, SolverError
from .expand import DEFAULT_BUDGET, build_game_graph, system_from_graph
from .model import NodeKind, encoding_size, max_order_length

ZERO = Fraction(0)
ONE = Fraction(1)

LINEAR = "LinearSolve"
POLICY = "PolicyIteration"
STRATEGY = "StrategyIteration"
ATTRACTOR = "Attractor"


# -- sparse rational elimination ------------------------------------------

def hitting_probabilities(trans, targets, stats=None):
    """Probability of eventually hitting ``targets`` in a finite chain.

    ``trans[i]`` is a sequence of ``(j, p)`` pairs with positive p summing
    to at most 1; missing mass is lost.  States that cannot reach a target
    get 0, chains of single certain transitions are collapsed and the rest
    is solved by elimination with a Markowitz pivot order.
    """
    n = len(trans)
    targets = set(targets)
    succ = [[j for j, _ in row] for row in trans]
    good = backward_reachable(succ, targets) if targets else frozenset()
    val = [ZERO] * n
    for t in targets:
        val[t] = ONE

    # collapse certain transitions: rep[i] is a target, a dead state or a variable
    rep = list(range(n))

    def is_certain(i):
        row = trans[i]
        return i in good and i not in targets and len(row) == 1 and row[0][1] == 1

    for i in range(n):
        if not is_certain(i):
            continue
        path = []
        j = i
        seen = set()
        while is_certain(j) and rep[j] == j:
            if j in seen:
                # a certain cycle never reaches the target
                raise SolverError("deterministic cycle inside the positive set")
            seen.add(j)
            path.append(j)
            j = trans[j][0][0]
        r = rep[j]
        for k in path:
            rep[k] = r

    variables = [i for i in range(n) if i in good and i not in targets and rep[i] == i]
    eqs = {}
    const = {}
    for i in variables:
        row = {}
        c = ZERO
        for j, p in trans[i]:
            r = rep[j]
            if r in targets:
                c += p
            elif r in good:
                row[r] = row.get(r, ZERO) + p
        eqs[i] = row
        const[i] = c

    solved = _eliminate(eqs, const, stats)
    for i in variables:
        val[i] = solved[i]
    for i in range(n):
        if i in good and rep[i] != i:
            val[i] = val[rep[i]]
    _check_fixpoint(trans, targets, good, val)
    return val


def _eliminate(eqs, const, stats=None):
    """Solve x_i = sum_j eqs[i][j] x_j + const[i] exactly."""
    refs = {i: set() for i in eqs}
    for i, row in eqs.items():
        for j in row:
            refs[j].add(i)

    def cost(k):
        a = len(eqs[k]) - (k in eqs[k])
        b = len(refs[k]) - (k in refs[k])
        return a * b

    heap = [(cost(k), k) for k in eqs]
    heapq.heapify(heap)
    done = set()
    order = []
    pivots = 0
    while heap:
        c, k = heapq.heappop(heap)
        if k in done:
            continue
        now = cost(k)
        if now != c:
            heapq.heappush(heap, (now, k))
            continue
        row = eqs[k]
        akk = row.pop(k, ZERO)
        refs[k].discard(k)
        if akk:
            if akk >= 1:
                raise SolverError("singular system (state cannot leave itself)")
            f = 1 / (1 - akk)
            for j in row:
                row[j] *= f
            const[k] *= f
        ck = const[k]
        touched = set()
        for i in sorted(refs[k]):
            if i in done:
                continue
            ri = eqs[i]
            a = ri.pop(k)
            for j, b in row.items():
                ri[j] = ri.get(j, ZERO) + a * b
                refs[j].add(i)
                touched.add(j)
            if ck:
                const[i] += a * ck
            touched.add(i)
        for j in row:
            refs[j].discard(k)
            touched.add(j)
        done.add(k)
        order.append(k)
        pivots += 1
        for t in sorted(touched - done):
            heapq.heappush(heap, (cost(t), t))
    x = {}
    for k in reversed(order):
        v = const[k]
        for j, a in eqs[k].items():
            v += a * x[j]
        x[k] = v
    if stats is not None:
        stats["pivots"] = stats.get("pivots", 0) + pivots
    return x


def _check_fixpoint(trans, targets, good, val):
    for i, row in enumerate(trans):
        if i in targets or i not in good:
            continue
        s = ZERO
        for j, p in row:
            s += p * val[j]
        if s != val[i]:
            raise SolverError(f"substitution check failed at state {i}")


def solve_chain(sys, stats=None):
    """Exact hitting probabilities of the target class for every index.

    The returned list has ``sys.size`` entries; the last one (the target
    class) is 1.  Each solve is checked by exact substitution into
    h = P h + b.
    """
    trans = [sorted(row.items()) for row in sys.rows]
    # the target class absorbs
    trans[sys.star] = [(sys.star, ONE)]
    h = hitting_probabilities(trans, [sys.star], stats)
    for i in range(sys.star):
        acc = sum((p * h[j] for j, p in sys.rows[i].items()), ZERO)
        if acc != h[i]:
            raise SolverError(f"h = Ph + b violated at index {i}")
    return h


# -- expanded games with players -----------------------------------------

def _chain(g, choice):
    """Transition lists of the graph once every player state is fixed."""
    trans = []
    for i in range(g.size):
        k = g.kind[i]
        if k is NodeKind.RANDOM:
            trans.append(list(zip(g.succ[i], g.prob[i])))
        elif k.is_player:
            trans.append([(choice[i], ONE)])
        else:
            trans.append([(g.succ[i][0], ONE)])
    return trans


def evaluate(g, choice, stats=None):
    return hitting_probabilities(_chain(g, choice), g.target_states, stats)


def _restricted_succ(g, fixed):
    """Adjacency where states in ``fixed`` keep only their chosen edge."""
    return [(fixed[i],) if i in fixed else g.succ[i] for i in range(g.size)]


def _attractor_choice(g, succ, states, adversarial):
    rank = attractor_ranks(succ, [i for i in range(g.size) if i not in adversarial],
                           adversarial, g.target_states)
    choice = {}
    for i in states:
        r = rank[i]
        pick = g.succ[i][0]
        if r is not None and r > 0:
            for j in g.succ[i]:
                if rank[j] is not None and rank[j] < r:
                    pick = j
                    break
        choice[i] = pick
    return choice, rank


def _improve(g, states, choice, val, sign):
    """Switch to strictly better successors, keeping the incumbent on ties."""
    changed = False
    for i in states:
        cur = choice[i]
        best = cur
        for j in g.succ[i]:
            if sign * (val[j] - val[best]) > 0:
                best = j
        if best != cur:
            choice[i] = best
            changed = True
    return changed


def max_policy_iteration(g, fixed=None, stats=None):
    """Optimal maximizer strategy when all minimizer states are fixed."""
    fixed = dict(fixed or {})
    maxs = g.states_of(NodeKind.MAX)
    succ = _restricted_succ(g, fixed)
    choice, _ = _attractor_choice(g, succ, maxs, set())
    choice.update(fixed)
    seq = []
    while True:
        val = evaluate(g, choice, stats)
        if seq and val[g.start] < seq[-1]:
            raise SolverError("policy iteration value decreased")
        seq.append(val[g.start])
        if not _improve(g, maxs, choice, val, 1):
            break
    if stats is not None:
        stats.setdefault("value_sequence", []).append(seq)
        stats["iterations"] = stats.get("iterations", 0) + len(seq)
    return val, {i: choice[i] for i in maxs}


def min_policy_iteration(g, fixed=None, stats=None):
    """Optimal minimizer strategy when all maximizer states are fixed.

    States from which the minimizer can avoid the target surely are
    settled first by an attractor; on the rest every strategy reaches the
    target or that region with probability one, so improvement converges
    to the least fixed point.
    """
    fixed = dict(fixed or {})
    mins = g.states_of(NodeKind.MIN)
    minset = set(mins)
    succ = _restricted_succ(g, fixed)
    rank = attractor_ranks(succ, [i for i in range(g.size) if i not in minset],
                           minset, g.target_states)
    choice = dict(fixed)
    free = []
    for i in mins:
        if rank[i] is None:
            choice[i] = next(j for j in g.succ[i] if rank[j] is None)
        else:
            choice[i] = g.succ[i][0]
            free.append(i)
    seq = []
    while True:
        val = evaluate(g, choice, stats)
        if seq and val[g.start] > seq[-1]:
            raise SolverError("policy iteration value increased")
        seq.append(val[g.start])
        if not _improve(g, free, choice, val, -1):
            break
    if stats is not None:
        stats.setdefault("value_sequence", []).append(seq)
        stats["iterations"] = stats.get("iterations", 0) + len(seq)
    return val, {i: choice[i] for i in mins}


def solve_mdp(g, objective=None, stats=None):
    """Values and positional strategy of a one-player expanded game."""
    has_max = bool(g.states_of(NodeKind.MAX))
    has_min = bool(g.states_of(NodeKind.MIN))
    if has_max and has_min:
        raise ContractError("solve_mdp expects a single player kind")
    if objective is None:
        objective = "min" if has_min else "max"
    if objective == "max":
        return max_policy_iteration(g, stats=stats)
    if objective == "min":
        return min_policy_iteration(g, stats=stats)
    raise ContractError(f"unknown objective {objective!r}")


def solve_ssg(g, stats=None):
    """Values and both strategies of a two-player expanded game.

    The maximizer improves on strict gains while the minimizer plays a
    best response each round; starting from the maximizer's attractor
    strategy the start value never decreases.  The result is checked as a
    saddle point: the maximizer's best response to the final minimizer
    strategy must give the same values.
    """
    maxs = g.states_of(NodeKind.MAX)
    mins = set(g.states_of(NodeKind.MIN))
    sigma, _ = _attractor_choice(g, g.succ, maxs, mins)
    rounds = []
    while True:
        val, tau = min_policy_iteration(g, sigma, stats)
        if rounds and val[g.start] < rounds[-1]:
            raise SolverError("strategy iteration value decreased")
        rounds.append(val[g.start])
        if not _improve(g, maxs, sigma, val, 1):
            break
    check, _ = max_policy_iteration(g, tau, stats)
    if check != val:
        raise SolverError("strategy iteration did not reach a saddle point")
    if stats is not None:
        stats["rounds"] = len(rounds)
        stats["round_values"] = rounds
    return val, sigma, tau


def solve_attractor(g):
    """Values of a game without random states, all in {0, 1}."""
    maxs = g.states_of(NodeKind.MAX)
    mins = g.states_of(NodeKind.MIN)
    sigma, rank = _attractor_choice(g, g.succ, maxs, set(mins))
    tau = {}
    for i in mins:
        tau[i] = g.succ[i][0] if rank[i] is not None else next(j for j in g.succ[i] if rank[j] is None)
    val = [ONE if r is not None else ZERO for r in rank]
    return val, sigma, tau


# -- reports --------------------------------------------------------------

@dataclass
class SolveReport:
    value: Fraction
    method: str
    qual0: bool
    qual1: bool
    strategies: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    threshold: Optional[Fraction] = None

    def quant(self, p):
        return self.value > Fraction(p)

    @property
    def verdicts(self):
        out = {"qual0": self.qual0, "qual1": self.qual1}
        if self.threshold is not None:
            out["quant"] = self.quant(self.threshold)
        return out

    def to_json(self, inst):
        v = self.value
        out = {
            "value": f"{v.numerator}/{v.denominator}",
            "value_approx": float(v),
            "method": self.method,
            "verdicts": self.verdicts,
            "stats": {k: _jsonable(x) for k, x in sorted(self.stats.items())},
        }
        if self.threshold is not None:
            out["threshold"] = f"{self.threshold.numerator}/{self.threshold.denominator}"
        if self.strategies:
            out["strategies"] = {
                who: {inst.state_label(s): inst.names[w] for s, w in sorted(m.items())}
                for who, m in sorted(self.strategies.items())
            }
        return out


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (list, tuple)):
        return [_jsonable(y) for y in x]
    return x


def pick_method(inst):
    kinds = inst.kind_set
    has_max = NodeKind.MAX in kinds
    has_min = NodeKind.MIN in kinds
    if not (has_max or has_min):
        return LINEAR
    if NodeKind.RANDOM not in kinds:
        return ATTRACTOR
    if has_max and has_min:
        return STRATEGY
    return POLICY


def _state_strategy(g, choice):
    return {g.states[i]: g.states[j].vertex for i, j in sorted(choice.items())}


def solve(inst, budget=DEFAULT_BUDGET, p=None, method=None):
    """Exact value of ``inst`` with verdicts and, for games, strategies."""
    method = method or pick_method(inst)
    g = build_game_graph(inst, budget)
    stats = {"reachable_states": g.size}
    strategies = {}
    if method == LINEAR:
        if inst.has_players:
            raise ContractError("linear solve needs an instance without players")
        sys = system_from_graph(g)
        stats["retained_states"] = sys.size
        if sys.start is None:
            value = ZERO
        else:
            value = solve_chain(sys, stats)[sys.start]
    else:
        if method == ATTRACTOR:
            if NodeKind.RANDOM in inst.kind_set:
                raise ContractError("attractor method needs an instance without random nodes")
            val, sigma, tau = solve_attractor(g)
        elif method == POLICY:
            if NodeKind.MAX in inst.kind_set and NodeKind.MIN in inst.kind_set:
                raise ContractError("policy iteration needs a single player kind")
            val, choice = solve_mdp(g, stats=stats)
            sigma, tau = (choice, {}) if NodeKind.MAX in inst.kind_set else ({}, choice)
        elif method == STRATEGY:
            val, sigma, tau = solve_ssg(g, stats)
        else:
            raise ContractError(f"unknown method {method!r}")
        value = val[g.start]
        if sigma:
            strategies["max"] = _state_strategy(g, sigma)
        if tau:
            strategies["min"] = _state_strategy(g, tau)
    if not ZERO <= value <= ONE:
        raise SolverError(f"value {value} outside [0, 1]")
    k = value_denominator_bound(inst)
    if not denominator_within(value, k):
        raise SolverError("value denominator exceeds the 4^k bound")
    stats["denominator_bound_k"] = k
    return SolveReport(
        value=value,
        method=method,
        qual0=value > 0,
        qual1=value == 1,
        strategies=strategies,
        stats=stats,
        threshold=None if p is None else Fraction(p),
    )


def value(inst, budget=DEFAULT_BUDGET):
    return solve(inst, budget).value


def value_denominator_bound(inst):
    """k = 2 n |V| M^s: n the encoding size, M the longest order, s the number of switches."""
    n = encoding_size(inst)
    m = max_order_length(inst) if inst.switch_nodes else 1
    return 2 * n * (inst.n * m ** len(inst.switch_nodes))


def denominator_within(value, k):
    den = Fraction(value).denominator
    bits = den.bit_length()
    if bits <= 2 * k:
        return True
    return bits == 2 * k + 1 and den == 1 << (2 * k)


# -- decision problems ----------------------------------------------------

QUAL0 = "qual0"
QUAL1 = "qual1"
QUANT = "quant"


def qual0_fast(inst, budget=DEFAULT_BUDGET):
    """val > 0 without a minimizer: some expanded path reaches the target."""
    if NodeKind.MIN in inst.kind_set:
        raise ContractError("reachability shortcut needs an instance without min nodes")
    g = build_game_graph(inst, budget)
    return bool(g.target_states)


def decide(inst, problem, p=None, budget=DEFAULT_BUDGET):
    problem = problem.lower()
    if problem == QUANT:
        if p is None:
            raise ContractError("quant needs a threshold p")
        p = Fraction(p)
        if not 0 < p < 1:
            raise ContractError("threshold must lie strictly between 0 and 1")
        return solve(inst, budget).value > p
    if problem == QUAL0:
        exact = solve(inst, budget).value > 0
        if NodeKind.MIN not in inst.kind_set and qual0_fast(inst, budget) != exact:
            raise SolverError("reachability shortcut disagrees with the exact value")
        return exact
    if problem == QUAL1:
        exact = solve(inst, budget).value == 1
        if not inst.has_players:
            from .normalize import swap_target_dead

            via_swap = not qual0_fast(swap_target_dead(inst), budget)
            if via_swap != exact:
                raise SolverError("target/dead swap disagrees with the exact value")
        return exact
    raise ContractError(f"unknown problem {problem!r}")
