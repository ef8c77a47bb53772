"""Seeded random instances and formulas for tests and benchmarks."""

from __future__ import annotations

import random
from fractions import Fraction

from .io import CnfFormula
from .model import InstanceBuilder, NodeKind

_PROBS = [Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(1, 4), Fraction(3, 4), Fraction(2, 5)]


def random_simple_rs(rng, n_internal=None, max_switches=4):
    """Simple-form random/switch instance: t, d and up to 6 internal nodes,
    each with two distinct successors other than itself."""
    if n_internal is None:
        n_internal = rng.randint(1, 6)
    b = InstanceBuilder()
    t = b.add_node("t", NodeKind.TARGET)
    d = b.add_node("d", NodeKind.DEAD)
    n_sw = rng.randint(0, min(max_switches, n_internal))
    kinds = [NodeKind.SWITCH] * n_sw + [NodeKind.RANDOM] * (n_internal - n_sw)
    rng.shuffle(kinds)
    ids = [b.add_node(f"v{i}", k) for i, k in enumerate(kinds)]
    for v in ids:
        a, c = rng.sample([u for u in [t, d] + ids if u != v], 2)
        if b.kinds[v] is NodeKind.SWITCH:
            b.set_order(v, [a, c])
        else:
            b.set_uniform(v, [a, c])
    b.start = ids[0]
    return b.build()


def random_instance(rng, n_internal=None, kinds=(NodeKind.RANDOM, NodeKind.SWITCH), max_switches=3,
                    max_degree=3, max_order=3, with_dead=True, rational=True):
    """General-form instance over the given node kinds.

    Out-degrees up to ``max_degree``, switching orders up to ``max_order``
    entries (with repeats), arbitrary rational probabilities and self-loops.
    """
    if n_internal is None:
        n_internal = rng.randint(1, 5)
    b = InstanceBuilder()
    t = b.add_node("t", NodeKind.TARGET)
    d = b.add_node("d", NodeKind.DEAD) if with_dead else None
    chosen = []
    n_sw = 0
    for i in range(n_internal):
        k = rng.choice(kinds)
        if k is NodeKind.SWITCH:
            if n_sw >= max_switches:
                k = next((x for x in kinds if x is not NodeKind.SWITCH), NodeKind.RANDOM)
            else:
                n_sw += 1
        chosen.append(k)
    ids = [b.add_node(f"v{i}", k) for i, k in enumerate(chosen)]
    pool = [t] + ([d] if d is not None else []) + ids
    for v in ids:
        deg = rng.randint(1, min(max_degree, len(pool)))
        succ = rng.sample(pool, deg)
        k = b.kinds[v]
        if k is NodeKind.SWITCH:
            length = rng.randint(deg, max(deg, max_order))
            order = succ + [rng.choice(succ) for _ in range(length - deg)]
            rng.shuffle(order)
            b.set_order(v, order)
        elif k is NodeKind.RANDOM:
            if rational and deg > 1:
                weights = [rng.randint(1, 4) for _ in succ]
                tot = sum(weights)
                for w, x in zip(succ, weights):
                    b.add_edge(v, w, Fraction(x, tot))
            else:
                b.set_uniform(v, succ)
        else:
            for w in succ:
                b.add_edge(v, w)
    b.start = ids[0]
    return b.build()


def random_cnf(rng, n, m, width=3):
    clauses = []
    for _ in range(m):
        k = rng.randint(1, min(width, n))
        vs = rng.sample(range(1, n + 1), k)
        clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
    return CnfFormula(n, tuple(clauses))


def rng_for(seed):
    return random.Random(seed)
