"""Generators for the hardness families.

* ``gen_double_exp``: a chain of switches that needs 2^n visits to its
  first switch, each paid for with a fair coin.
* ``gen_ssat_rs1`` / ``gen_ssat_rs2``: stochastic SAT encoded with random,
  switching and max (resp. min) nodes.
* ``gen_majsat_rs``: majority SAT encoded with random and switching nodes.

Node names are stable and readable so generated files can be diffed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ContractError
from .io import CnfFormula
from .model import InstanceBuilder, NodeKind

HALF = Fraction(1, 2)


def gen_double_exp(n):
    """Value 2^-(2^n - 1) with O(n) nodes."""
    if n < 1:
        raise ContractError("double-exp depth must be at least 1")
    b = InstanceBuilder()
    start = b.add_node("start", NodeKind.SWITCH)
    s = [b.add_node(f"s{i}", NodeKind.SWITCH) for i in range(1, n + 1)]
    x = b.add_node("x", NodeKind.RANDOM)
    t = b.add_node("target", NodeKind.TARGET)
    fail = b.add_node("fail", NodeKind.DEAD)
    b.set_order(start, [s[0]])
    for i in range(n):
        b.set_order(s[i], [x, s[i + 1] if i + 1 < n else t])
    b.add_edge(x, s[0], HALF)  # heads
    b.add_edge(x, fail, HALF)  # tails
    b.start = start
    return b.build()


def double_exp_value(n):
    return Fraction(1, 2 ** (2 ** n - 1))


@dataclass(frozen=True)
class SsatInstance:
    """exists x1, random x2, exists x3, ... over a CNF of width <= 3."""

    formula: CnfFormula

    def __post_init__(self):
        if self.formula.num_vars % 2:
            raise ContractError("stochastic SAT needs an even number of variables")
        if self.formula.width > 3:
            raise ContractError("clauses must have width at most 3")

    @classmethod
    def padded(cls, formula):
        """Append an unused randomly quantified variable when n is odd."""
        if formula.num_vars % 2:
            formula = CnfFormula(formula.num_vars + 1, formula.clauses)
        return cls(formula)

    @property
    def n(self):
        return self.formula.num_vars

    @staticmethod
    def is_random(i):
        """Variable i (1-based) is randomly quantified iff i is even."""
        return i % 2 == 0


@dataclass
class GadgetStats:
    n: int
    m: int
    a: tuple
    b: tuple
    D: int
    num_vertices: int
    num_edges: int
    order_total: int
    extra: dict = field(default_factory=dict)

    def to_json(self):
        out = {
            "n": self.n,
            "m": self.m,
            "a": list(self.a),
            "b": list(self.b),
            "D": self.D,
            "vertices": self.num_vertices,
            "edges": self.num_edges,
            "order_total": self.order_total,
        }
        out.update(self.extra)
        return out


def literal_counts(formula):
    """(a, b, D): occurrences of x_i and of not x_i, and their maximum."""
    n = formula.num_vars
    a = [0] * n
    b = [0] * n
    for c in formula.clauses:
        for x in c:
            if x > 0:
                a[x - 1] += 1
            else:
                b[-x - 1] += 1
    return tuple(a), tuple(b), max(a + b, default=0)


def _stats(inst, formula, a, b, D, **extra):
    # terminals count as one order entry each (their self-loop)
    total = inst.order_total() + len(inst.nodes_of(NodeKind.TARGET)) + len(inst.nodes_of(NodeKind.DEAD))
    return GadgetStats(
        n=formula.num_vars,
        m=formula.m,
        a=a,
        b=b,
        D=D,
        num_vertices=inst.n,
        num_edges=sum(len(s) for s in inst.succ),
        order_total=total,
        extra=extra,
    )


def _as_ssat(ssat):
    if isinstance(ssat, SsatInstance):
        return ssat
    if isinstance(ssat, CnfFormula):
        if ssat.width > 3:
            raise ContractError("clauses must have width at most 3")
        return SsatInstance.padded(ssat)
    raise ContractError("expected a CNF formula or a stochastic SAT instance")


def gen_ssat_rs1(ssat):
    """Random/switch/max instance whose value is the SSAT quantifier value.

    Layout: ``start`` cycles through n visits to ``as`` (assignment), Dn
    visits to ``ag`` (agreement), one to ``ver`` (verification) and then
    ``fail``.  Every gadget exit that returns to the control is wired
    straight to ``start``.  The consequence lists are folded into the
    orders of the literal nodes: ``xiT`` returns once, then walks the
    clauses containing not x_i, pads with visits to the relay ``negi`` and
    finally leaves through ``nexti``.
    """
    ssat = _as_ssat(ssat)
    phi = ssat.formula
    n, m = phi.num_vars, phi.m
    a, bcount, D = literal_counts(phi)
    b = InstanceBuilder()
    start = b.add_node("start", NodeKind.SWITCH)
    as_ = b.add_node("as", NodeKind.SWITCH)
    ag = b.add_node("ag", NodeKind.SWITCH)
    ver = b.add_node("ver", NodeKind.SWITCH)
    t = b.add_node("target", NodeKind.TARGET)
    fail = b.add_node("fail", NodeKind.DEAD)
    asi, agi, veri, xt, xf, nxt, pos, neg = ([] for _ in range(8))
    for i in range(1, n + 1):
        kind = NodeKind.RANDOM if ssat.is_random(i) else NodeKind.MAX
        asi.append(b.add_node(f"as{i}", kind))
        agi.append(b.add_node(f"ag{i}", NodeKind.MAX))
        veri.append(b.add_node(f"ver{i}", NodeKind.MAX))
        xt.append(b.add_node(f"x{i}T", NodeKind.SWITCH))
        xf.append(b.add_node(f"x{i}F", NodeKind.SWITCH))
        nxt.append(b.add_node(f"next{i}", NodeKind.SWITCH))
        pos.append(b.add_node(f"pos{i}", NodeKind.RANDOM))
        neg.append(b.add_node(f"neg{i}", NodeKind.RANDOM))
    cl, cfail = [], []
    for l in range(1, m + 1):
        cl.append(b.add_node(f"c{l}", NodeKind.SWITCH))
        cfail.append(b.add_node(f"fail{l}", NodeKind.SWITCH))

    b.set_order(start, [as_] * n + [ag] * (D * n) + [ver, fail])
    b.set_order(as_, asi)
    b.set_order(ag, agi)
    b.set_order(ver, [veri[0]])
    for i in range(n):
        for node in (asi[i], agi[i], veri[i]):
            if b.kinds[node] is NodeKind.RANDOM:
                b.set_uniform(node, [xt[i], xf[i]])
            else:
                b.add_edge(node, xt[i])
                b.add_edge(node, xf[i])
        # x_i true leaves the clauses holding not x_i to be checked
        neg_clauses = [cl[l] for l, c in enumerate(phi.clauses) if -(i + 1) in c]
        pos_clauses = [cl[l] for l, c in enumerate(phi.clauses) if (i + 1) in c]
        b.set_order(xt[i], [start] + neg_clauses + [neg[i]] * (D - bcount[i]) + [nxt[i]])
        b.set_order(xf[i], [start] + pos_clauses + [pos[i]] * (D - a[i]) + [nxt[i]])
        b.set_order(nxt[i], [veri[i + 1] if i + 1 < n else t])
        b.add_edge(pos[i], start, Fraction(1))
        b.add_edge(neg[i], start, Fraction(1))
    for l, c in enumerate(phi.clauses):
        w = len(c)
        # counts false literals; the w-th one is fatal
        b.set_order(cl[l], [start] * (w - 1) + [cfail[l]] * (4 - w))
        b.set_order(cfail[l], [fail])
    b.start = start
    inst = b.build()
    return inst, _stats(inst, phi, a, bcount, D)


def dualize(inst):
    from .reductions import dualize_players

    return dualize_players(inst)


def gen_ssat_rs2(ssat):
    """Min-player dual of ``gen_ssat_rs1``: value 1 - value of the original."""
    inst, _ = gen_ssat_rs1(ssat)
    return dualize(inst)


def gen_majsat_rs(formula):
    """Random/switch instance with value > 1/2 iff the CNF is satisfied by
    more than half of all assignments.

    ``start`` makes (D+1)n visits to ``as``, which cycles through the
    variable entries ``ri``; each visit draws a fresh uniform value.  The
    first visit to either literal node goes to ``consi`` whose second use
    flips a fair coin between target and fail, so any disagreement ends
    the play at value 1/2.  Further visits walk the consequence switch
    ``negi``/``posi`` through the clauses the literal does not satisfy.
    Then ``start`` visits ``ver1..verm`` and finally goes to target.
    """
    if not isinstance(formula, CnfFormula):
        raise ContractError("expected a CNF formula")
    for c in formula.clauses:
        if any(-x in c for x in c):
            raise ContractError("tautological clause")
    n, m = formula.num_vars, formula.m
    a, bcount, D = literal_counts(formula)
    b = InstanceBuilder()
    start = b.add_node("start", NodeKind.SWITCH)
    as_ = b.add_node("as", NodeKind.SWITCH)
    t = b.add_node("target", NodeKind.TARGET)
    fail = b.add_node("fail", NodeKind.DEAD)
    r, xt, xf, cons, bad, pos, neg = ([] for _ in range(7))
    for i in range(1, n + 1):
        r.append(b.add_node(f"r{i}", NodeKind.RANDOM))
        xt.append(b.add_node(f"x{i}T", NodeKind.SWITCH))
        xf.append(b.add_node(f"x{i}F", NodeKind.SWITCH))
        cons.append(b.add_node(f"cons{i}", NodeKind.SWITCH))
        bad.append(b.add_node(f"bad{i}", NodeKind.RANDOM))
        pos.append(b.add_node(f"pos{i}", NodeKind.SWITCH))
        neg.append(b.add_node(f"neg{i}", NodeKind.SWITCH))
    cl, sat, ver, cfail = [], [], [], []
    for l in range(1, m + 1):
        cl.append(b.add_node(f"c{l}", NodeKind.SWITCH))
        sat.append(b.add_node(f"sat{l}", NodeKind.SWITCH))
        ver.append(b.add_node(f"ver{l}", NodeKind.SWITCH))
        cfail.append(b.add_node(f"fail{l}", NodeKind.SWITCH))
    b.set_order(start, [as_] * ((D + 1) * n) + ver + [t])
    if n:
        b.set_order(as_, r)
    else:
        b.set_order(as_, [start])
    pad = max(D, 1)
    for i in range(n):
        b.set_uniform(r[i], [xt[i], xf[i]])
        b.set_order(xt[i], [cons[i]] + [neg[i]] * D)
        b.set_order(xf[i], [cons[i]] + [pos[i]] * D)
        b.set_order(cons[i], [start, bad[i]])
        b.set_uniform(bad[i], [t, fail])
        neg_clauses = [cl[l] for l, c in enumerate(formula.clauses) if -(i + 1) in c]
        pos_clauses = [cl[l] for l, c in enumerate(formula.clauses) if (i + 1) in c]
        b.set_order(neg[i], neg_clauses + [start] * (pad - len(neg_clauses)))
        b.set_order(pos[i], pos_clauses + [start] * (pad - len(pos_clauses)))
    for l, c in enumerate(formula.clauses):
        b.set_order(cl[l], [start] * (len(c) - 1) + [sat[l]])
        b.set_order(sat[l], [start, cfail[l]])
        b.set_order(ver[l], [sat[l]])
        b.set_order(cfail[l], [fail])
    b.start = start
    inst = b.build()
    return inst, _stats(inst, formula, a, bcount, D, verification_probability=_frac(verification_probability(formula)))


def verification_probability(formula):
    """Probability that the draws stay consistent for every variable."""
    _, _, D = literal_counts(formula)
    return Fraction(1, 2 ** (formula.num_vars * D))


def majsat_closed_form(formula, p_sat):
    """Exact value of ``gen_majsat_rs``: 1/2 + (p - 1/2) 2^{-nD}."""
    return HALF + (Fraction(p_sat) - HALF) * verification_probability(formula)


def _frac(x):
    return f"{x.numerator}/{x.denominator}"
