"""Text format for instances and DIMACS CNF ingestion.

Instance grammar, one declaration per line, ``#`` starts a comment::

    node <name> kind=(random|switch|max|min|target|dead)
    edge <u> <v> [prob=<a>/<b>]
    order <v> : <u1> <u2> ...
    uniform <v>
    start <name>
    target <name>
    dead <name>

Target and dead self-loops are implicit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import ContractError, ModelError, ParseError
from .model import ArrivalInstance, InstanceBuilder, NodeKind

_KINDS = {k.value: k for k in NodeKind}


def _tokens(line):
    """Split on whitespace keeping 1-based column of each token."""
    out = []
    i = 0
    n = len(line)
    while i < n:
        if line[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not line[j].isspace():
            j += 1
        out.append((line[i:j], i + 1))
        i = j
    return out


def _parse_prob(tok, lineno, col):
    if not tok.startswith("prob="):
        raise ParseError(f"expected prob=<a>/<b>, got {tok!r}", lineno, col)
    body = tok[5:]
    num, sep, den = body.partition("/")
    if not sep or not num.isdigit() or not den.isdigit():
        raise ParseError(f"probability must be an exact a/b rational, got {body!r}", lineno, col + 5)
    if int(den) == 0:
        raise ParseError("zero denominator", lineno, col + 5)
    p = Fraction(int(num), int(den))
    if p <= 0 or p > 1:
        raise ParseError(f"probability {body} outside (0,1]", lineno, col + 5)
    return p


def parse_instance(text):
    b = InstanceBuilder()
    edges = []  # (u, v, prob, lineno, col)
    orders = []
    uniforms = []
    marks = {}
    node_line = {}

    def lookup(name, lineno, col):
        if name not in b:
            raise ParseError(f"unknown node {name!r}", lineno, col)
        return b.id(name)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        head, hcol = toks[0]
        args = toks[1:]
        if head == "node":
            if len(args) != 2 or not args[1][0].startswith("kind="):
                raise ParseError("expected: node <name> kind=<kind>", lineno, hcol)
            name = args[0][0]
            kind = _KINDS.get(args[1][0][5:])
            if kind is None:
                raise ParseError(f"unknown node kind {args[1][0][5:]!r}", lineno, args[1][1] + 5)
            if name in b:
                raise ParseError(f"duplicate node {name!r}", lineno, args[0][1])
            if kind is NodeKind.TARGET and b.target is not None:
                raise ParseError("second target node", lineno, args[0][1])
            if kind is NodeKind.DEAD and b.dead is not None:
                raise ParseError("second dead node", lineno, args[0][1])
            b.add_node(name, kind)
            node_line[name] = (lineno, args[0][1])
        elif head == "edge":
            if len(args) not in (2, 3):
                raise ParseError("expected: edge <u> <v> [prob=a/b]", lineno, hcol)
            prob = _parse_prob(args[2][0], lineno, args[2][1]) if len(args) == 3 else None
            edges.append((args[0], args[1], prob, lineno, hcol))
        elif head == "order":
            if len(args) < 2 or args[1][0] != ":":
                raise ParseError("expected: order <v> : <u1> <u2> ...", lineno, hcol)
            if len(args) == 2:
                raise ParseError("switching order must be non-empty", lineno, args[1][1])
            orders.append((args[0], args[2:], lineno))
        elif head == "uniform":
            if len(args) != 1:
                raise ParseError("expected: uniform <v>", lineno, hcol)
            uniforms.append((args[0], lineno))
        elif head in ("start", "target", "dead"):
            if len(args) != 1:
                raise ParseError(f"expected: {head} <name>", lineno, hcol)
            if head in marks:
                raise ParseError(f"{head} declared twice", lineno, hcol)
            marks[head] = (args[0], lineno)
        else:
            raise ParseError(f"unknown declaration {head!r}", lineno, hcol)

    eof = len(text.splitlines()) + 1
    # edges are resolved once all nodes are known so declarations may be in any order
    seen = set()
    explicit = {}
    uniform_names = {n for (n, _c), _l in uniforms}
    for (un, uc), (vn, vc), prob, lineno, col in edges:
        u = lookup(un, lineno, uc)
        v = lookup(vn, lineno, vc)
        kind = b.kinds[u]
        if kind.is_terminal:
            if v == u and prob is None:
                continue
            raise ParseError(f"{un}: {kind.value} nodes only have their implicit self-loop", lineno, col)
        if (u, v) in seen:
            raise ParseError(f"parallel edge {un} -> {vn}", lineno, vc)
        seen.add((u, v))
        if kind is NodeKind.RANDOM:
            explicit.setdefault(u, []).append(prob)
            if prob is None:
                if un not in uniform_names:
                    raise ParseError(f"random edge {un} -> {vn} needs prob=a/b", lineno, col)
                b.succ[u].append(v)
                continue
        elif prob is not None:
            raise ParseError(f"only random nodes carry probabilities ({un})", lineno, col)
        b.add_edge(u, v, prob)

    for (vn, vc), lineno in uniforms:
        v = lookup(vn, lineno, vc)
        if b.kinds[v] is not NodeKind.RANDOM:
            raise ParseError(f"uniform applies to random nodes, {vn} is {b.kinds[v].value}", lineno, vc)
        if any(p is not None for p in explicit.get(v, [])):
            raise ParseError(f"{vn}: uniform conflicts with explicit probabilities", lineno, vc)
        k = len(b.succ[v])
        if k == 0:
            raise ParseError(f"{vn}: uniform node has no out-edges", lineno, vc)
        b.probs[v] = [Fraction(1, k)] * k

    for (vn, vc), entries, lineno in orders:
        v = lookup(vn, lineno, vc)
        if b.kinds[v] is not NodeKind.SWITCH:
            raise ParseError(f"order given for non-switch node {vn}", lineno, vc)
        if b.orders[v]:
            raise ParseError(f"order for {vn} declared twice", lineno, vc)
        seq = []
        for en, ec in entries:
            w = lookup(en, lineno, ec)
            if w not in b.succ[v]:
                raise ParseError(f"order entry not an edge: {vn} -> {en}", lineno, ec)
            seq.append(w)
        b.orders[v] = seq

    for head in ("start", "target", "dead"):
        if head not in marks:
            if head == "dead":
                continue
            raise ParseError(f"missing {head} declaration", eof, 1)
        (name, col), lineno = marks[head]
        v = lookup(name, lineno, col)
        if head == "start":
            b.start = v
        elif head == "target" and v != b.target:
            raise ParseError(f"target {name} is not the node of kind target", lineno, col)
        elif head == "dead" and v != b.dead:
            raise ParseError(f"dead {name} is not the node of kind dead", lineno, col)

    # row-level checks point at the node declaration
    for v in range(len(b)):
        kind = b.kinds[v]
        where = node_line[b.names[v]]
        if kind is NodeKind.RANDOM and b.succ[v] and sum(b.probs[v]) != 1:
            raise ParseError(f"probabilities of {b.names[v]} sum to {sum(b.probs[v])}, not 1", *where)
        if kind is NodeKind.SWITCH:
            if not b.orders[v]:
                raise ParseError(f"switch node {b.names[v]} has no order", *where)
            missing = set(b.succ[v]) - set(b.orders[v])
            if missing:
                names = " ".join(b.names[w] for w in sorted(missing))
                raise ParseError(f"edges of {b.names[v]} never used by its order: {names}", *where)
    try:
        return b.build()
    except ModelError as e:
        raise ParseError(str(e), eof, 1) from None


def serialize_instance(inst):
    """Canonical text: nodes in id order, exact rationals."""
    lines = []
    for v in range(inst.n):
        lines.append(f"node {inst.names[v]} kind={inst.kinds[v].value}")
    for v in range(inst.n):
        kind = inst.kinds[v]
        if kind.is_terminal:
            continue
        for i, w in enumerate(inst.succ[v]):
            if kind is NodeKind.RANDOM:
                p = inst.probs[v][i]
                lines.append(f"edge {inst.names[v]} {inst.names[w]} prob={p.numerator}/{p.denominator}")
            else:
                lines.append(f"edge {inst.names[v]} {inst.names[w]}")
    for v in inst.switch_nodes:
        lines.append(f"order {inst.names[v]} : " + " ".join(inst.names[w] for w in inst.orders[v]))
    lines.append(f"start {inst.names[inst.start]}")
    lines.append(f"target {inst.names[inst.target]}")
    if inst.dead is not None:
        lines.append(f"dead {inst.names[inst.dead]}")
    return "\n".join(lines) + "\n"


def read_instance(path):
    with open(path) as fh:
        return parse_instance(fh.read())


def write_instance(inst, path):
    with open(path, "w") as fh:
        fh.write(serialize_instance(inst))


# -- DIMACS ------------------------------------------------------------------

@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple

    def __post_init__(self):
        for c in self.clauses:
            if not c:
                raise ModelError("empty clause")
            vs = [abs(x) for x in c]
            if len(set(vs)) != len(vs):
                raise ModelError(f"variable repeated in clause {c}")
            if any(x == 0 or abs(x) > self.num_vars for x in c):
                raise ModelError(f"literal out of range in clause {c}")

    @property
    def m(self):
        return len(self.clauses)

    @property
    def width(self):
        return max((len(c) for c in self.clauses), default=0)

    def to_dimacs(self):
        rows = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        rows += [" ".join(str(x) for x in c) + " 0" for c in self.clauses]
        return "\n".join(rows) + "\n"

    def satisfied_by(self, assignment):
        """``assignment[i]`` is the truth value of variable i+1."""
        return all(any(assignment[abs(x) - 1] == (x > 0) for x in c) for c in self.clauses)


def parse_dimacs(text):
    header = None
    lits = []
    positions = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise ParseError("second problem line", lineno, 1)
            if len(parts) != 4 or parts[1] != "cnf" or not parts[2].isdigit() or not parts[3].isdigit():
                raise ParseError("malformed header, expected 'p cnf <vars> <clauses>'", lineno, 1)
            header = (int(parts[2]), int(parts[3]))
            header_line = lineno
            continue
        if header is None:
            raise ParseError("clause before 'p cnf' header", lineno, 1)
        for tok, col in _tokens(line):
            try:
                x = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", lineno, col) from None
            if abs(x) > header[0]:
                raise ParseError(f"literal {x} out of range 1..{header[0]}", lineno, col)
            lits.append(x)
            positions.append((lineno, col))
    if header is None:
        raise ParseError("missing 'p cnf' header", len(text.splitlines()) + 1, 1)
    clauses = []
    cur = []
    start_pos = None
    for x, pos in zip(lits, positions):
        if start_pos is None:
            start_pos = pos
        if x == 0:
            if not cur:
                raise ParseError("empty clause", *pos)
            dedup = tuple(dict.fromkeys(cur))
            if any(-y in dedup for y in dedup):
                raise ParseError("tautological clause (complementary literals)", *start_pos)
            clauses.append(dedup)
            cur = []
            start_pos = None
        else:
            cur.append(x)
    if cur:
        raise ParseError("last clause is not terminated by 0", *positions[-1])
    if len(clauses) != header[1]:
        raise ParseError(f"header announces {header[1]} clauses, found {len(clauses)}", header_line, 1)
    return CnfFormula(header[0], tuple(clauses))


def satisfying_fraction(formula):
    """Fraction of the 2^n assignments satisfying ``formula`` (brute force)."""
    n = formula.num_vars
    if n > 24:
        raise ContractError("brute-force satisfying fraction limited to 24 variables")
    count = sum(formula.satisfied_by(a) for a in itertools.product((False, True), repeat=n))
    return Fraction(count, 2 ** n)
