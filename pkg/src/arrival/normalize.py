"""Value-preserving (or affinely shifting) instance transformations.

``to_simple_form`` rewrites any instance so that apart from the target and
a dead end every vertex has exactly two distinct successors, random nodes
are fair coins and switches alternate between two successors.
"""

from __future__ import annotations

from fractions import Fraction

from .analysis import hopeful_set
from .errors import ContractError, SolverError
from .model import InstanceBuilder, NodeKind, encoding_size, max_order_length

HALF = Fraction(1, 2)


class _Work:
    """Mutable copy of an instance that supports vertex removal."""

    def __init__(self, inst):
        self.b = InstanceBuilder.from_instance(inst)
        self.alive = [True] * inst.n
        self.contractions = 0
        self.created = inst.n

    # -- helpers ----------------------------------------------------------
    def ensure_dead(self):
        b = self.b
        if b.dead is None:
            b.add_node(b.fresh_name("d"), NodeKind.DEAD)
            self.alive.append(True)
            self.created += 1
        return b.dead

    def new_node(self, stem, kind):
        v = self.b.add_node(self.b.fresh_name(stem), kind)
        self.alive.append(True)
        self.created += 1
        return v

    def preds(self, x):
        return [v for v in range(len(self.b)) if self.alive[v] and x in self.b.succ[v] and v != x]

    def replace_edge(self, v, x, w):
        """Rewire edge v->x to v->w, merging with an existing v->w."""
        b = self.b
        kind = b.kinds[v]
        i = b.succ[v].index(x)
        if kind is NodeKind.RANDOM:
            p = b.probs[v].pop(i)
            b.succ[v].pop(i)
            if w in b.succ[v]:
                b.probs[v][b.succ[v].index(w)] += p
            else:
                b.succ[v].insert(i, w)
                b.probs[v].insert(i, p)
        else:
            b.succ[v].pop(i)
            if w not in b.succ[v]:
                b.succ[v].insert(i, w)
            if kind is NodeKind.SWITCH:
                b.orders[v] = [w if u == x else u for u in b.orders[v]]

    def remove(self, x, replacement):
        """Delete x, sending its in-edges (and the start marker) to replacement."""
        for v in self.preds(x):
            self.replace_edge(v, x, replacement)
        if self.b.start == x:
            self.b.start = replacement
        self.alive[x] = False

    def build(self):
        b = self.b
        keep = [v for v in range(len(b)) if self.alive[v]]
        new = {v: i for i, v in enumerate(keep)}
        out = InstanceBuilder()
        for v in keep:
            out.add_node(b.names[v], b.kinds[v])
        for v in keep:
            nv = new[v]
            if b.kinds[v].is_terminal:
                continue
            if b.kinds[v] is NodeKind.RANDOM:
                out.succ[nv] = [new[w] for w in b.succ[v]]
                out.probs[nv] = list(b.probs[v])
            else:
                out.succ[nv] = [new[w] for w in b.succ[v]]
                if b.kinds[v] is NodeKind.SWITCH:
                    out.orders[nv] = [new[w] for w in b.orders[v]]
        out.start = new[b.start]
        return out.build()

    # -- rewriting rules, each returns True when it changed something -------
    def drop_self_loop(self, x):
        b = self.b
        kind = b.kinds[x]
        if kind.is_terminal or x not in b.succ[x]:
            return False
        if kind is NodeKind.SWITCH:
            rest = [u for u in b.orders[x] if u != x]
            if not rest:
                self.remove(x, self.ensure_dead())
                return True
            b.orders[x] = rest
            b.succ[x].remove(x)
        elif kind is NodeKind.RANDOM:
            i = b.succ[x].index(x)
            p = b.probs[x][i]
            if p == 1:
                self.remove(x, self.ensure_dead())
                return True
            b.succ[x].pop(i)
            b.probs[x].pop(i)
            b.probs[x] = [q / (1 - p) for q in b.probs[x]]
        else:
            # staying forever never reaches the target, neither does d
            self.replace_edge(x, x, self.ensure_dead())
        return True

    def contract(self, x):
        b = self.b
        if b.kinds[x].is_terminal or len(b.succ[x]) != 1:
            return False
        (w,) = b.succ[x]
        if w == x:
            return self.drop_self_loop(x)
        self.remove(x, w)
        self.contractions += 1
        return True

    def split_switch(self, x):
        b = self.b
        order = b.orders[x]
        m = len(order)
        if m == 2 and order[0] != order[1]:
            return False
        k = max(1, (m - 1).bit_length())  # 2^k >= m
        # tree node for each LSB-first bit prefix; traversal j ends in slot j
        name = b.names[x]
        nodes = {(): x}
        for depth in range(1, k):
            for p in range(2 ** depth):
                bits = tuple((p >> i) & 1 for i in range(depth))
                nodes[bits] = self.new_node(f"{name}.t{''.join(map(str, bits))}", NodeKind.SWITCH)
        slot = lambda j: order[j] if j < m else x
        for bits, v in list(nodes.items()):
            depth = len(bits)
            if depth < k - 1:
                kids = [nodes[bits + (0,)], nodes[bits + (1,)]]
            else:
                p = sum(bit << i for i, bit in enumerate(bits))
                kids = [slot(p), slot(p + 2 ** (k - 1))]
            b.succ[v] = list(dict.fromkeys(kids))
            b.orders[v] = kids
        return True

    def split_player(self, x):
        b = self.b
        out = list(b.succ[x])
        if len(out) <= 2:
            return False
        half = (len(out) + 1) // 2
        kids = []
        for part in (out[:half], out[half:]):
            if len(part) == 1:
                kids.append(part[0])
            else:
                v = self.new_node(f"{b.names[x]}.h", b.kinds[x])
                b.succ[v] = part
                kids.append(v)
        b.succ[x] = kids
        return True

    def split_random(self, x):
        b = self.b
        out, ps = list(b.succ[x]), list(b.probs[x])
        if len(out) == 2 and ps[0] == HALF:
            return False
        v, pv = out[0], ps[0]
        rest = list(zip(out[1:], ps[1:]))
        if len(rest) == 1:
            w = rest[0][0]
        else:
            w = self.new_node(f"{b.names[x]}.r", NodeKind.RANDOM)
            b.succ[w] = [u for u, _ in rest]
            b.probs[w] = [q / (1 - pv) for _, q in rest]
        a, den = pv.numerator, pv.denominator
        k = (den - 1).bit_length()  # 2^k >= den
        # uniform k-bit number r read MSB first: r < a -> v, r < den -> w, else retry
        cache = {}

        def node_for(depth, lo):
            size = 2 ** (k - depth)
            hi = lo + size
            if hi <= a:
                return v
            if lo >= a and hi <= den:
                return w
            if lo >= den:
                return x
            key = (depth, lo)
            if key not in cache:
                cache[key] = self.new_node(f"{b.names[x]}.c{depth}_{lo}", NodeKind.RANDOM)
                fill(cache[key], depth, lo)
            return cache[key]

        def fill(node, depth, lo):
            half = 2 ** (k - depth - 1)
            kids = [node_for(depth + 1, lo), node_for(depth + 1, lo + half)]
            if kids[0] == kids[1]:
                raise SolverError("coin construction produced a degenerate node")
            b.succ[node] = kids
            b.probs[node] = [HALF, HALF]

        fill(x, 0, 0)
        return True


def to_simple_form(inst):
    """Equivalent instance in simple form (see module docstring)."""
    w = _Work(inst)
    w.ensure_dead()
    while True:
        changed = False
        for x in range(len(w.b)):
            if w.alive[x] and w.drop_self_loop(x):
                changed = True
        if changed:
            continue
        for x in range(len(w.b)):
            if w.alive[x] and w.contract(x):
                changed = True
                break
        if changed:
            continue
        for x in range(len(w.b)):
            if not w.alive[x]:
                continue
            kind = w.b.kinds[x]
            if kind is NodeKind.SWITCH:
                changed = w.split_switch(x)
            elif kind.is_player:
                changed = w.split_player(x)
            elif kind is NodeKind.RANDOM:
                changed = w.split_random(x)
            if changed:
                break
        if not changed:
            break
    if w.contractions > w.created:
        raise SolverError("contraction did not terminate within the vertex bound")
    out = w.build()
    problems = simple_form_violations(out)
    if problems:
        raise SolverError("simple form not reached: " + "; ".join(problems))
    return out


def simple_form_violations(inst):
    bad = []
    if inst.dead is None:
        bad.append("no dead node")
    for v in range(inst.n):
        kind = inst.kinds[v]
        name = inst.names[v]
        if kind.is_terminal:
            continue
        out = inst.succ[v]
        if len(out) != 2 or v in out:
            bad.append(f"{name} has out-edges {len(out)}")
        elif kind is NodeKind.RANDOM and inst.probs[v] != (HALF, HALF):
            bad.append(f"{name} is not a fair coin")
        elif kind is NodeKind.SWITCH and (len(inst.orders[v]) != 2 or inst.orders[v][0] == inst.orders[v][1]):
            bad.append(f"{name} order is not two distinct entries")
    return bad


def is_simple_form(inst):
    return not simple_form_violations(inst)


def prune_dead_edges(inst):
    """Send every edge into a non-hopeful vertex to the dead end instead."""
    hope = hopeful_set(inst).hopeful
    needs = any(
        w not in hope and not inst.kinds[w] is NodeKind.DEAD
        for v in range(inst.n) if not inst.kinds[v].is_terminal
        for w in inst.succ[v]
    )
    if not needs:
        return inst
    w = _Work(inst)
    d = w.ensure_dead()
    for v in range(len(w.b)):
        if w.b.kinds[v].is_terminal:
            continue
        for u in list(w.b.succ[v]):
            if u < inst.n and u not in hope and u != d:
                w.replace_edge(v, u, d)
    return w.build()


def swap_target_dead(inst):
    """Exchange target and dead end; the value becomes 1 - value.

    Dead edges are pruned first so every remaining play terminates almost
    surely, which is what makes the identity exact.
    """
    if inst.has_players:
        raise ContractError("target/dead swap needs an instance without players")
    w = _Work(prune_dead_edges(inst))
    w.ensure_dead()
    b = w.b
    t, d = b.target, b.dead
    b.kinds[t], b.kinds[d] = NodeKind.DEAD, NodeKind.TARGET
    b.target, b.dead = d, t
    return w.build()


TO_TARGET = "to-target"
TO_DEAD = "to-dead"


def prefix_coin(inst, branch):
    """New fair-coin start: ToTarget gives (1+v)/2, ToDead gives v/2."""
    if branch not in (TO_TARGET, TO_DEAD):
        raise ContractError(f"unknown branch {branch!r}")
    w = _Work(inst)
    other = w.b.target if branch == TO_TARGET else w.ensure_dead()
    s = w.new_node(w.b.fresh_name("s'"), NodeKind.RANDOM)
    old = w.b.start
    if old == other:
        w.b.succ[s] = [old]
        w.b.probs[s] = [Fraction(1)]
    else:
        w.b.succ[s] = [old, other]
        w.b.probs[s] = [HALF, HALF]
    w.b.start = s
    return w.build()


def default_depth(inst):
    """l = 3Mn + 3n + 3 with M the longest order and n the encoding size."""
    n = encoding_size(inst)
    m = max_order_length(inst)
    return 3 * m * n + 3 * n + 3


def geq_to_strict(inst, l=None, toward_dead=False):
    """Prefix a depth-l double-exp gadget.

    With probability eps = 2^-(2^l - 1) the play jumps to the target (or to
    the dead end when ``toward_dead``), otherwise it enters ``inst``.  The
    value becomes v + eps (1 - v), respectively v - eps v.
    """
    if l is None:
        l = default_depth(inst)
    if l < 1:
        raise ContractError("depth must be at least 1")
    w = _Work(inst)
    b = w.b
    win = w.ensure_dead() if toward_dead else b.target
    old = b.start
    entry = w.new_node("eps.start", NodeKind.SWITCH)
    chain = [w.new_node(f"eps.s{i}", NodeKind.SWITCH) for i in range(1, l + 1)]
    coin = w.new_node("eps.x", NodeKind.RANDOM)
    b.set_order(entry, [chain[0]])
    for i in range(l):
        b.set_order(chain[i], [coin, chain[i + 1] if i + 1 < l else win])
    b.succ[coin] = [chain[0], old]
    b.probs[coin] = [HALF, HALF]
    b.start = entry
    return w.build()


def epsilon(l):
    return Fraction(1, 2 ** (2 ** l - 1))
