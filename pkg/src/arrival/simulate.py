"""Monte-Carlo estimates of values and edge traversal counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .analysis import hopeful_set
from .errors import ContractError
from .expand import DEFAULT_BUDGET, build_game_graph
from .model import KIND_CODE, GameState, NodeKind, default_step_limit

MAX_DEN = 1 << 62
# runs handed to the kernel per call; keeps the numpy path's memory flat
BATCH = 1 << 16
LIMIT_CAP = (1 << 62) - 1


def _rejection_bound(den):
    """Largest accepted 64-bit draw, or 0 when every draw is accepted."""
    rem = (1 << 64) % den
    return 0 if rem == 0 else (1 << 64) - 1 - rem


def _edge_tables(rows):
    """rows: per vertex (kind, succ, sampling entry or None, order or None)."""
    n = len(rows)
    kind = np.empty(n, np.int8)
    succ_ptr = np.zeros(n + 1, np.int64)
    order_ptr = np.zeros(n + 1, np.int64)
    for v, (k, succ, _, order) in enumerate(rows):
        kind[v] = k
        succ_ptr[v + 1] = succ_ptr[v] + len(succ)
        order_ptr[v + 1] = order_ptr[v] + (len(order) if order else 0)
    succ_idx = np.empty(succ_ptr[-1], np.int64)
    cum = np.zeros(succ_ptr[-1], np.uint64)
    den = np.ones(n, np.uint64)
    rej = np.zeros(n, np.uint64)
    order_idx = np.empty(order_ptr[-1], np.int64)
    order_edge = np.empty(order_ptr[-1], np.int64)
    for v, (k, succ, table, order) in enumerate(rows):
        base = succ_ptr[v]
        succ_idx[base:base + len(succ)] = succ
        if table is not None:
            d, c = table
            if d >= MAX_DEN:
                raise ContractError("probability denominators too large for the sampler")
            den[v] = d
            rej[v] = _rejection_bound(d)
            cum[base:base + len(c)] = c
        if order:
            pos = {w: i for i, w in enumerate(succ)}
            for i, w in enumerate(order):
                order_idx[order_ptr[v] + i] = w
                order_edge[order_ptr[v] + i] = base + pos[w]
    return dict(kind=kind, succ_ptr=succ_ptr, succ_idx=succ_idx, cum=cum, den=den, rej=rej,
                order_ptr=order_ptr, order_idx=order_idx, order_edge=order_edge)


def instance_tables(inst, choice=None):
    """Kernel tables on the original vertices; ``choice`` maps player vertex
    to its successor (positional play), default first out-edge."""
    choice = choice or {}
    rows = []
    table = inst.sampling_table
    for v in range(inst.n):
        rows.append((KIND_CODE[inst.kinds[v]], list(inst.succ[v]), table.get(v), inst.orders[v]))
    t = _edge_tables(rows)
    slot = np.full(inst.n, -1, np.int64)
    for v, j in inst.switch_slot.items():
        slot[v] = j
    ch = np.zeros(inst.n, np.int64)
    for v, w in choice.items():
        if not inst.kinds[v].is_player or w not in inst.succ[v]:
            raise ContractError(f"bad positional choice at {inst.names[v]}")
        ch[v] = inst.succ[v].index(w)
    t.update(slot=slot, choice=ch, nslots=len(inst.switch_nodes), start=inst.start)
    return t


def chain_tables(g, strategies):
    """Kernel tables on expanded states with every player state fixed.

    Switch states become single-entry switches; random states keep the
    sampling table of their vertex so the random stream matches run_play.
    """
    inst = g.inst
    table = inst.sampling_table
    rows = []
    ch = np.zeros(g.size, np.int64)
    for i in range(g.size):
        k = g.kind[i]
        succ = list(g.succ[i])
        s = g.states[i]
        if k is NodeKind.SWITCH:
            rows.append((KIND_CODE[k], succ, None, succ))
        elif k is NodeKind.RANDOM:
            rows.append((KIND_CODE[k], succ, table[s.vertex], None))
        else:
            rows.append((KIND_CODE[k], succ, None, None))
            if k.is_player and s in strategies:
                w = strategies[s]
                targets = [g.states[j].vertex for j in succ]
                if w not in targets:
                    raise ContractError(f"strategy picks a non-successor at {inst.state_label(s)}")
                ch[i] = targets.index(w)
    t = _edge_tables(rows)
    t.update(slot=np.zeros(g.size, np.int64), choice=ch, nslots=1, start=g.start)
    return t


@dataclass
class SimReport:
    samples: int
    seed: int
    reached: int
    dead: int
    truncated: int
    step_limit: int
    backend: str
    step_histogram: dict = field(default_factory=dict)
    edges: list = field(default_factory=list)
    edge_mean: dict = field(default_factory=dict)
    edge_std: dict = field(default_factory=dict)
    desperation: dict = field(default_factory=dict)
    flagged: list = field(default_factory=list)

    @property
    def reach_frequency(self):
        return Fraction(self.reached, self.samples)

    @property
    def truncation_fraction(self):
        return self.truncated / self.samples

    def bound(self, e):
        return 2 ** (self.desperation[e] + 1) - 1

    def allowance(self, e, sigmas=5.0):
        return sigmas * self.edge_std[e] / math.sqrt(self.samples)

    def to_json(self):
        f = self.reach_frequency
        out = {
            "samples": self.samples,
            "seed": self.seed,
            "reached": self.reached,
            "dead": self.dead,
            "truncated": self.truncated,
            "step_limit": self.step_limit,
            "reach_frequency": f"{f.numerator}/{f.denominator}",
            "reach_frequency_approx": float(f),
            "step_histogram": {str(k): v for k, v in sorted(self.step_histogram.items())},
        }
        if self.edge_mean:
            out["edges"] = [
                {
                    "edge": list(e),
                    "mean": self.edge_mean[e],
                    "std": self.edge_std[e],
                    **({"desperation": self.desperation[e], "bound": self.bound(e)} if e in self.desperation else {}),
                }
                for e in self.edges
            ]
            out["flagged"] = [list(e) for e in self.flagged]
        return out


def _run(tables, samples, seed, limit, count_edges, use_numba=None):
    if samples < 1:
        raise ContractError("need at least one sample")
    limit = min(limit, LIMIT_CAP)
    outs, steps = [], []
    nedges = len(tables["succ_idx"])
    tsum = np.zeros(nedges)
    tsq = np.zeros(nedges)
    for lo in range(0, samples, BATCH):
        runs = min(BATCH, samples - lo)
        o, s, a, b = _kernels.run_batch(tables, seed, lo, runs, limit, count_edges, use_numba)
        outs.append(o)
        steps.append(s)
        if count_edges:
            tsum += a
            tsq += b
    return np.concatenate(outs), np.concatenate(steps), tsum, tsq


def _histogram(steps):
    vals, counts = np.unique(steps, return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, counts)}


def estimate_value(inst, strategies=None, samples=10_000, seed=0, step_limit=None,
                   budget=DEFAULT_BUDGET, use_numba=None):
    """Fraction of seeded runs that reach the target.

    ``strategies`` may map player vertices to successors (positional) or
    expanded states to successor vertices; in the latter case sampling runs
    on the expanded chain.
    """
    limit = default_step_limit(inst) if step_limit is None else step_limit
    if limit <= 0:
        raise ContractError("step limit must be positive")
    strategies = strategies or {}
    if any(isinstance(k, GameState) for k in strategies):
        g = build_game_graph(inst, budget)
        tables = chain_tables(g, strategies)
    else:
        tables = instance_tables(inst, strategies)
    out, steps, _, _ = _run(tables, samples, seed, limit, False, use_numba)
    return SimReport(
        samples=samples,
        seed=seed,
        reached=int((out == _kernels.TARGET).sum()),
        dead=int((out == _kernels.DEAD).sum()),
        truncated=int((out == _kernels.TRUNCATED).sum()),
        step_limit=limit,
        backend=_kernels.backend() if use_numba is None else ("numba" if use_numba and _kernels.HAVE_NUMBA else "numpy"),
        step_histogram=_histogram(steps),
    )


def traversal_stats(inst, samples=10_000, seed=0, step_limit=None, sigmas=5.0, use_numba=None):
    """Mean traversal count of every edge, checked against 2^{k+1} - 1 for
    hopeful edges of desperation k.

    Meant for random/switch instances in simple form with dead edges
    pruned (see ``normalize``), where the bound is known to hold.
    """
    if inst.has_players:
        raise ContractError("traversal statistics are defined for random/switch instances only")
    limit = default_step_limit(inst) if step_limit is None else step_limit
    tables = instance_tables(inst)
    out, steps, tsum, tsq = _run(tables, samples, seed, limit, True, use_numba)
    hope = hopeful_set(inst)
    rep = SimReport(
        samples=samples,
        seed=seed,
        reached=int((out == _kernels.TARGET).sum()),
        dead=int((out == _kernels.DEAD).sum()),
        truncated=int((out == _kernels.TRUNCATED).sum()),
        step_limit=limit,
        backend=_kernels.backend() if use_numba is None else ("numba" if use_numba and _kernels.HAVE_NUMBA else "numpy"),
        step_histogram=_histogram(steps),
    )
    for eid, (v, w) in enumerate(inst.edges):
        if inst.kinds[v].is_terminal:
            continue
        e = (inst.names[v], inst.names[w])
        mean = tsum[eid] / samples
        var = max(tsq[eid] / samples - mean * mean, 0.0)
        rep.edges.append(e)
        rep.edge_mean[e] = float(mean)
        rep.edge_std[e] = math.sqrt(var)
        if w in hope.hopeful:
            rep.desperation[e] = hope.desperation[w]
            if mean > rep.bound(e) + rep.allowance(e, sigmas):
                rep.flagged.append(e)
    return rep
