"""Attractors, hopeful vertices and desperation."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import ContractError
from .model import NodeKind


def predecessors(succ):
    pred = [[] for _ in succ]
    for v, out in enumerate(succ):
        for w in out:
            pred[w].append(v)
    return pred


def attractor_ranks(succ, controlled, adversarial, target):
    """Attractor with the round in which each vertex entered it.

    Returns a list holding the rank (0 for targets) or None for vertices
    outside the attractor.  A controlled vertex of rank r > 0 has a
    successor of smaller rank; all successors of an adversarial one do.
    """
    n = len(succ)
    controlled = set(controlled)
    adversarial = set(adversarial)
    if controlled & adversarial or len(controlled) + len(adversarial) != n:
        raise ContractError("every vertex must be either controlled or adversarial")
    targets = {target} if isinstance(target, int) else set(target)
    pred = predecessors(succ)
    # successors an adversarial vertex can still escape to
    remaining = [len(set(out)) for out in succ]
    rank = [None] * n
    work = deque(sorted(targets))
    for t in targets:
        rank[t] = 0
    while work:
        w = work.popleft()
        for v in sorted(set(pred[w])):
            if rank[v] is not None:
                continue
            if v in adversarial:
                remaining[v] -= 1
                if remaining[v] > 0:
                    continue
            rank[v] = rank[w] + 1
            work.append(v)
    return rank


def attractor_reach(succ, controlled, adversarial, target):
    """Vertices from which the controller forces a visit to ``target``.

    ``succ`` is an adjacency list; ``target`` a vertex or a collection of
    vertices.  Controlled vertices need one successor in the set,
    adversarial ones need all of them.
    """
    rank = attractor_ranks(succ, controlled, adversarial, target)
    return frozenset(v for v, r in enumerate(rank) if r is not None)


def backward_reachable(succ, target):
    return attractor_reach(succ, range(len(succ)), (), target)


@dataclass(frozen=True)
class HopeReport:
    hopeful: frozenset
    desperation: dict  # vertex -> distance to target inside the hopeful set

    def edge_is_hopeful(self, v, w):
        return w in self.hopeful

    def edge_desperation(self, v, w):
        """Shortest path length from w to the target (hopeful edges only)."""
        return self.desperation[w]

    def to_json(self, inst):
        return {
            "hopeful": sorted(inst.names[v] for v in self.hopeful),
            "dead": sorted(inst.names[v] for v in range(inst.n) if v not in self.hopeful),
            "desperation": {inst.names[v]: k for v, k in sorted(self.desperation.items())},
        }


def hopeful_set(inst):
    mins = set(inst.nodes_of(NodeKind.MIN))
    others = [v for v in range(inst.n) if v not in mins]
    hopeful = attractor_reach(inst.succ, others, mins, inst.target)
    pred = predecessors(inst.succ)
    dist = {inst.target: 0}
    queue = deque([inst.target])
    while queue:
        w = queue.popleft()
        for v in pred[w]:
            if v in hopeful and v not in dist:
                dist[v] = dist[w] + 1
                queue.append(v)
    return HopeReport(hopeful, dist)
