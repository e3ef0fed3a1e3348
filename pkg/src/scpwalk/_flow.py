"""Bipartite transportation feasibility by Edmonds-Karp max flow.

Works over Fractions (exact) or floats. Augmenting paths are found by BFS that
scans neighbours in index order, so the returned flow is deterministic.
"""

from collections import deque
from fractions import Fraction

FLOAT_EPS = 1e-15


class FlowResult:
    __slots__ = ("value", "flows", "source_side_left", "source_side_right")

    def __init__(self, value, flows, source_side_left, source_side_right):
        self.value = value
        self.flows = flows                      # {(i, j): amount > 0}
        self.source_side_left = source_side_left
        self.source_side_right = source_side_right


def transport(supply, demand, arcs, exact):
    """Route ``supply`` (left nodes) to ``demand`` (right nodes) along ``arcs``.

    ``arcs[i]`` lists the right nodes reachable from left node ``i``; middle
    arcs are uncapacitated. Returns the maximum flow and a min cut given as the
    left/right nodes still reachable from the source in the residual graph.
    """
    nl, nr = len(supply), len(demand)
    zero = Fraction(0) if exact else 0.0
    eps = zero if exact else FLOAT_EPS
    src, snk = nl + nr, nl + nr + 1
    big = sum(supply, zero) + 1
    # residual capacities; adjacency kept in insertion order for determinism
    cap = {}
    adj = [[] for _ in range(nl + nr + 2)]

    def add(u, v, c):
        if (u, v) not in cap:
            adj[u].append(v)
            adj[v].append(u)
            cap[(u, v)] = zero
            cap.setdefault((v, u), zero)
        cap[(u, v)] += c

    for i in range(nl):
        add(src, i, supply[i])
    for i in range(nl):
        for j in sorted(arcs[i]):
            add(i, nl + j, big)
    for j in range(nr):
        add(nl + j, snk, demand[j])
    for u in range(len(adj)):
        adj[u].sort()

    total = zero
    while True:
        parent = {src: None}
        q = deque([src])
        while q and snk not in parent:
            u = q.popleft()
            for v in adj[u]:
                if v not in parent and cap[(u, v)] > eps:
                    parent[v] = u
                    q.append(v)
        if snk not in parent:
            break
        push = None
        v = snk
        while parent[v] is not None:
            u = parent[v]
            c = cap[(u, v)]
            push = c if push is None or c < push else push
            v = u
        v = snk
        while parent[v] is not None:
            u = parent[v]
            cap[(u, v)] -= push
            cap[(v, u)] += push
            v = u
        total += push

    flows = {}
    for i in range(nl):
        for j in arcs[i]:
            f = big - cap[(i, nl + j)]
            if f > eps:
                flows[(i, j)] = f
    left = sorted(u for u in parent if u < nl)
    right = sorted(u - nl for u in parent if nl <= u < nl + nr)
    return FlowResult(total, flows, left, right)
